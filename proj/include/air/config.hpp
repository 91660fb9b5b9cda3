#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "air/corpus.hpp"
#include "air/iir.hpp"
#include "air/jsonl.hpp"
#include "air/llm.hpp"
#include "air/sampler.hpp"

namespace air {

struct CorpusConfig {
    std::string input;
    IngestFormat format = IngestFormat::jsonl;
    int min_words = 50;
    int max_words = 2048;
    int para_repeat_max = 2;
    int char_run_max = 8;

    FilterConfig filter_config() const {
        return {min_words, max_words, para_repeat_max, char_run_max};
    }
};

struct SampleConfig {
    long long n = 10000;
    uint64_t seed = 17;
    SampleStrategy strategy = SampleStrategy::chain;
};

struct IigConfig {
    int score_threshold = 4;
    std::vector<std::string> rubric;  // empty = built-in 5 aspects
};

struct IirConfig {
    int iterations = 5;
    JudgmentMode mode = JudgmentMode::judge_doc_ref;
    bool check_enabled = true;
    ConstraintSetChoice constraint_set = ConstraintSetChoice::auto_select;
    bool reuse_post_check_response = false;
    ResponseSource response_source = ResponseSource::regenerated;
};

struct StatsConfig {
    std::vector<std::string> domain_labels;  // empty = built-in 20 domains
    int length_bin_width = 20;
};

enum class BackendKind { http, mock };

struct LlmConfig {
    BackendKind backend = BackendKind::http;
    std::string mock_script;  // required for backend = mock
    int max_attempts = 3;
    int retry_base_ms = 250;
    double retry_multiplier = 2.0;
    double requests_per_minute = 0.0;  // token bucket per endpoint; 0 = off
    int max_in_flight = 0;             // per endpoint; 0 = unbounded
    std::string template_dir;          // optional prompt overrides
};

enum class EmbeddingBackendKind { local_hash, http };

struct EmbeddingConfig {
    EmbeddingBackendKind backend = EmbeddingBackendKind::local_hash;
    int local_dim = 64;
    ModelRole role;  // used for backend = http
};

struct PipelineConfig {
    std::string run_id = "air-run";
    std::string out_dir = "out";
    int workers = 4;

    CorpusConfig corpus;
    SampleConfig sample;
    IigConfig iig;
    IirConfig iir;
    StatsConfig stats;
    LlmConfig llm;
    EmbeddingConfig embedding;
    ModelRole guidance;
    ModelRole current;
};

PipelineConfig default_config();

// Reads .toml or .json by extension. Unknown keys are errors.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const Json& doc);

// Canonical serialization; also the basis of the config hash.
Json to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

// Structural and semantic checks; empty = valid.
std::vector<std::string> validate_config(const PipelineConfig& config);

}  // namespace air
