#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "air/config.hpp"
#include "air/corpus.hpp"
#include "air/iig.hpp"
#include "air/iir.hpp"
#include "air/llm.hpp"
#include "air/store.hpp"

namespace air {

// Owns the backend, audit sink, gateway and embedding provider for one run.
struct Services {
    std::shared_ptr<ChatBackend> backend;
    std::shared_ptr<AuditSink> audit;
    std::unique_ptr<LlmGateway> gateway;
    std::unique_ptr<EmbeddingProvider> embedder;
};

// audit_path empty = in-process only (no audit file).
Services build_services(const PipelineConfig& config,
                        const std::filesystem::path& audit_path = {});

struct RunOptions {
    int workers = 0;  // 0 = config value
    bool dry_run = false;
    bool resume = true;
    std::ostream* log = nullptr;  // progress + budget lines
};

struct PipelineResult {
    bool ok = false;
    RunManifest manifest;
    std::string failed_stage;
    std::string error;
};

// corpus -> sample -> iig -> refine -> export -> stats, with hash-based
// resume and per-stage call budgets.
PipelineResult run_all(const PipelineConfig& config, const RunOptions& options = {});
PipelineResult run_all(const PipelineConfig& config, Services& services,
                       const RunOptions& options = {});

// Exact logical calls per document entering each stage (retries excluded).
struct StageBudget {
    std::string stage;
    long long docs = 0;
    long long calls_per_doc = 0;

    long long total() const { return docs * calls_per_doc; }
};

long long iir_loop_calls_per_doc(const IirConfig& config);
long long export_calls_per_doc(const IirConfig& config);
std::vector<StageBudget> compute_budget(const PipelineConfig& config, long long sampled_docs);

// Stage file names under the run's out_dir.
namespace stage_files {
inline constexpr const char* kFiltered = "filtered.jsonl";
inline constexpr const char* kFilterReport = "filter_report.jsonl";
inline constexpr const char* kEmbeddings = "embeddings.jsonl";
inline constexpr const char* kSelected = "selected.jsonl";
inline constexpr const char* kIig = "iig.jsonl";
inline constexpr const char* kIigDrops = "iig_drops.jsonl";
inline constexpr const char* kTraces = "traces.jsonl";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kAudit = "audit.jsonl";
inline constexpr const char* kStatsDir = "stats";
}  // namespace stage_files

// Stage-file readers shared by run_all and the per-stage CLI commands.
std::vector<Document> read_documents_jsonl(const std::filesystem::path& path);
std::vector<IigItem> read_iig_jsonl(const std::filesystem::path& path);
std::vector<RefinementTrace> read_traces_jsonl(const std::filesystem::path& path);
std::vector<DatasetSample> read_dataset_jsonl(const std::filesystem::path& path);

DatasetSample dataset_sample_from_json(const Json& j);

}  // namespace air
