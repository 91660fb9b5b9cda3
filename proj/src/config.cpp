#include "air/config.hpp"

#include <fstream>
#include <set>

#include "air/errors.hpp"
#include "air/hash.hpp"
#include "air/iig.hpp"
#include "air/stats.hpp"
#include "air/toml.hpp"

namespace air {

PipelineConfig default_config() {
    PipelineConfig config;
    config.iig.rubric = default_rubric();
    config.stats.domain_labels = default_domain_labels();
    config.guidance = ModelRole{ModelKind::guidance, "guidance-model", "http://localhost:8000/v1",
                                "AIR_GUIDANCE_API_KEY", 2048, 0.7};
    config.current = ModelRole{ModelKind::current, "current-model", "http://localhost:8001/v1",
                               "AIR_CURRENT_API_KEY", 2048, 0.7};
    config.embedding.role = ModelRole{ModelKind::embedding, "all-MiniLM-L6-v2",
                                      "http://localhost:8002/v1", "AIR_EMBEDDING_API_KEY", 0, 0.0};
    return config;
}

namespace {

class Reader {
public:
    Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected a table");
    }

    ~Reader() = default;

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!node_.contains(key)) return;
        try {
            out = node_[key].get<T>();
        } catch (const Json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    void get_string_list(const char* key, std::vector<std::string>& out) {
        seen_.insert(key);
        if (!node_.contains(key)) return;
        if (!node_[key].is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
        out.clear();
        for (const Json& item : node_[key]) {
            if (!item.is_string()) {
                throw ConfigError(path_ + "." + key + ": expected string entries");
            }
            out.push_back(item.get<std::string>());
        }
    }

    const Json* table(const char* key) {
        seen_.insert(key);
        if (!node_.contains(key)) return nullptr;
        return &node_[key];
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(path_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    const Json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string& value, std::optional<Enum> (*parser)(std::string_view),
                const std::string& where) {
    auto parsed = parser(value);
    if (!parsed) throw ConfigError(where + ": unrecognized value '" + value + "'");
    return *parsed;
}

ModelRole role_from_json(const Json& node, ModelKind kind, const std::string& path,
                         const ModelRole& defaults) {
    Reader reader(node, path);
    ModelRole role = defaults;
    role.kind = kind;
    reader.get("model", role.model_name);
    reader.get("endpoint", role.endpoint);
    reader.get("api_key_env", role.api_key_env);
    reader.get("max_tokens", role.max_tokens);
    reader.get("temperature", role.temperature);
    reader.finish();
    return role;
}

}  // namespace

PipelineConfig config_from_json(const Json& doc) {
    PipelineConfig config = default_config();
    Reader root(doc, "config");

    if (auto run = root.table("run")) {
        Reader reader(*run, "run");
        reader.get("run_id", config.run_id);
        reader.get("out_dir", config.out_dir);
        reader.get("workers", config.workers);
        reader.finish();
    }
    if (auto corpus = root.table("corpus")) {
        Reader reader(*corpus, "corpus");
        reader.get("input", config.corpus.input);
        std::string format = "jsonl";
        reader.get("format", format);
        if (format == "jsonl") {
            config.corpus.format = IngestFormat::jsonl;
        } else if (format == "plain_dir") {
            config.corpus.format = IngestFormat::plain_dir;
        } else {
            throw ConfigError("corpus.format: unrecognized value '" + format + "'");
        }
        reader.get("min_words", config.corpus.min_words);
        reader.get("max_words", config.corpus.max_words);
        reader.get("para_repeat_max", config.corpus.para_repeat_max);
        reader.get("char_run_max", config.corpus.char_run_max);
        reader.finish();
    }
    if (auto sample = root.table("sample")) {
        Reader reader(*sample, "sample");
        reader.get("n", config.sample.n);
        reader.get("seed", config.sample.seed);
        std::string strategy = "chain";
        reader.get("strategy", strategy);
        if (strategy == "chain") {
            config.sample.strategy = SampleStrategy::chain;
        } else if (strategy == "min-to-set") {
            config.sample.strategy = SampleStrategy::min_to_set;
        } else {
            throw ConfigError("sample.strategy: unrecognized value '" + strategy + "'");
        }
        reader.finish();
    }
    if (auto iig = root.table("iig")) {
        Reader reader(*iig, "iig");
        reader.get("score_threshold", config.iig.score_threshold);
        reader.get_string_list("rubric", config.iig.rubric);
        reader.finish();
    }
    if (auto iir = root.table("iir")) {
        Reader reader(*iir, "iir");
        reader.get("iterations", config.iir.iterations);
        std::string mode;
        reader.get("mode", mode);
        if (!mode.empty()) {
            config.iir.mode = parse_enum(mode, &judgment_mode_from_string, "iir.mode");
        }
        reader.get("check", config.iir.check_enabled);
        std::string set_choice;
        reader.get("constraint_set", set_choice);
        if (!set_choice.empty()) {
            config.iir.constraint_set =
                parse_enum(set_choice, &constraint_set_from_string, "iir.constraint_set");
        }
        reader.get("reuse_post_check_response", config.iir.reuse_post_check_response);
        std::string source;
        reader.get("response_source", source);
        if (!source.empty()) {
            config.iir.response_source =
                parse_enum(source, &response_source_from_string, "iir.response_source");
        }
        reader.finish();
    }
    if (auto stats = root.table("stats")) {
        Reader reader(*stats, "stats");
        reader.get_string_list("domain_labels", config.stats.domain_labels);
        reader.get("length_bin_width", config.stats.length_bin_width);
        reader.finish();
    }
    if (auto llm = root.table("llm")) {
        Reader reader(*llm, "llm");
        std::string backend = "http";
        reader.get("backend", backend);
        if (backend == "http") {
            config.llm.backend = BackendKind::http;
        } else if (backend == "mock") {
            config.llm.backend = BackendKind::mock;
        } else {
            throw ConfigError("llm.backend: unrecognized value '" + backend + "'");
        }
        reader.get("mock_script", config.llm.mock_script);
        reader.get("max_attempts", config.llm.max_attempts);
        reader.get("retry_base_ms", config.llm.retry_base_ms);
        reader.get("retry_multiplier", config.llm.retry_multiplier);
        reader.get("requests_per_minute", config.llm.requests_per_minute);
        reader.get("max_in_flight", config.llm.max_in_flight);
        reader.get("template_dir", config.llm.template_dir);
        reader.finish();
    }
    if (auto models = root.table("models")) {
        Reader reader(*models, "models");
        if (auto guidance = reader.table("guidance")) {
            config.guidance = role_from_json(*guidance, ModelKind::guidance, "models.guidance",
                                             config.guidance);
        }
        if (auto current = reader.table("current")) {
            config.current =
                role_from_json(*current, ModelKind::current, "models.current", config.current);
        }
        if (auto embedding = reader.table("embedding")) {
            Reader emb(*embedding, "models.embedding");
            std::string backend = "local-hash";
            emb.get("backend", backend);
            if (backend == "local-hash") {
                config.embedding.backend = EmbeddingBackendKind::local_hash;
            } else if (backend == "http") {
                config.embedding.backend = EmbeddingBackendKind::http;
            } else {
                throw ConfigError("models.embedding.backend: unrecognized value '" + backend +
                                  "'");
            }
            emb.get("local_dim", config.embedding.local_dim);
            emb.get("model", config.embedding.role.model_name);
            emb.get("endpoint", config.embedding.role.endpoint);
            emb.get("api_key_env", config.embedding.role.api_key_env);
            emb.finish();
        }
        reader.finish();
    }
    root.finish();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    if (path.extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path.string());
        Json doc = Json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw ConfigError("invalid JSON config: " + path.string());
        return config_from_json(doc);
    }
    return config_from_json(parse_toml_file(path));
}

Json to_json(const PipelineConfig& config) {
    Json models{{"guidance",
                 Json{{"model", config.guidance.model_name},
                      {"endpoint", config.guidance.endpoint},
                      {"api_key_env", config.guidance.api_key_env},
                      {"max_tokens", config.guidance.max_tokens},
                      {"temperature", config.guidance.temperature}}},
                {"current",
                 Json{{"model", config.current.model_name},
                      {"endpoint", config.current.endpoint},
                      {"api_key_env", config.current.api_key_env},
                      {"max_tokens", config.current.max_tokens},
                      {"temperature", config.current.temperature}}},
                {"embedding",
                 Json{{"backend", config.embedding.backend == EmbeddingBackendKind::local_hash
                                      ? "local-hash"
                                      : "http"},
                      {"local_dim", config.embedding.local_dim},
                      {"model", config.embedding.role.model_name},
                      {"endpoint", config.embedding.role.endpoint},
                      {"api_key_env", config.embedding.role.api_key_env}}}};
    return Json{
        {"run", Json{{"run_id", config.run_id},
                     {"out_dir", config.out_dir},
                     {"workers", config.workers}}},
        {"corpus",
         Json{{"input", config.corpus.input},
              {"format", config.corpus.format == IngestFormat::jsonl ? "jsonl" : "plain_dir"},
              {"min_words", config.corpus.min_words},
              {"max_words", config.corpus.max_words},
              {"para_repeat_max", config.corpus.para_repeat_max},
              {"char_run_max", config.corpus.char_run_max}}},
        {"sample",
         Json{{"n", config.sample.n},
              {"seed", config.sample.seed},
              {"strategy",
               config.sample.strategy == SampleStrategy::chain ? "chain" : "min-to-set"}}},
        {"iig",
         Json{{"score_threshold", config.iig.score_threshold}, {"rubric", config.iig.rubric}}},
        {"iir", Json{{"iterations", config.iir.iterations},
                     {"mode", std::string(to_string(config.iir.mode))},
                     {"check", config.iir.check_enabled},
                     {"constraint_set", std::string(to_string(config.iir.constraint_set))},
                     {"reuse_post_check_response", config.iir.reuse_post_check_response},
                     {"response_source", std::string(to_string(config.iir.response_source))}}},
        {"stats", Json{{"domain_labels", config.stats.domain_labels},
                       {"length_bin_width", config.stats.length_bin_width}}},
        {"llm", Json{{"backend", config.llm.backend == BackendKind::http ? "http" : "mock"},
                     {"mock_script", config.llm.mock_script},
                     {"max_attempts", config.llm.max_attempts},
                     {"retry_base_ms", config.llm.retry_base_ms},
                     {"retry_multiplier", config.llm.retry_multiplier},
                     {"requests_per_minute", config.llm.requests_per_minute},
                     {"max_in_flight", config.llm.max_in_flight},
                     {"template_dir", config.llm.template_dir}}},
        {"models", models}};
}

std::string config_hash(const PipelineConfig& config) {
    return sha256_hex(to_json(config).dump());
}

std::vector<std::string> validate_config(const PipelineConfig& config) {
    std::vector<std::string> errors;
    if (config.run_id.empty()) errors.push_back("run.run_id must be non-empty");
    if (config.out_dir.empty()) errors.push_back("run.out_dir must be non-empty");
    if (config.workers < 1) errors.push_back("run.workers must be >= 1");
    if (config.corpus.min_words < 0) errors.push_back("corpus.min_words must be >= 0");
    if (config.corpus.min_words > config.corpus.max_words) {
        errors.push_back("corpus.min_words must be <= corpus.max_words");
    }
    if (config.corpus.para_repeat_max < 2) {
        errors.push_back("corpus.para_repeat_max must be >= 2");
    }
    if (config.corpus.char_run_max < 2) errors.push_back("corpus.char_run_max must be >= 2");
    if (config.sample.n < 1) errors.push_back("sample.n must be >= 1");
    if (config.iig.score_threshold < 1 || config.iig.score_threshold > 5) {
        errors.push_back("iig.score_threshold out of range [1,5]");
    }
    if (!config.iig.rubric.empty() && config.iig.rubric.size() != 5) {
        errors.push_back("iig.rubric must list exactly 5 aspects");
    }
    if (config.iir.iterations < 0) errors.push_back("iir.iterations must be >= 0");
    if (config.iir.constraint_set == ConstraintSetChoice::c_n_prime &&
        !config.iir.check_enabled) {
        errors.push_back("iir.constraint_set = cn-prime requires iir.check = true");
    }
    if (config.stats.length_bin_width < 1) {
        errors.push_back("stats.length_bin_width must be >= 1");
    }
    if (config.stats.domain_labels.empty()) {
        errors.push_back("stats.domain_labels must be non-empty");
    }
    if (config.llm.backend == BackendKind::mock && config.llm.mock_script.empty()) {
        errors.push_back("llm.backend = mock requires llm.mock_script");
    }
    if (config.llm.max_attempts < 1) errors.push_back("llm.max_attempts must be >= 1");
    if (config.llm.requests_per_minute < 0) {
        errors.push_back("llm.requests_per_minute must be >= 0");
    }
    if (config.llm.max_in_flight < 0) errors.push_back("llm.max_in_flight must be >= 0");
    if (config.llm.backend == BackendKind::http) {
        if (config.guidance.endpoint.empty()) errors.push_back("models.guidance.endpoint missing");
        if (config.current.endpoint.empty()) errors.push_back("models.current.endpoint missing");
    }
    if (config.embedding.backend == EmbeddingBackendKind::http &&
        config.embedding.role.endpoint.empty()) {
        errors.push_back("models.embedding.endpoint missing for http backend");
    }
    if (config.embedding.backend == EmbeddingBackendKind::local_hash &&
        config.embedding.local_dim < 2) {
        errors.push_back("models.embedding.local_dim must be >= 2");
    }
    if (config.guidance.temperature < 0) errors.push_back("models.guidance.temperature < 0");
    if (config.current.temperature < 0) errors.push_back("models.current.temperature < 0");
    return errors;
}

}  // namespace air
