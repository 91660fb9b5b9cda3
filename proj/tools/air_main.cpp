// air: batch pipeline that turns a raw document corpus into a complex-
// instruction fine-tuning dataset via back-translation and judged iterative
// constraint refinement.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <unordered_map>

#include "air/config.hpp"
#include "air/errors.hpp"
#include "air/parallel.hpp"
#include "air/pipeline.hpp"
#include "air/sampler.hpp"
#include "air/stats.hpp"
#include "air/version.hpp"

namespace {

using namespace air;

void handle_sigint(int) {
    interrupt_flag().store(true);
}

PipelineConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return default_config();
    return load_config(config_path);
}

int fail(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 1;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<Json>& records) {
    atomic_write_text(path, dump_jsonl(records));
}

int cmd_corpus_filter(const std::string& in, const std::string& out, const std::string& report,
                      const std::string& format, FilterConfig filter) {
    IngestFormat ingest_format;
    if (format == "jsonl") {
        ingest_format = IngestFormat::jsonl;
    } else if (format == "plain_dir") {
        ingest_format = IngestFormat::plain_dir;
    } else {
        return fail("unknown --format: " + format);
    }
    IngestResult ingested = ingest(in, ingest_format);
    for (const SkippedLine& skip : ingested.skipped) {
        std::cerr << "skipped line " << skip.line << ": " << skip.message << "\n";
    }
    FilterOutcome outcome = run_filters(ingested.docs, filter);
    std::vector<Json> docs_json;
    for (const Document& doc : outcome.kept) docs_json.push_back(to_json(doc));
    write_jsonl_file(out, docs_json);
    if (!report.empty()) {
        std::vector<Json> reports_json;
        for (const FilterReport& r : outcome.reports) reports_json.push_back(to_json(r));
        write_jsonl_file(report, reports_json);
    }
    std::cout << ingested.docs.size() << " documents in, " << outcome.kept.size() << " kept, "
              << ingested.skipped.size() << " lines skipped\n";
    return 0;
}

int cmd_sample(const PipelineConfig& config, const std::string& in, const std::string& out,
               const std::string& cache, long long n, uint64_t seed,
               const std::string& strategy) {
    std::vector<Document> docs = read_documents_jsonl(in);
    if (docs.empty()) return fail("no documents in " + in);
    SampleStrategy sample_strategy;
    if (strategy == "chain") {
        sample_strategy = SampleStrategy::chain;
    } else if (strategy == "min-to-set") {
        sample_strategy = SampleStrategy::min_to_set;
    } else {
        return fail("unknown --strategy: " + strategy);
    }
    Services services = build_services(config);
    EmbedOptions embed_options;
    if (!cache.empty()) embed_options.cache_path = cache;
    embed_options.workers = config.workers;
    std::vector<EmbeddedDoc> pool = embed_all(docs, *services.embedder, embed_options);
    SampleSelection selection =
        density_sample(pool, static_cast<std::size_t>(n), seed, sample_strategy);
    if (selection.truncated) {
        std::cerr << "warning: requested " << n << " > pool of " << pool.size()
                  << "; selecting all\n";
    }
    std::unordered_map<std::string, const Document*> by_id;
    for (const Document& doc : docs) by_id[doc.id] = &doc;
    std::vector<Json> selected_json;
    for (const std::string& id : selection.selected_ids) {
        selected_json.push_back(to_json(*by_id.at(id)));
    }
    write_jsonl_file(out, selected_json);
    std::cout << selection.selected_ids.size() << " documents selected\n";
    return 0;
}

int cmd_iig(const PipelineConfig& config, const std::string& in, const std::string& out,
            const std::string& drops_path, int threshold) {
    std::vector<Document> docs = read_documents_jsonl(in);
    Services services = build_services(config);
    services.gateway->begin_stage("iig", static_cast<long long>(docs.size()) * 6);
    IigOptions options;
    options.score_threshold = threshold;
    options.rubric = config.iig.rubric;
    options.workers = config.workers;
    IigResult result = run_iig_stage(*services.gateway, config.guidance, docs, options);
    std::vector<Json> items_json;
    for (const IigItem& item : result.items) items_json.push_back(to_json(item));
    write_jsonl_file(out, items_json);
    if (!drops_path.empty()) {
        std::vector<Json> drops_json;
        for (const IigDrop& drop : result.drops) drops_json.push_back(to_json(drop));
        write_jsonl_file(drops_path, drops_json);
    }
    std::size_t kept = 0;
    for (const IigItem& item : result.items) kept += item.kept ? 1 : 0;
    std::cout << result.items.size() << " instructions scored, " << kept << " kept, "
              << result.drops.size() << " dropped\n";
    return 0;
}

int cmd_refine(PipelineConfig config, const std::string& in, const std::string& out,
               int iterations, const std::string& mode, const std::string& check, bool reuse) {
    auto parsed_mode = judgment_mode_from_string(mode);
    if (!parsed_mode) return fail("unknown --mode: " + mode);
    if (check != "on" && check != "off") return fail("--check must be on or off");

    std::vector<IigItem> items = read_iig_jsonl(in);
    std::vector<IigItem> kept;
    for (IigItem& item : items) {
        if (item.kept) kept.push_back(std::move(item));
    }
    Services services = build_services(config);
    services.gateway->begin_stage(
        "refine",
        static_cast<long long>(kept.size()) * (1 + 6LL * std::max(iterations, 1)));
    IirOptions options;
    options.n_max = iterations;
    options.mode = *parsed_mode;
    options.check_enabled = check == "on";
    options.reuse_post_check_response = reuse;
    std::vector<RefinementTrace> traces = parallel_map<IigItem, RefinementTrace>(
        kept, config.workers, [&](const IigItem& item) {
            return run_refinement_loop(*services.gateway, config.guidance, config.current,
                                       item.doc_id,
                                       RefinedDocument{item.doc_id, item.refined_document},
                                       item.instruction, options);
        });
    std::vector<Json> traces_json;
    for (const RefinementTrace& trace : traces) traces_json.push_back(to_json(trace));
    write_jsonl_file(out, traces_json);
    std::cout << traces.size() << " traces written\n";
    return 0;
}

int cmd_export(const PipelineConfig& config, const std::string& traces_path,
               const std::string& out, const std::string& constraint_set,
               const std::string& response_source) {
    auto set_choice = constraint_set_from_string(constraint_set);
    if (!set_choice) return fail("unknown --constraint-set: " + constraint_set);
    auto source = response_source_from_string(response_source);
    if (!source) return fail("unknown --response-source: " + response_source);

    std::vector<RefinementTrace> traces = read_traces_jsonl(traces_path);
    Services services = build_services(config);
    services.gateway->begin_stage("export", static_cast<long long>(traces.size()) * 4);
    ExportOptions options{*set_choice, *source};
    std::vector<Json> samples_json;
    std::size_t dropped = 0;
    std::vector<std::optional<DatasetSample>> samples =
        parallel_map<RefinementTrace, std::optional<DatasetSample>>(
            traces, config.workers, [&](const RefinementTrace& trace) {
                return export_sample(*services.gateway, config.guidance, trace, options);
            });
    for (const std::optional<DatasetSample>& sample : samples) {
        if (sample) {
            samples_json.push_back(to_json(*sample));
        } else {
            ++dropped;
        }
    }
    write_jsonl_file(out, samples_json);
    std::cout << samples_json.size() << " samples exported, " << dropped << " dropped\n";
    return 0;
}

int cmd_stats(const PipelineConfig& config, const std::string& traces_path,
              const std::string& dataset_path, const std::string& out_dir) {
    std::vector<RefinementTrace> traces = read_traces_jsonl(traces_path);
    std::vector<DatasetSample> samples = read_dataset_jsonl(dataset_path);
    Services services = build_services(config);
    long long constraints = 0;
    for (const RefinementTrace& trace : traces) {
        constraints += static_cast<long long>(trace.c_n.size());
    }
    services.gateway->begin_stage(
        "stats", constraints * 2 + static_cast<long long>(samples.size()) * 2);
    StatsOptions options;
    options.domain_labels = config.stats.domain_labels;
    options.length_bin_width = config.stats.length_bin_width;
    options.workers = config.workers;
    StatsReport report =
        build_report(*services.gateway, config.guidance, traces, samples, options);
    for (const auto& [name, content] : render_report_files(report)) {
        atomic_write_text(std::filesystem::path(out_dir) / name, content);
    }
    std::cout << "stats written to " << out_dir << "\n";
    return 0;
}

int cmd_llm_ping(const PipelineConfig& config, const std::string& role_name) {
    const ModelRole* role = nullptr;
    if (role_name == "guidance") {
        role = &config.guidance;
    } else if (role_name == "current") {
        role = &config.current;
    } else {
        return fail("unknown --role: " + role_name);
    }
    Services services = build_services(config);
    ChatExchange exchange = services.gateway->complete(
        *role, "current_response", {{"instruction", "Reply with the single word: pong"}});
    std::cout << role_name << " (" << role->model_name << ") responded in "
              << exchange.latency_ms << " ms: " << exchange.raw_response.substr(0, 80) << "\n";
    return 0;
}

int cmd_config_validate(const std::string& config_path) {
    PipelineConfig config = load_or_default(config_path);
    std::vector<std::string> errors = validate_config(config);
    if (errors.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const std::string& error : errors) std::cerr << "error: " << error << "\n";
    return 1;
}

int cmd_run(const std::string& config_path, bool dry_run, int workers, bool no_resume) {
    PipelineConfig config = load_or_default(config_path);
    std::vector<std::string> errors = validate_config(config);
    if (!errors.empty()) {
        for (const std::string& error : errors) std::cerr << "error: " << error << "\n";
        return 1;
    }
    RunOptions options;
    options.dry_run = dry_run;
    options.workers = workers;
    options.resume = !no_resume;
    options.log = &std::cerr;
    PipelineResult result = run_all(config, options);
    if (!result.ok) {
        return fail("stage '" + result.failed_stage + "' failed: " + result.error);
    }
    if (!dry_run) {
        std::cout << "run complete; manifest at "
                  << (std::filesystem::path(config.out_dir) / stage_files::kManifest).string()
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_sigint);

    CLI::App app{"AIR complex-instruction dataset pipeline"};
    app.set_version_flag("--version", std::string("air ") + kVersion);
    app.require_subcommand(1);
    app.fallthrough();  // --config may follow the subcommand

    std::string config_path;
    app.add_option("--config", config_path, "pipeline config (.toml or .json)");

    // --- corpus filter ---
    auto* corpus = app.add_subcommand("corpus", "corpus utilities");
    auto* filter_cmd = corpus->add_subcommand("filter", "apply quality filters");
    std::string in, out, report, format = "jsonl";
    FilterConfig filter_config;
    filter_cmd->add_option("--in", in, "input corpus")->required();
    filter_cmd->add_option("--out", out, "kept documents JSONL")->required();
    filter_cmd->add_option("--report", report, "filter report JSONL");
    filter_cmd->add_option("--format", format, "jsonl|plain_dir");
    filter_cmd->add_option("--min-words", filter_config.min_words, "minimum words");
    filter_cmd->add_option("--max-words", filter_config.max_words, "maximum words");
    filter_cmd->add_option("--para-repeat-max", filter_config.para_repeat_max,
                           "max duplicate paragraph count");
    filter_cmd->add_option("--char-run-max", filter_config.char_run_max,
                           "max repeated character run");

    // --- sample ---
    auto* sample_cmd = app.add_subcommand("sample", "diversity-sample documents");
    std::string sample_in, sample_out, sample_cache, strategy = "chain";
    long long sample_n = 10000;
    uint64_t seed = 17;
    sample_cmd->add_option("--in", sample_in, "filtered documents JSONL")->required();
    sample_cmd->add_option("--out", sample_out, "selected documents JSONL")->required();
    sample_cmd->add_option("--n", sample_n, "sample size");
    sample_cmd->add_option("--seed", seed, "RNG seed for the first pick");
    sample_cmd->add_option("--strategy", strategy, "chain|min-to-set");
    sample_cmd->add_option("--cache", sample_cache, "embedding cache JSONL");

    // --- iig ---
    auto* iig_cmd = app.add_subcommand("iig", "initial instruction generation");
    std::string iig_in, iig_out, iig_drops;
    int threshold = 4;
    iig_cmd->add_option("--in", iig_in, "selected documents JSONL")->required();
    iig_cmd->add_option("--out", iig_out, "instruction records JSONL")->required();
    iig_cmd->add_option("--drops", iig_drops, "dropped documents JSONL");
    iig_cmd->add_option("--threshold", threshold, "keep score >= threshold");

    // --- refine ---
    auto* refine_cmd = app.add_subcommand("refine", "iterative instruction refinement");
    std::string refine_in, refine_out, mode = "judge-doc", check = "on";
    int iterations = 5;
    bool reuse = false;
    refine_cmd->add_option("--in", refine_in, "iig records JSONL")->required();
    refine_cmd->add_option("--out", refine_out, "refinement traces JSONL")->required();
    refine_cmd->add_option("--iterations", iterations, "maximum refinement iterations");
    refine_cmd->add_option("--mode", mode, "none|judge-model|judge-doc");
    refine_cmd->add_option("--check", check, "on|off");
    refine_cmd->add_flag("--reuse-post-check-response", reuse,
                         "reuse each post-check response as the next judged response");

    // --- export ---
    auto* export_cmd = app.add_subcommand("export", "build the dataset from traces");
    std::string export_traces, export_out, constraint_set = "auto",
                response_source = "regenerated";
    export_cmd->add_option("--traces", export_traces, "refinement traces JSONL")->required();
    export_cmd->add_option("--out", export_out, "dataset JSONL")->required();
    export_cmd->add_option("--constraint-set", constraint_set, "auto|cn|cn-prime");
    export_cmd->add_option("--response-source", response_source, "regenerated|refined-doc");

    // --- stats ---
    auto* stats_cmd = app.add_subcommand("stats", "dataset statistics");
    std::string stats_traces, stats_dataset, stats_out;
    stats_cmd->add_option("--traces", stats_traces, "refinement traces JSONL")->required();
    stats_cmd->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
    stats_cmd->add_option("--out-dir", stats_out, "output directory")->required();

    // --- llm ping ---
    auto* llm = app.add_subcommand("llm", "gateway utilities");
    auto* ping_cmd = llm->add_subcommand("ping", "round-trip a model role");
    std::string role_name = "guidance";
    ping_cmd->add_option("--role", role_name, "guidance|current");

    // --- config validate ---
    auto* config_cmd = app.add_subcommand("config", "config utilities");
    auto* validate_cmd = config_cmd->add_subcommand("validate", "check a config file");

    // --- run ---
    auto* run_cmd = app.add_subcommand("run", "run the full pipeline");
    bool dry_run = false;
    bool no_resume = false;
    int workers = 0;
    run_cmd->add_flag("--dry-run", dry_run, "print the per-stage call budget and exit");
    run_cmd->add_option("--workers", workers, "bounded worker pool size");
    run_cmd->add_flag("--no-resume", no_resume, "ignore a previous manifest");

    CLI11_PARSE(app, argc, argv);

    try {
        if (filter_cmd->parsed()) {
            return cmd_corpus_filter(in, out, report, format, filter_config);
        }
        if (sample_cmd->parsed()) {
            return cmd_sample(load_or_default(config_path), sample_in, sample_out, sample_cache,
                              sample_n, seed, strategy);
        }
        if (iig_cmd->parsed()) {
            return cmd_iig(load_or_default(config_path), iig_in, iig_out, iig_drops, threshold);
        }
        if (refine_cmd->parsed()) {
            return cmd_refine(load_or_default(config_path), refine_in, refine_out, iterations,
                              mode, check, reuse);
        }
        if (export_cmd->parsed()) {
            return cmd_export(load_or_default(config_path), export_traces, export_out,
                              constraint_set, response_source);
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(load_or_default(config_path), stats_traces, stats_dataset,
                             stats_out);
        }
        if (ping_cmd->parsed()) {
            return cmd_llm_ping(load_or_default(config_path), role_name);
        }
        if (validate_cmd->parsed()) {
            return cmd_config_validate(config_path);
        }
        if (run_cmd->parsed()) {
            return cmd_run(config_path, dry_run, workers, no_resume);
        }
    } catch (const InterruptedError&) {
        std::cerr << "interrupted; partial outputs and manifest retained\n";
        return 130;
    } catch (const std::exception& err) {
        return fail(err.what());
    }
    return 0;
}
