#include "air/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <unordered_map>

#include "air/errors.hpp"
#include "air/parallel.hpp"
#include "air/sampler.hpp"
#include "air/stats.hpp"
#include "air/version.hpp"

namespace air {

namespace {

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct StageDef {
    std::string name;
    std::vector<std::string> manifest_keys;
};

bool stage_valid(const RunManifest& manifest, const StageDef& stage,
                 const std::filesystem::path& out_dir) {
    if (stage.manifest_keys.empty()) return false;
    for (const std::string& key : stage.manifest_keys) {
        if (!stage_output_valid(manifest, key, out_dir)) return false;
    }
    return true;
}

void log_line(const RunOptions& options, const std::string& line) {
    if (options.log) (*options.log) << line << "\n";
}

}  // namespace

Services build_services(const PipelineConfig& config, const std::filesystem::path& audit_path) {
    Services services;
    if (config.llm.backend == BackendKind::mock) {
        services.backend = std::make_shared<MockChatBackend>(
            MockChatBackend::load_script(config.llm.mock_script));
    } else {
        services.backend = std::make_shared<HttpChatBackend>();
    }
    if (audit_path.empty()) {
        services.audit = std::make_shared<NullAuditSink>();
    } else {
        services.audit = std::make_shared<FileAuditSink>(audit_path);
    }
    TemplateRegistry templates = TemplateRegistry::with_defaults();
    if (!config.llm.template_dir.empty()) {
        templates.load_overrides(config.llm.template_dir);
    }
    RetryPolicy retry{config.llm.max_attempts, config.llm.retry_base_ms,
                      config.llm.retry_multiplier};
    RateLimit rate_limit{config.llm.requests_per_minute, config.llm.max_in_flight};
    services.gateway = std::make_unique<LlmGateway>(services.backend, std::move(templates), retry,
                                                    services.audit, rate_limit);
    if (config.embedding.backend == EmbeddingBackendKind::local_hash) {
        services.embedder = std::make_unique<LocalHashEmbedding>(config.embedding.local_dim);
    } else {
        services.embedder = std::make_unique<HttpEmbedding>(config.embedding.role);
    }
    return services;
}

long long iir_loop_calls_per_doc(const IirConfig& config) {
    const long long n = config.iterations;
    if (n == 0) return 0;
    const bool judged = config.mode != JudgmentMode::no_judge;
    long long pre = (judged && !config.reuse_post_check_response) ? n : 0;
    long long post = config.check_enabled
                         ? n
                         : ((config.reuse_post_check_response && judged) ? n - 1 : 0);
    long long checks = config.check_enabled ? n : 0;
    long long reference = config.mode == JudgmentMode::judge_model_ref ? 1 : 0;
    return reference + pre + n /*judge*/ + post + checks;
}

long long export_calls_per_doc(const IirConfig& config) {
    long long combine = config.iterations > 0 ? 1 : 0;
    long long final_call = config.response_source == ResponseSource::regenerated ? 1 : 0;
    return combine + final_call;
}

std::vector<StageBudget> compute_budget(const PipelineConfig& config, long long sampled_docs) {
    std::vector<StageBudget> budget;
    budget.push_back({"iig", sampled_docs, 3});
    budget.push_back({"refine", sampled_docs, iir_loop_calls_per_doc(config.iir)});
    budget.push_back({"export", sampled_docs, export_calls_per_doc(config.iir)});
    budget.push_back({"stats", sampled_docs, config.iir.iterations + 1});
    return budget;
}

std::vector<Document> read_documents_jsonl(const std::filesystem::path& path) {
    std::vector<Document> docs;
    for (const Json& record : read_jsonl(path)) docs.push_back(document_from_json(record));
    return docs;
}

std::vector<IigItem> read_iig_jsonl(const std::filesystem::path& path) {
    std::vector<IigItem> items;
    for (const Json& record : read_jsonl(path)) items.push_back(iig_item_from_json(record));
    return items;
}

std::vector<RefinementTrace> read_traces_jsonl(const std::filesystem::path& path) {
    std::vector<RefinementTrace> traces;
    for (const Json& record : read_jsonl(path)) traces.push_back(trace_from_json(record));
    return traces;
}

DatasetSample dataset_sample_from_json(const Json& j) {
    DatasetSample sample;
    sample.final_instruction = j.at("instruction").get<std::string>();
    sample.final_response = j.at("response").get<std::string>();
    const Json& meta = j.at("meta");
    sample.doc_id = meta.at("doc_id").get<std::string>();
    sample.num_constraints = meta.at("num_constraints").get<int>();
    sample.constraint_set_used = meta.at("constraint_set").get<std::string>();
    sample.judgment_mode = meta.at("judgment_mode").get<std::string>();
    return sample;
}

std::vector<DatasetSample> read_dataset_jsonl(const std::filesystem::path& path) {
    std::vector<DatasetSample> samples;
    for (const Json& record : read_jsonl(path)) {
        samples.push_back(dataset_sample_from_json(record));
    }
    return samples;
}

PipelineResult run_all(const PipelineConfig& config, const RunOptions& options) {
    if (options.dry_run) {
        Services none;
        return run_all(config, none, options);
    }
    std::filesystem::path out_dir(config.out_dir);
    std::filesystem::create_directories(out_dir);
    Services services = build_services(config, out_dir / stage_files::kAudit);
    return run_all(config, services, options);
}

PipelineResult run_all(const PipelineConfig& config, Services& services,
                       const RunOptions& options) {
    PipelineResult result;

    std::vector<std::string> errors = validate_config(config);
    if (!errors.empty()) {
        result.failed_stage = "config";
        result.error = errors.front();
        return result;
    }

    const int workers = options.workers > 0 ? options.workers : config.workers;
    const std::filesystem::path out_dir(config.out_dir);

    if (options.dry_run) {
        // Corpus and sampling are local; run them in memory to size the
        // LLM-facing stages. No files are written and no calls are made.
        IngestResult ingested = ingest(config.corpus.input, config.corpus.format);
        FilterOutcome filtered = run_filters(ingested.docs, config.corpus.filter_config());
        long long sampled = std::min<long long>(config.sample.n,
                                                static_cast<long long>(filtered.kept.size()));
        log_line(options, "dry run: " + std::to_string(ingested.docs.size()) + " documents, " +
                              std::to_string(filtered.kept.size()) + " kept, " +
                              std::to_string(sampled) + " sampled");
        long long total = 0;
        for (const StageBudget& stage : compute_budget(config, sampled)) {
            log_line(options, "stage " + stage.stage + ": " + std::to_string(stage.docs) +
                                  " docs x " + std::to_string(stage.calls_per_doc) +
                                  " calls/doc = " + std::to_string(stage.total()));
            total += stage.total();
        }
        log_line(options, "total LLM calls: " + std::to_string(total));
        result.ok = true;
        return result;
    }

    std::filesystem::create_directories(out_dir);

    RunManifest manifest;
    manifest.run_id = config.run_id;
    manifest.config_hash = config_hash(config);
    manifest.created_at = now_iso8601();
    manifest.tool_version = kVersion;

    // Resume: keep the previous manifest's entries when the config matches;
    // a stage is skipped only while every stage before it is also intact.
    const std::vector<StageDef> stage_defs = {
        {"corpus", {"corpus", "corpus_report"}},
        {"sample", {"sample"}},
        {"iig", {"iig", "iig_drops"}},
        {"refine", {"refine"}},
        {"export", {"export"}},
        {"stats", {}},  // filled below from the previous manifest
    };
    std::size_t first_invalid = 0;
    if (options.resume) {
        if (auto previous = load_manifest(out_dir / stage_files::kManifest);
            previous && previous->config_hash == manifest.config_hash) {
            manifest.stage_outputs = previous->stage_outputs;
            std::vector<StageDef> defs = stage_defs;
            // stats outputs vary by iteration count; take keys from the manifest
            for (const auto& [key, output] : manifest.stage_outputs) {
                if (key.rfind("stats/", 0) == 0) defs.back().manifest_keys.push_back(key);
            }
            if (defs.back().manifest_keys.empty()) defs.back().manifest_keys.push_back("stats/");
            while (first_invalid < defs.size() &&
                   stage_valid(manifest, defs[first_invalid], out_dir)) {
                ++first_invalid;
            }
            // Everything downstream of the first mismatch recomputes.
            for (std::size_t i = first_invalid; i < defs.size(); ++i) {
                for (const std::string& key : defs[i].manifest_keys) {
                    manifest.stage_outputs.erase(key);
                }
            }
        }
    }

    auto save = [&] { save_manifest(out_dir / stage_files::kManifest, manifest); };

    std::string stage = "corpus";
    try {
        // --- corpus ---------------------------------------------------------
        std::vector<Document> kept;
        if (first_invalid > 0) {
            kept = read_documents_jsonl(out_dir / stage_files::kFiltered);
            log_line(options, "corpus: resumed (" + std::to_string(kept.size()) + " kept)");
        } else {
            IngestResult ingested = ingest(config.corpus.input, config.corpus.format);
            FilterOutcome outcome = run_filters(ingested.docs, config.corpus.filter_config());
            kept = outcome.kept;
            std::vector<Json> docs_json;
            for (const Document& doc : kept) docs_json.push_back(to_json(doc));
            manifest.stage_outputs["corpus"] = write_stage_file(
                out_dir / stage_files::kFiltered, dump_jsonl(docs_json),
                static_cast<long long>(kept.size()));
            std::vector<Json> reports_json;
            for (const FilterReport& report : outcome.reports) {
                reports_json.push_back(to_json(report));
            }
            manifest.stage_outputs["corpus_report"] = write_stage_file(
                out_dir / stage_files::kFilterReport, dump_jsonl(reports_json),
                static_cast<long long>(outcome.reports.size()));
            save();
            log_line(options, "corpus: " + std::to_string(ingested.docs.size()) + " in, " +
                                  std::to_string(kept.size()) + " kept, " +
                                  std::to_string(ingested.skipped.size()) + " lines skipped");
        }

        // --- sample ---------------------------------------------------------
        stage = "sample";
        std::vector<Document> selected;
        if (first_invalid > 1) {
            selected = read_documents_jsonl(out_dir / stage_files::kSelected);
            log_line(options, "sample: resumed (" + std::to_string(selected.size()) + ")");
        } else {
            EmbedOptions embed_options;
            embed_options.cache_path = out_dir / stage_files::kEmbeddings;
            embed_options.retry = RetryPolicy{config.llm.max_attempts, config.llm.retry_base_ms,
                                              config.llm.retry_multiplier};
            embed_options.workers = workers;
            std::vector<EmbeddedDoc> pool = embed_all(kept, *services.embedder, embed_options);
            SampleSelection selection = density_sample(
                pool, static_cast<std::size_t>(config.sample.n), config.sample.seed,
                config.sample.strategy);
            if (selection.truncated) {
                log_line(options, "sample: warning: requested " +
                                      std::to_string(config.sample.n) + " > pool of " +
                                      std::to_string(pool.size()) + "; selecting all");
            }
            std::unordered_map<std::string, const Document*> by_id;
            for (const Document& doc : kept) by_id[doc.id] = &doc;
            std::vector<Json> selected_json;
            for (const std::string& id : selection.selected_ids) {
                selected.push_back(*by_id.at(id));
                selected_json.push_back(to_json(selected.back()));
            }
            manifest.stage_outputs["sample"] = write_stage_file(
                out_dir / stage_files::kSelected, dump_jsonl(selected_json),
                static_cast<long long>(selected.size()));
            save();
            log_line(options, "sample: " + std::to_string(selected.size()) + " selected");
        }

        // --- iig ------------------------------------------------------------
        stage = "iig";
        std::vector<IigItem> iig_items;
        if (first_invalid > 2) {
            iig_items = read_iig_jsonl(out_dir / stage_files::kIig);
            log_line(options, "iig: resumed (" + std::to_string(iig_items.size()) + ")");
        } else {
            services.gateway->begin_stage(
                "iig", static_cast<long long>(selected.size()) * 3 * 2);
            IigOptions iig_options;
            iig_options.score_threshold = config.iig.score_threshold;
            iig_options.rubric = config.iig.rubric;
            iig_options.workers = workers;
            IigResult iig_result =
                run_iig_stage(*services.gateway, config.guidance, selected, iig_options);
            iig_items = iig_result.items;
            std::vector<Json> items_json;
            for (const IigItem& item : iig_items) items_json.push_back(to_json(item));
            manifest.stage_outputs["iig"] =
                write_stage_file(out_dir / stage_files::kIig, dump_jsonl(items_json),
                                 static_cast<long long>(iig_items.size()));
            std::vector<Json> drops_json;
            for (const IigDrop& drop : iig_result.drops) drops_json.push_back(to_json(drop));
            manifest.stage_outputs["iig_drops"] = write_stage_file(
                out_dir / stage_files::kIigDrops, dump_jsonl(drops_json),
                static_cast<long long>(iig_result.drops.size()));
            save();
            log_line(options, "iig: " + std::to_string(iig_items.size()) + " scored, " +
                                  std::to_string(iig_result.drops.size()) + " dropped");
        }

        // --- refine ---------------------------------------------------------
        stage = "refine";
        std::vector<RefinementTrace> traces;
        if (first_invalid > 3) {
            traces = read_traces_jsonl(out_dir / stage_files::kTraces);
            log_line(options, "refine: resumed (" + std::to_string(traces.size()) + ")");
        } else {
            std::vector<IigItem> kept_items;
            for (const IigItem& item : iig_items) {
                if (item.kept) kept_items.push_back(item);
            }
            services.gateway->begin_stage(
                "refine", static_cast<long long>(kept_items.size()) *
                              (1 + 6LL * std::max(config.iir.iterations, 1)));
            IirOptions iir_options;
            iir_options.n_max = config.iir.iterations;
            iir_options.mode = config.iir.mode;
            iir_options.check_enabled = config.iir.check_enabled;
            iir_options.reuse_post_check_response = config.iir.reuse_post_check_response;
            traces = parallel_map<IigItem, RefinementTrace>(
                kept_items, workers, [&](const IigItem& item) {
                    return run_refinement_loop(*services.gateway, config.guidance, config.current,
                                               item.doc_id,
                                               RefinedDocument{item.doc_id, item.refined_document},
                                               item.instruction, iir_options);
                });
            std::vector<Json> traces_json;
            for (const RefinementTrace& trace : traces) traces_json.push_back(to_json(trace));
            manifest.stage_outputs["refine"] =
                write_stage_file(out_dir / stage_files::kTraces, dump_jsonl(traces_json),
                                 static_cast<long long>(traces.size()));
            save();
            log_line(options, "refine: " + std::to_string(traces.size()) + " traces");
        }

        // --- export ---------------------------------------------------------
        stage = "export";
        std::vector<DatasetSample> samples;
        if (first_invalid > 4) {
            samples = read_dataset_jsonl(out_dir / stage_files::kDataset);
            log_line(options, "export: resumed (" + std::to_string(samples.size()) + ")");
        } else {
            services.gateway->begin_stage(
                "export", static_cast<long long>(traces.size()) * 4);
            ExportOptions export_options{config.iir.constraint_set, config.iir.response_source};
            std::vector<std::optional<DatasetSample>> maybe_samples =
                parallel_map<RefinementTrace, std::optional<DatasetSample>>(
                    traces, workers, [&](const RefinementTrace& trace) {
                        return export_sample(*services.gateway, config.guidance, trace,
                                             export_options);
                    });
            std::vector<Json> samples_json;
            for (std::optional<DatasetSample>& sample : maybe_samples) {
                if (!sample) continue;
                samples_json.push_back(to_json(*sample));
                samples.push_back(std::move(*sample));
            }
            manifest.stage_outputs["export"] =
                write_stage_file(out_dir / stage_files::kDataset, dump_jsonl(samples_json),
                                 static_cast<long long>(samples.size()));
            save();
            log_line(options, "export: " + std::to_string(samples.size()) + " samples");
        }

        // --- stats ----------------------------------------------------------
        stage = "stats";
        if (first_invalid > 5) {
            log_line(options, "stats: resumed");
        } else {
            long long constraint_count = 0;
            for (const RefinementTrace& trace : traces) {
                constraint_count += static_cast<long long>(trace.c_n.size());
            }
            services.gateway->begin_stage(
                "stats", constraint_count * 2 + static_cast<long long>(samples.size()) * 2);
            StatsOptions stats_options;
            stats_options.domain_labels = config.stats.domain_labels;
            stats_options.length_bin_width = config.stats.length_bin_width;
            stats_options.workers = workers;
            StatsReport report = build_report(*services.gateway, config.guidance, traces, samples,
                                              stats_options);
            for (const auto& [name, content] : render_report_files(report)) {
                StageOutput output = write_stage_file(
                    out_dir / stage_files::kStatsDir / name, content, 0);
                output.path = std::string(stage_files::kStatsDir) + "/" + name;
                manifest.stage_outputs[output.path] = output;
            }
            save();
            log_line(options, "stats: written");
        }
    } catch (const std::exception& err) {
        result.failed_stage = stage;
        result.error = err.what();
        save();
        result.manifest = manifest;
        return result;
    }

    save();
    result.ok = true;
    result.manifest = manifest;
    return result;
}

}  // namespace air
