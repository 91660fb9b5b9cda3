// Python bindings for the pipeline's core operations. Heavier orchestration
// (run_pipeline) takes a config path and returns the run manifest as JSON.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "air/config.hpp"
#include "air/corpus.hpp"
#include "air/errors.hpp"
#include "air/iir.hpp"
#include "air/llm.hpp"
#include "air/pipeline.hpp"
#include "air/sampler.hpp"
#include "air/stats.hpp"
#include "air/text.hpp"
#include "air/version.hpp"

namespace py = pybind11;
using namespace air;

namespace {

SampleStrategy strategy_from_name(const std::string& name) {
    if (name == "chain") return SampleStrategy::chain;
    if (name == "min-to-set") return SampleStrategy::min_to_set;
    throw py::value_error("strategy must be 'chain' or 'min-to-set'");
}

py::dict filter_report_to_dict(const FilterReport& report) {
    py::dict metrics;
    metrics["symbol_ratio"] = report.metrics.symbol_ratio;
    metrics["max_paragraph_repeat"] = report.metrics.max_paragraph_repeat;
    metrics["max_char_run"] = report.metrics.max_char_run;
    py::dict out;
    out["doc_id"] = report.doc_id;
    out["verdict"] = std::string(to_string(report.verdict));
    out["reason"] = std::string(to_string(report.reason));
    out["metrics"] = metrics;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core operations of the AIR instruction-dataset pipeline";
    m.attr("__version__") = kVersion;

    py::class_<Document>(m, "Document")
        .def(py::init([](const std::string& id, const std::string& text,
                         const std::string& source) {
                 return make_document(id, text, source);
             }),
             py::arg("id"), py::arg("text"), py::arg("source") = "")
        .def_readonly("id", &Document::id)
        .def_readonly("text", &Document::text)
        .def_readonly("source", &Document::source)
        .def_readonly("word_count", &Document::word_count)
        .def("__repr__", [](const Document& doc) {
            return "Document(id='" + doc.id + "', words=" + std::to_string(doc.word_count) + ")";
        });

    py::class_<FilterConfig>(m, "FilterConfig")
        .def(py::init<>())
        .def(py::init([](int min_words, int max_words, int para_repeat_max, int char_run_max) {
                 return FilterConfig{min_words, max_words, para_repeat_max, char_run_max};
             }),
             py::arg("min_words") = 50, py::arg("max_words") = 2048,
             py::arg("para_repeat_max") = 2, py::arg("char_run_max") = 8)
        .def_readwrite("min_words", &FilterConfig::min_words)
        .def_readwrite("max_words", &FilterConfig::max_words)
        .def_readwrite("para_repeat_max", &FilterConfig::para_repeat_max)
        .def_readwrite("char_run_max", &FilterConfig::char_run_max);

    m.def("word_count", [](const std::string& text) { return word_count(text); },
          py::arg("text"));
    m.def("unique_trigrams", [](const std::string& text) { return unique_trigrams(text); },
          py::arg("text"), "Distinct contiguous 3-word sequences over lowercased tokens");

    m.def(
        "parse_tagged_field",
        [](const std::string& raw, const std::string& tag) {
            try {
                return parse_tagged_field(raw, tag);
            } catch (const ParseError& err) {
                throw py::value_error(err.what());
            }
        },
        py::arg("raw"), py::arg("tag"), "Content of the first <tag>...</tag> block, trimmed");

    m.def(
        "length_filter",
        [](const Document& doc, int min_words, int max_words) {
            return filter_report_to_dict(length_filter(doc, min_words, max_words));
        },
        py::arg("doc"), py::arg("min_words") = 50, py::arg("max_words") = 2048);
    m.def("symbol_ratio_filter",
          [](const Document& doc) { return filter_report_to_dict(symbol_ratio_filter(doc)); },
          py::arg("doc"));
    m.def(
        "redundancy_filter",
        [](const Document& doc, int para_repeat_max, int char_run_max) {
            return filter_report_to_dict(redundancy_filter(doc, para_repeat_max, char_run_max));
        },
        py::arg("doc"), py::arg("para_repeat_max") = 2, py::arg("char_run_max") = 8);
    m.def(
        "run_filters",
        [](const std::vector<Document>& docs, const FilterConfig& config) {
            FilterOutcome outcome = run_filters(docs, config);
            py::list kept;
            for (const Document& doc : outcome.kept) kept.append(doc);
            py::list reports;
            for (const FilterReport& report : outcome.reports) {
                reports.append(filter_report_to_dict(report));
            }
            return py::make_tuple(kept, reports);
        },
        py::arg("docs"), py::arg("config") = FilterConfig{},
        "Applies length -> symbol -> redundancy; returns (kept, reports)");

    m.def(
        "ingest",
        [](const std::string& path, const std::string& format) {
            IngestFormat f;
            if (format == "jsonl") {
                f = IngestFormat::jsonl;
            } else if (format == "plain_dir") {
                f = IngestFormat::plain_dir;
            } else {
                throw py::value_error("format must be 'jsonl' or 'plain_dir'");
            }
            IngestResult result = ingest(path, f);
            py::list skipped;
            for (const SkippedLine& line : result.skipped) {
                skipped.append(py::make_tuple(line.line, line.message));
            }
            return py::make_tuple(result.docs, skipped);
        },
        py::arg("path"), py::arg("format") = "jsonl");

    m.def(
        "cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return cosine_similarity(a, b);
        },
        py::arg("a"), py::arg("b"));
    m.def("unit_normalize",
          [](std::vector<double> v) { return unit_normalize(std::move(v)); }, py::arg("vector"));

    m.def(
        "density_sample",
        [](const std::vector<std::string>& ids,
           const std::vector<std::vector<double>>& vectors, std::size_t n, uint64_t seed,
           const std::string& strategy) {
            if (ids.size() != vectors.size()) {
                throw py::value_error("ids and vectors must have equal length");
            }
            std::vector<EmbeddedDoc> pool;
            pool.reserve(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) {
                pool.push_back({ids[i], unit_normalize(vectors[i])});
            }
            return density_sample(pool, n, seed, strategy_from_name(strategy)).selected_ids;
        },
        py::arg("ids"), py::arg("vectors"), py::arg("n"), py::arg("seed"),
        py::arg("strategy") = "chain",
        "Greedy least-similar chain over unit-normalized vectors; returns ids in pick order");

    m.def(
        "local_hash_embedding",
        [](const std::string& text, int dim) {
            LocalHashEmbedding provider(dim);
            return unit_normalize(provider.embed(text));
        },
        py::arg("text"), py::arg("dim") = 64,
        "Deterministic offline embedding (feature-hashed bag of words)");

    m.def(
        "add_constraint",
        [](const std::string& instruction, const std::string& constraint) {
            return add_constraint(instruction, constraint);
        },
        py::arg("instruction"), py::arg("constraint"));
    m.def("count_requirement_lines",
          [](const std::string& instruction) { return count_requirement_lines(instruction); },
          py::arg("instruction"));

    m.def("constraint_type_labels", [] {
        std::vector<std::string> labels;
        for (std::string_view label : kConstraintTypeLabels) labels.emplace_back(label);
        return labels;
    });

    m.def(
        "validate_config",
        [](const std::string& config_path) { return validate_config(load_config(config_path)); },
        py::arg("config_path"), "List of config errors; empty means valid");

    m.def(
        "run_pipeline",
        [](const std::string& config_path, int workers, bool dry_run, bool resume) {
            PipelineConfig config = load_config(config_path);
            RunOptions options;
            options.workers = workers;
            options.dry_run = dry_run;
            options.resume = resume;
            PipelineResult result;
            {
                py::gil_scoped_release release;
                result = run_all(config, options);
            }
            Json summary{{"ok", result.ok},
                         {"failed_stage", result.failed_stage},
                         {"error", result.error},
                         {"out_dir", config.out_dir},
                         {"manifest", to_json(result.manifest)}};
            return summary.dump();
        },
        py::arg("config_path"), py::arg("workers") = 0, py::arg("dry_run") = false,
        py::arg("resume") = true,
        "Runs corpus -> sample -> iig -> refine -> export -> stats; returns a JSON summary");
}
