#include "air/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "air/errors.hpp"
#include "air/text.hpp"

namespace air {

Document make_document(std::string id, std::string text, std::string source) {
    Document doc;
    doc.id = std::move(id);
    doc.text = std::move(text);
    doc.source = std::move(source);
    doc.word_count = word_count(doc.text);
    return doc;
}

std::string_view to_string(FilterReason reason) {
    switch (reason) {
        case FilterReason::none: return "none";
        case FilterReason::too_short: return "too_short";
        case FilterReason::too_long: return "too_long";
        case FilterReason::symbol_ratio: return "symbol_ratio";
        case FilterReason::redundancy: return "redundancy";
    }
    return "none";
}

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::kept ? "kept" : "rejected";
}

namespace {

IngestResult ingest_jsonl(const std::filesystem::path& path) {
    JsonlReadResult lines = read_jsonl_lenient(path);
    IngestResult result;
    for (const JsonlLineError& err : lines.errors) {
        result.skipped.push_back({err.line, err.message});
    }
    const std::string stem = path.stem().string();
    std::unordered_set<std::string> seen_ids;
    for (std::size_t i = 0; i < lines.records.size(); ++i) {
        const Json& record = lines.records[i];
        const int line_no = lines.record_lines[i];
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            result.skipped.push_back({line_no, "missing text field"});
            continue;
        }
        std::string id;
        if (record.contains("id") && record["id"].is_string()) {
            id = record["id"].get<std::string>();
        }
        if (id.empty()) {
            id = stem + ":" + std::to_string(line_no);
        }
        if (!seen_ids.insert(id).second) {
            result.skipped.push_back({line_no, "duplicate id: " + id});
            continue;
        }
        std::string source = path.string();
        if (record.contains("source") && record["source"].is_string()) {
            source = record["source"].get<std::string>();
        }
        result.docs.push_back(make_document(std::move(id), record["text"].get<std::string>(),
                                            std::move(source)));
    }
    return result;
}

IngestResult ingest_plain_dir(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) {
        throw IngestError("not a directory: " + path.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    IngestResult result;
    std::unordered_set<std::string> seen_ids;
    int index = 0;
    for (const std::filesystem::path& file : files) {
        ++index;
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            result.skipped.push_back({index, "unreadable file: " + file.string()});
            continue;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string id = file.stem().string();
        if (!seen_ids.insert(id).second) {
            result.skipped.push_back({index, "duplicate id: " + id});
            continue;
        }
        result.docs.push_back(make_document(std::move(id), buf.str(), file.string()));
    }
    return result;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path, IngestFormat format) {
    if (!std::filesystem::exists(path)) {
        throw IngestError("path does not exist: " + path.string());
    }
    return format == IngestFormat::jsonl ? ingest_jsonl(path) : ingest_plain_dir(path);
}

FilterReport length_filter(const Document& doc, int min_words, int max_words) {
    FilterReport report;
    report.doc_id = doc.id;
    if (doc.word_count < min_words) {
        report.verdict = Verdict::rejected;
        report.reason = FilterReason::too_short;
    } else if (doc.word_count > max_words) {
        report.verdict = Verdict::rejected;
        report.reason = FilterReason::too_long;
    }
    return report;
}

FilterReport symbol_ratio_filter(const Document& doc) {
    FilterReport report;
    report.doc_id = doc.id;
    long long symbols = 0;
    long long textual = 0;
    std::size_t pos = 0;
    while (pos < doc.text.size()) {
        switch (classify_codepoint(next_codepoint(doc.text, pos))) {
            case CharClass::textual: ++textual; break;
            case CharClass::symbol: ++symbols; break;
            case CharClass::whitespace: break;
        }
    }
    const long long total = symbols + textual;
    report.metrics.symbol_ratio =
        total > 0 ? static_cast<double>(symbols) / static_cast<double>(total) : 1.0;
    if (total == 0 || symbols > textual) {
        report.verdict = Verdict::rejected;
        report.reason = FilterReason::symbol_ratio;
    }
    return report;
}

FilterReport redundancy_filter(const Document& doc, int para_repeat_max, int char_run_max) {
    FilterReport report;
    report.doc_id = doc.id;
    std::unordered_map<std::string, int> counts;
    int max_repeat = 0;
    for (const std::string& paragraph : split_paragraphs(doc.text)) {
        int c = ++counts[normalize_for_comparison(paragraph)];
        max_repeat = std::max(max_repeat, c);
    }
    report.metrics.max_paragraph_repeat = max_repeat;
    report.metrics.max_char_run = max_char_run(doc.text);
    if (max_repeat > para_repeat_max || report.metrics.max_char_run > char_run_max) {
        report.verdict = Verdict::rejected;
        report.reason = FilterReason::redundancy;
    }
    return report;
}

FilterOutcome run_filters(const std::vector<Document>& docs, const FilterConfig& config) {
    FilterOutcome outcome;
    outcome.reports.reserve(docs.size());
    for (const Document& doc : docs) {
        FilterReport report = length_filter(doc, config.min_words, config.max_words);
        if (report.verdict == Verdict::kept) {
            FilterReport symbol = symbol_ratio_filter(doc);
            report.metrics.symbol_ratio = symbol.metrics.symbol_ratio;
            if (symbol.verdict == Verdict::rejected) {
                report.verdict = Verdict::rejected;
                report.reason = symbol.reason;
            }
        }
        if (report.verdict == Verdict::kept) {
            FilterReport redundancy =
                redundancy_filter(doc, config.para_repeat_max, config.char_run_max);
            report.metrics.max_paragraph_repeat = redundancy.metrics.max_paragraph_repeat;
            report.metrics.max_char_run = redundancy.metrics.max_char_run;
            if (redundancy.verdict == Verdict::rejected) {
                report.verdict = Verdict::rejected;
                report.reason = redundancy.reason;
            }
        }
        if (report.verdict == Verdict::kept) outcome.kept.push_back(doc);
        outcome.reports.push_back(std::move(report));
    }
    return outcome;
}

Json to_json(const Document& doc) {
    return Json{{"id", doc.id},
                {"text", doc.text},
                {"source", doc.source},
                {"word_count", doc.word_count}};
}

Document document_from_json(const Json& j) {
    Document doc;
    doc.id = j.at("id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    doc.source = j.value("source", std::string());
    doc.word_count = j.contains("word_count") ? j["word_count"].get<int>()
                                              : word_count(doc.text);
    return doc;
}

Json to_json(const FilterReport& report) {
    return Json{{"doc_id", report.doc_id},
                {"verdict", std::string(to_string(report.verdict))},
                {"reason", std::string(to_string(report.reason))},
                {"metrics",
                 Json{{"symbol_ratio", report.metrics.symbol_ratio},
                      {"max_paragraph_repeat", report.metrics.max_paragraph_repeat},
                      {"max_char_run", report.metrics.max_char_run}}}};
}

}  // namespace air
