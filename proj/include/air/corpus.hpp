#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "air/jsonl.hpp"

namespace air {

struct Document {
    std::string id;
    std::string text;
    std::string source;
    int word_count = 0;
};

// Computes word_count from the text (whitespace words).
Document make_document(std::string id, std::string text, std::string source = "");

enum class Verdict { kept, rejected };

enum class FilterReason { none, too_short, too_long, symbol_ratio, redundancy };

std::string_view to_string(FilterReason reason);
std::string_view to_string(Verdict verdict);

struct FilterMetrics {
    double symbol_ratio = 0.0;
    int max_paragraph_repeat = 0;
    int max_char_run = 0;
};

struct FilterReport {
    std::string doc_id;
    Verdict verdict = Verdict::kept;
    FilterReason reason = FilterReason::none;
    FilterMetrics metrics;
};

enum class IngestFormat { jsonl, plain_dir };

struct SkippedLine {
    int line = 0;
    std::string message;
};

struct IngestResult {
    std::vector<Document> docs;
    std::vector<SkippedLine> skipped;
};

// jsonl: one {"id"?, "text", "source"?} object per line; missing ids are
// generated as "<stem>:<line>". plain_dir: every regular file in the
// directory becomes one document, id = filename stem, sorted by filename.
// Throws IngestError when the path itself is unreadable; malformed lines
// are skipped and reported.
IngestResult ingest(const std::filesystem::path& path, IngestFormat format);

struct FilterConfig {
    int min_words = 50;
    int max_words = 2048;
    int para_repeat_max = 2;
    int char_run_max = 8;
};

FilterReport length_filter(const Document& doc, int min_words, int max_words);

// Rejects when symbol characters outnumber letters+digits (strictly).
// Whitespace-only text rejects with ratio 1.
FilterReport symbol_ratio_filter(const Document& doc);

// Rejects when any normalized paragraph occurs more than para_repeat_max
// times or any non-whitespace code point repeats more than char_run_max
// times in a row.
FilterReport redundancy_filter(const Document& doc, int para_repeat_max, int char_run_max);

struct FilterOutcome {
    std::vector<Document> kept;
    std::vector<FilterReport> reports;  // one per input, input order
};

// length -> symbol -> redundancy; first failure wins.
FilterOutcome run_filters(const std::vector<Document>& docs, const FilterConfig& config);

Json to_json(const Document& doc);
Document document_from_json(const Json& j);
Json to_json(const FilterReport& report);

}  // namespace air
