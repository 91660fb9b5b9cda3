#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace air {

// Insertion-ordered so serialized records keep a stable, readable field order.
using Json = nlohmann::ordered_json;

struct JsonlLineError {
    int line = 0;  // 1-based
    std::string message;
};

struct JsonlReadResult {
    std::vector<Json> records;
    std::vector<int> record_lines;  // 1-based source line of each record
    std::vector<JsonlLineError> errors;
};

// Malformed lines are reported, not fatal. Throws IngestError if the file
// cannot be opened.
JsonlReadResult read_jsonl_lenient(const std::filesystem::path& path);

// Throws IngestError on any malformed line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// One compact record per line, '\n' terminated.
std::string dump_jsonl(const std::vector<Json>& records);

}  // namespace air
