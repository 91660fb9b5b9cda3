#include "air/jsonl.hpp"

#include <fstream>

#include "air/errors.hpp"

namespace air {

JsonlReadResult read_jsonl_lenient(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open file: " + path.string());
    JsonlReadResult result;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) continue;
        Json record = Json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            result.errors.push_back({line_no, "malformed JSON"});
            continue;
        }
        result.records.push_back(std::move(record));
        result.record_lines.push_back(line_no);
    }
    return result;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    JsonlReadResult result = read_jsonl_lenient(path);
    if (!result.errors.empty()) {
        throw IngestError(path.string() + ": malformed JSON at line " +
                          std::to_string(result.errors.front().line));
    }
    return std::move(result.records);
}

std::string dump_jsonl(const std::vector<Json>& records) {
    std::string out;
    for (const Json& record : records) {
        out += record.dump();
        out += '\n';
    }
    return out;
}

}  // namespace air
