#pragma once

#include <filesystem>
#include <string>

#include "air/jsonl.hpp"

namespace air {

// Minimal TOML reader covering the config surface: [table] and
// [table.subtable] headers, bare keys, strings with basic escapes, integers,
// floats, booleans, and (possibly multi-line) arrays of scalars. Throws
// ConfigError with a line number on anything else.
Json parse_toml(const std::string& text);
Json parse_toml_file(const std::filesystem::path& path);

}  // namespace air
