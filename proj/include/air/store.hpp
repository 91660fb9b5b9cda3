#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "air/jsonl.hpp"

namespace air {

struct StageOutput {
    std::string path;  // relative to the manifest's directory
    std::string sha256;
    long long record_count = 0;
};

struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::map<std::string, StageOutput> stage_outputs;
    std::string created_at;
    std::string tool_version;
};

// Writes via a temp file in the same directory, then renames. On failure the
// destination is left untouched.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

// Atomic write + hash + line count, ready for the manifest.
StageOutput write_stage_file(const std::filesystem::path& path, const std::string& content,
                             long long record_count);

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);
std::optional<RunManifest> load_manifest(const std::filesystem::path& path);

Json to_json(const RunManifest& manifest);

// True when the manifest entry exists and the file's recomputed sha256
// matches. Base dir resolves relative paths.
bool stage_output_valid(const RunManifest& manifest, const std::string& name,
                        const std::filesystem::path& base_dir);

}  // namespace air
