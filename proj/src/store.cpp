#include "air/store.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "air/errors.hpp"
#include "air/hash.hpp"

namespace air {

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw StoreError("short write: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StoreError("rename failed for " + path.string() + ": " + ec.message());
    }
}

StageOutput write_stage_file(const std::filesystem::path& path, const std::string& content,
                             long long record_count) {
    atomic_write_text(path, content);
    StageOutput output;
    output.path = path.filename().string();
    output.sha256 = sha256_hex(content);
    output.record_count = record_count;
    return output;
}

Json to_json(const RunManifest& manifest) {
    Json stages = Json::object();
    for (const auto& [name, output] : manifest.stage_outputs) {
        stages[name] = Json{{"path", output.path},
                            {"sha256", output.sha256},
                            {"record_count", output.record_count}};
    }
    return Json{{"run_id", manifest.run_id},
                {"config_hash", manifest.config_hash},
                {"stage_outputs", stages},
                {"created_at", manifest.created_at},
                {"tool_version", manifest.tool_version}};
}

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    atomic_write_text(path, to_json(manifest).dump(2) + "\n");
}

std::optional<RunManifest> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    RunManifest manifest;
    try {
        manifest.run_id = doc.value("run_id", std::string());
        manifest.config_hash = doc.value("config_hash", std::string());
        manifest.created_at = doc.value("created_at", std::string());
        manifest.tool_version = doc.value("tool_version", std::string());
        if (doc.contains("stage_outputs")) {
            for (const auto& [name, entry] : doc["stage_outputs"].items()) {
                StageOutput output;
                output.path = entry.at("path").get<std::string>();
                output.sha256 = entry.at("sha256").get<std::string>();
                output.record_count = entry.value("record_count", 0LL);
                manifest.stage_outputs[name] = std::move(output);
            }
        }
    } catch (const Json::exception&) {
        return std::nullopt;
    }
    return manifest;
}

bool stage_output_valid(const RunManifest& manifest, const std::string& name,
                        const std::filesystem::path& base_dir) {
    auto it = manifest.stage_outputs.find(name);
    if (it == manifest.stage_outputs.end()) return false;
    std::filesystem::path file = base_dir / it->second.path;
    if (!std::filesystem::exists(file)) return false;
    try {
        return sha256_file(file) == it->second.sha256;
    } catch (const StoreError&) {
        return false;  // unreadable counts as missing
    }
}

}  // namespace air
