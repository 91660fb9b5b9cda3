#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "air/corpus.hpp"
#include "air/llm.hpp"

namespace airtest {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("air-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// N whitespace words: "w1 w2 ... wN".
inline std::string words(int n, const std::string& prefix = "w") {
    std::string out;
    for (int i = 1; i <= n; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += prefix + std::to_string(i);
    }
    return out;
}

inline air::LlmGateway make_mock_gateway(std::vector<air::MockRule> script,
                                         std::shared_ptr<air::AuditSink> audit = nullptr) {
    auto backend = std::make_shared<air::MockChatBackend>(std::move(script));
    return air::LlmGateway(backend, air::TemplateRegistry::with_defaults(),
                           air::RetryPolicy{3, 0, 2.0}, std::move(audit));
}

inline air::ModelRole guidance_role() {
    return air::ModelRole{air::ModelKind::guidance, "guidance-test", "http://mock", "", 1024, 0.0};
}

inline air::ModelRole current_role() {
    return air::ModelRole{air::ModelKind::current, "current-test", "http://mock", "", 1024, 0.7};
}

}  // namespace airtest
