#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "air/jsonl.hpp"

namespace air {

enum class ModelKind { guidance, current, embedding };

std::string_view to_string(ModelKind kind);

struct ModelRole {
    ModelKind kind = ModelKind::guidance;
    std::string model_name;
    std::string endpoint;     // base URL, e.g. "http://localhost:8000/v1"
    std::string api_key_env;  // env var holding the bearer token; empty = none
    int max_tokens = 2048;
    double temperature = 0.0;
};

struct PromptTemplate {
    std::string name;
    std::string body;  // named {placeholder} slots
    std::vector<std::string> placeholders;
};

// Scans the body for {placeholder} slots.
PromptTemplate make_template(std::string name, std::string body);

using Bindings = std::map<std::string, std::string>;

// Throws TemplateError unless every placeholder has a binding. Unreferenced
// bindings are allowed (used for mock matching and audit keys).
std::string render_template(const PromptTemplate& tpl, const Bindings& bindings);

// Prompt registry with the pipeline's template set. Bodies can be replaced
// from a directory of <name>.txt files.
class TemplateRegistry {
public:
    static TemplateRegistry with_defaults();

    const PromptTemplate& get(const std::string& name) const;  // throws TemplateError
    bool contains(const std::string& name) const;
    void set(PromptTemplate tpl);
    void load_overrides(const std::filesystem::path& dir);
    std::vector<std::string> names() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

struct ChatExchange {
    std::string template_name;
    std::string rendered_prompt;
    std::string raw_response;
    std::string model_name;
    int latency_ms = 0;
    int attempt = 1;
};

Json to_json(const ChatExchange& exchange);

struct ChatRequest {
    const ModelRole* role = nullptr;
    std::string template_name;
    std::string prompt;
    const Bindings* bindings = nullptr;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns the model's text. Throws TransportError on failure.
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 250;
    double multiplier = 2.0;
};

struct RateLimit {
    double requests_per_minute = 0.0;  // 0 = unlimited
    int max_in_flight = 0;             // 0 = unbounded
};

// Token bucket (~2s burst capacity) plus an in-flight gate. One limiter per
// endpoint; acquire/release wrap each transport attempt.
class RateLimiter {
public:
    explicit RateLimiter(RateLimit limit);
    void acquire();
    void release();

private:
    RateLimit limit_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_refill_;
    int in_flight_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void record(const ChatExchange& exchange) = 0;
};

class NullAuditSink final : public AuditSink {
public:
    void record(const ChatExchange&) override {}
};

// JSONL audit log, flushed per record so results are persisted before use.
class FileAuditSink final : public AuditSink {
public:
    explicit FileAuditSink(const std::filesystem::path& path);
    void record(const ChatExchange& exchange) override;

private:
    std::mutex mutex_;
    std::string path_;
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file_;
};

class MemoryAuditSink final : public AuditSink {
public:
    void record(const ChatExchange& exchange) override;
    std::vector<ChatExchange> exchanges() const;

private:
    mutable std::mutex mutex_;
    std::vector<ChatExchange> exchanges_;
};

// Thread-safe accounting of logical gateway calls.
class CallCounter {
public:
    void add(const std::string& template_name, const std::string& doc_id);
    long long total() const;
    long long by_template(const std::string& template_name) const;
    long long by_doc(const std::string& doc_id) const;
    std::map<std::string, long long> doc_totals() const;
    void reset();

private:
    mutable std::mutex mutex_;
    long long total_ = 0;
    std::map<std::string, long long> by_template_;
    std::map<std::string, long long> by_doc_;
};

// Returns the trimmed content of the first <tag>...</tag> block.
// Throws ParseError when the tag is absent.
std::string parse_tagged_field(const std::string& raw, const std::string& tag);
std::optional<std::string> try_parse_tagged_field(const std::string& raw, const std::string& tag);

struct TaggedResult {
    bool ok = false;
    std::string value;
    std::string error;
    int calls = 0;
};

class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatBackend> backend, TemplateRegistry templates,
               RetryPolicy retry = {}, std::shared_ptr<AuditSink> audit = nullptr,
               RateLimit rate_limit = {});

    // Renders, calls the backend with transport retries, audits the exchange
    // before returning it. `suffix` is appended to the rendered prompt (used
    // for format-reminder retries).
    ChatExchange complete(const ModelRole& role, const std::string& template_name,
                          const Bindings& bindings, const std::string& suffix = "");

    // complete + parse_tagged_field, with one corrective retry. `validate`
    // may normalize the value or return an error string that becomes the
    // retry suffix.
    using Validator = std::function<std::optional<std::string>(std::string& value)>;
    TaggedResult complete_tagged(const ModelRole& role, const std::string& template_name,
                                 const Bindings& bindings, const std::string& tag,
                                 const Validator& validate = nullptr);

    const TemplateRegistry& templates() const { return templates_; }
    CallCounter& counter() { return counter_; }

    // Per-stage cap on logical calls; exceeding it throws BudgetError.
    // A negative cap disables enforcement.
    void begin_stage(const std::string& stage, long long cap);

private:
    RateLimiter& limiter_for(const std::string& endpoint);

    std::shared_ptr<ChatBackend> backend_;
    TemplateRegistry templates_;
    RetryPolicy retry_;
    std::shared_ptr<AuditSink> audit_;
    RateLimit rate_limit_;
    CallCounter counter_;
    std::mutex limiter_mutex_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
    std::mutex stage_mutex_;
    std::string stage_;
    long long stage_cap_ = -1;
    long long stage_calls_ = 0;
};

// --- Backends ---------------------------------------------------------------

struct MockRule {
    std::string template_name;
    Bindings where;                   // bindings that must match exactly
    std::vector<std::string> absent;  // binding keys that must not be present
    std::string response;
};

// Ordered script; each call consumes the first matching entry. Matching is
// serialized so parallel workers stay deterministic.
class MockChatBackend final : public ChatBackend {
public:
    explicit MockChatBackend(std::vector<MockRule> script);
    std::string complete(const ChatRequest& request) override;
    std::size_t remaining() const;

    static std::vector<MockRule> load_script(const std::filesystem::path& path);
    static Json rules_to_json(const std::vector<MockRule>& rules);

private:
    mutable std::mutex mutex_;
    std::vector<MockRule> script_;
};

// OpenAI-compatible chat completions over HTTP(S).
class HttpChatBackend final : public ChatBackend {
public:
    HttpChatBackend() = default;
    std::string complete(const ChatRequest& request) override;
};

// --- Embedding providers -----------------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    // Throws TransportError on failure.
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// Deterministic offline provider: feature-hashed bag of words.
class LocalHashEmbedding final : public EmbeddingProvider {
public:
    explicit LocalHashEmbedding(int dim = 64);
    std::string id() const override;
    std::vector<double> embed(const std::string& text) override;

private:
    int dim_;
};

// OpenAI-compatible /embeddings endpoint.
class HttpEmbedding final : public EmbeddingProvider {
public:
    explicit HttpEmbedding(ModelRole role);
    std::string id() const override;
    std::vector<double> embed(const std::string& text) override;

private:
    ModelRole role_;
};

// Scripted provider for tests: exact text -> vector.
class MockEmbedding final : public EmbeddingProvider {
public:
    explicit MockEmbedding(std::map<std::string, std::vector<double>> table);
    std::string id() const override;
    std::vector<double> embed(const std::string& text) override;

private:
    std::map<std::string, std::vector<double>> table_;
};

}  // namespace air
