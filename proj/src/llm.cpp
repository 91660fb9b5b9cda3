#include "air/llm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "air/errors.hpp"
#include "air/text.hpp"

namespace air {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::guidance: return "guidance";
        case ModelKind::current: return "current";
        case ModelKind::embedding: return "embedding";
    }
    return "guidance";
}

PromptTemplate make_template(std::string name, std::string body) {
    PromptTemplate tpl;
    tpl.name = std::move(name);
    tpl.body = std::move(body);
    std::size_t pos = 0;
    while ((pos = tpl.body.find('{', pos)) != std::string::npos) {
        std::size_t end = tpl.body.find('}', pos);
        if (end == std::string::npos) break;
        std::string placeholder = tpl.body.substr(pos + 1, end - pos - 1);
        if (!placeholder.empty() &&
            placeholder.find_first_of(" \t\n{") == std::string::npos) {
            if (std::find(tpl.placeholders.begin(), tpl.placeholders.end(), placeholder) ==
                tpl.placeholders.end()) {
                tpl.placeholders.push_back(std::move(placeholder));
            }
        }
        pos = end + 1;
    }
    return tpl;
}

std::string render_template(const PromptTemplate& tpl, const Bindings& bindings) {
    for (const std::string& placeholder : tpl.placeholders) {
        if (!bindings.contains(placeholder)) {
            throw TemplateError("template '" + tpl.name + "': unbound placeholder {" +
                                placeholder + "}");
        }
    }
    std::string out;
    out.reserve(tpl.body.size());
    std::size_t pos = 0;
    while (pos < tpl.body.size()) {
        std::size_t open = tpl.body.find('{', pos);
        if (open == std::string::npos) {
            out.append(tpl.body, pos, std::string::npos);
            break;
        }
        out.append(tpl.body, pos, open - pos);
        std::size_t close = tpl.body.find('}', open);
        if (close == std::string::npos) {
            out.append(tpl.body, open, std::string::npos);
            break;
        }
        std::string key = tpl.body.substr(open + 1, close - open - 1);
        auto it = bindings.find(key);
        if (it != bindings.end()) {
            out.append(it->second);
        } else {
            out.append(tpl.body, open, close - open + 1);
        }
        pos = close + 1;
    }
    return out;
}

const PromptTemplate& TemplateRegistry::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw TemplateError("unknown template: " + name);
    return it->second;
}

bool TemplateRegistry::contains(const std::string& name) const {
    return templates_.contains(name);
}

void TemplateRegistry::set(PromptTemplate tpl) {
    templates_[tpl.name] = std::move(tpl);
}

void TemplateRegistry::load_overrides(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("template override dir does not exist: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        set(make_template(entry.path().stem().string(), std::move(body)));
    }
}

std::vector<std::string> TemplateRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [name, tpl] : templates_) out.push_back(name);
    return out;
}

Json to_json(const ChatExchange& exchange) {
    return Json{{"template_name", exchange.template_name},
                {"rendered_prompt", exchange.rendered_prompt},
                {"raw_response", exchange.raw_response},
                {"model_name", exchange.model_name},
                {"latency_ms", exchange.latency_ms},
                {"attempt", exchange.attempt}};
}

FileAuditSink::FileAuditSink(const std::filesystem::path& path)
    : path_(path.string()), file_(nullptr, &std::fclose) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    file_.reset(std::fopen(path_.c_str(), "a"));
    if (!file_) throw StoreError("cannot open audit log: " + path_);
}

void FileAuditSink::record(const ChatExchange& exchange) {
    std::string line = to_json(exchange).dump();
    line.push_back('\n');
    std::lock_guard lock(mutex_);
    std::fwrite(line.data(), 1, line.size(), file_.get());
    std::fflush(file_.get());
}

void MemoryAuditSink::record(const ChatExchange& exchange) {
    std::lock_guard lock(mutex_);
    exchanges_.push_back(exchange);
}

std::vector<ChatExchange> MemoryAuditSink::exchanges() const {
    std::lock_guard lock(mutex_);
    return exchanges_;
}

void CallCounter::add(const std::string& template_name, const std::string& doc_id) {
    std::lock_guard lock(mutex_);
    ++total_;
    ++by_template_[template_name];
    if (!doc_id.empty()) ++by_doc_[doc_id];
}

long long CallCounter::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

long long CallCounter::by_template(const std::string& template_name) const {
    std::lock_guard lock(mutex_);
    auto it = by_template_.find(template_name);
    return it == by_template_.end() ? 0 : it->second;
}

long long CallCounter::by_doc(const std::string& doc_id) const {
    std::lock_guard lock(mutex_);
    auto it = by_doc_.find(doc_id);
    return it == by_doc_.end() ? 0 : it->second;
}

std::map<std::string, long long> CallCounter::doc_totals() const {
    std::lock_guard lock(mutex_);
    return by_doc_;
}

void CallCounter::reset() {
    std::lock_guard lock(mutex_);
    total_ = 0;
    by_template_.clear();
    by_doc_.clear();
}

std::optional<std::string> try_parse_tagged_field(const std::string& raw,
                                                  const std::string& tag) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    std::size_t start = raw.find(open);
    if (start == std::string::npos) return std::nullopt;
    start += open.size();
    std::size_t end = raw.find(close, start);
    if (end == std::string::npos) return std::nullopt;
    return trim(raw.substr(start, end - start));
}

std::string parse_tagged_field(const std::string& raw, const std::string& tag) {
    auto value = try_parse_tagged_field(raw, tag);
    if (!value) throw ParseError("missing <" + tag + "> block in model output");
    return *value;
}

RateLimiter::RateLimiter(RateLimit limit)
    : limit_(limit),
      capacity_(std::max(1.0, limit.requests_per_minute / 30.0)),
      tokens_(capacity_),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    std::unique_lock lock(mutex_);
    for (;;) {
        if (limit_.requests_per_minute > 0) {
            auto now = std::chrono::steady_clock::now();
            double elapsed = std::chrono::duration<double>(now - last_refill_).count();
            tokens_ = std::min(capacity_, tokens_ + elapsed * limit_.requests_per_minute / 60.0);
            last_refill_ = now;
        } else {
            tokens_ = 1.0;
        }
        bool slot_free = limit_.max_in_flight <= 0 || in_flight_ < limit_.max_in_flight;
        if (tokens_ >= 1.0 && slot_free) {
            if (limit_.requests_per_minute > 0) tokens_ -= 1.0;
            ++in_flight_;
            return;
        }
        if (!slot_free) {
            cv_.wait(lock);
        } else {
            double deficit = 1.0 - tokens_;
            auto wait = std::chrono::duration<double>(
                deficit * 60.0 / std::max(limit_.requests_per_minute, 1e-9));
            cv_.wait_for(lock, std::chrono::duration_cast<std::chrono::milliseconds>(wait) +
                                   std::chrono::milliseconds(1));
        }
    }
}

void RateLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_all();
}

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, TemplateRegistry templates,
                       RetryPolicy retry, std::shared_ptr<AuditSink> audit, RateLimit rate_limit)
    : backend_(std::move(backend)),
      templates_(std::move(templates)),
      retry_(retry),
      audit_(audit ? std::move(audit) : std::make_shared<NullAuditSink>()),
      rate_limit_(rate_limit) {}

RateLimiter& LlmGateway::limiter_for(const std::string& endpoint) {
    std::lock_guard lock(limiter_mutex_);
    auto it = limiters_.find(endpoint);
    if (it == limiters_.end()) {
        it = limiters_.emplace(endpoint, std::make_unique<RateLimiter>(rate_limit_)).first;
    }
    return *it->second;
}

void LlmGateway::begin_stage(const std::string& stage, long long cap) {
    std::lock_guard lock(stage_mutex_);
    stage_ = stage;
    stage_cap_ = cap;
    stage_calls_ = 0;
}

ChatExchange LlmGateway::complete(const ModelRole& role, const std::string& template_name,
                                  const Bindings& bindings, const std::string& suffix) {
    const PromptTemplate& tpl = templates_.get(template_name);
    std::string prompt = render_template(tpl, bindings);
    if (!suffix.empty()) {
        prompt += "\n\n";
        prompt += suffix;
    }

    {
        std::lock_guard lock(stage_mutex_);
        if (stage_cap_ >= 0 && stage_calls_ + 1 > stage_cap_) {
            throw BudgetError("stage '" + stage_ + "' exceeded its call budget of " +
                              std::to_string(stage_cap_));
        }
        ++stage_calls_;
    }

    ChatRequest request{&role, template_name, prompt, &bindings};
    ChatExchange exchange;
    exchange.template_name = template_name;
    exchange.rendered_prompt = prompt;
    exchange.model_name = role.model_name;

    const bool limited = rate_limit_.requests_per_minute > 0 || rate_limit_.max_in_flight > 0;
    RateLimiter* limiter = limited ? &limiter_for(role.endpoint) : nullptr;

    const auto t0 = std::chrono::steady_clock::now();
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            if (limiter) limiter->acquire();
            try {
                exchange.raw_response = backend_->complete(request);
            } catch (...) {
                if (limiter) limiter->release();
                throw;
            }
            if (limiter) limiter->release();
            break;
        } catch (const TransportError& err) {
            if (!err.retryable || attempt >= retry_.max_attempts) throw;
            auto delay = static_cast<long>(retry_.base_delay_ms *
                                           std::pow(retry_.multiplier, attempt - 1));
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    exchange.latency_ms =
        static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count());
    exchange.attempt = attempt;

    auto doc_it = bindings.find("doc_id");
    counter_.add(template_name, doc_it == bindings.end() ? "" : doc_it->second);
    audit_->record(exchange);  // persisted before the caller sees the result
    return exchange;
}

TaggedResult LlmGateway::complete_tagged(const ModelRole& role, const std::string& template_name,
                                         const Bindings& bindings, const std::string& tag,
                                         const Validator& validate) {
    TaggedResult result;
    std::string suffix;
    for (int round = 0; round < 2; ++round) {
        ChatExchange exchange = complete(role, template_name, bindings, suffix);
        ++result.calls;
        auto value = try_parse_tagged_field(exchange.raw_response, tag);
        if (!value || value->empty()) {
            result.error = "missing <" + tag + "> block";
            suffix = "Reminder: reply with the answer inside <" + tag + "></" + tag + "> tags.";
            continue;
        }
        if (validate) {
            if (auto err = validate(*value)) {
                result.error = *err;
                suffix = *err;
                continue;
            }
        }
        result.ok = true;
        result.value = std::move(*value);
        result.error.clear();
        return result;
    }
    return result;
}

// --- Mock backend ------------------------------------------------------------

MockChatBackend::MockChatBackend(std::vector<MockRule> script) : script_(std::move(script)) {}

std::string MockChatBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    for (auto it = script_.begin(); it != script_.end(); ++it) {
        if (it->template_name != request.template_name) continue;
        bool matches = true;
        for (const auto& [key, value] : it->where) {
            auto bound = request.bindings->find(key);
            if (bound == request.bindings->end() || bound->second != value) {
                matches = false;
                break;
            }
        }
        for (const std::string& key : it->absent) {
            if (request.bindings->contains(key)) {
                matches = false;
                break;
            }
        }
        if (!matches) continue;
        std::string response = it->response;
        script_.erase(it);
        return response;
    }
    throw MockScriptError("no scripted response for template '" + request.template_name + "'");
}

std::size_t MockChatBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return script_.size();
}

std::vector<MockRule> MockChatBackend::load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script: " + path.string());
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw ConfigError("mock script must be a JSON array: " + path.string());
    }
    std::vector<MockRule> rules;
    for (const Json& item : doc) {
        MockRule rule;
        rule.template_name = item.at("template").get<std::string>();
        rule.response = item.at("response").get<std::string>();
        if (item.contains("where")) {
            for (const auto& [key, value] : item["where"].items()) {
                rule.where[key] = value.get<std::string>();
            }
        }
        if (item.contains("absent")) {
            for (const Json& key : item["absent"]) rule.absent.push_back(key.get<std::string>());
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

Json MockChatBackend::rules_to_json(const std::vector<MockRule>& rules) {
    Json out = Json::array();
    for (const MockRule& rule : rules) {
        Json item{{"template", rule.template_name}, {"response", rule.response}};
        if (!rule.where.empty()) {
            Json where = Json::object();
            for (const auto& [key, value] : rule.where) where[key] = value;
            item["where"] = where;
        }
        if (!rule.absent.empty()) item["absent"] = rule.absent;
        out.push_back(std::move(item));
    }
    return out;
}

// --- Embedding providers -----------------------------------------------------

LocalHashEmbedding::LocalHashEmbedding(int dim) : dim_(dim) {
    if (dim_ < 2) throw ConfigError("local-hash embedding dim must be >= 2");
}

std::string LocalHashEmbedding::id() const {
    return "local-hash-" + std::to_string(dim_);
}

std::vector<double> LocalHashEmbedding::embed(const std::string& text) {
    std::vector<double> vec(static_cast<std::size_t>(dim_), 0.0);
    std::string lowered = to_lower_ascii(text);
    for (std::string_view token : split_whitespace(lowered)) {
        // FNV-1a 64-bit
        uint64_t h = 1469598103934665603ULL;
        for (char c : token) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        std::size_t idx = static_cast<std::size_t>(h % static_cast<uint64_t>(dim_));
        vec[idx] += (h >> 63) ? -1.0 : 1.0;
    }
    bool all_zero = true;
    for (double v : vec) {
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    }
    if (all_zero) vec[0] = 1.0;
    return vec;
}

MockEmbedding::MockEmbedding(std::map<std::string, std::vector<double>> table)
    : table_(std::move(table)) {}

std::string MockEmbedding::id() const { return "mock"; }

std::vector<double> MockEmbedding::embed(const std::string& text) {
    auto it = table_.find(text);
    if (it == table_.end()) throw TransportError("mock embedding has no entry for text", 0, false);
    return it->second;
}

}  // namespace air
