#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "air/errors.hpp"
#include "air/llm.hpp"

namespace air {

namespace {

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // path prefix, no trailing slash
};

EndpointParts split_endpoint(const std::string& endpoint) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + endpoint);
    }
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    EndpointParts parts;
    if (path_start == std::string::npos) {
        parts.base = endpoint;
    } else {
        parts.base = endpoint.substr(0, path_start);
        parts.path = endpoint.substr(path_start);
        while (!parts.path.empty() && parts.path.back() == '/') parts.path.pop_back();
    }
    return parts;
}

std::string bearer_token(const ModelRole& role) {
    if (role.api_key_env.empty()) return "";
    const char* value = std::getenv(role.api_key_env.c_str());
    return value ? value : "";
}

bool retryable_status(int status) {
    return status == 408 || status == 409 || status == 429 || status >= 500;
}

Json post_json(const ModelRole& role, const std::string& route, const Json& payload) {
    EndpointParts parts = split_endpoint(role.endpoint);
    httplib::Client client(parts.base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(300, 0);
    httplib::Headers headers;
    std::string token = bearer_token(role);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(parts.path + route, headers, payload.dump(), "application/json");
    if (!res) {
        throw TransportError("connection to " + role.endpoint + " failed: " +
                                 httplib::to_string(res.error()),
                             0, true);
    }
    if (res->status != 200) {
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + role.endpoint +
                                 ": " + res->body.substr(0, 200),
                             res->status, retryable_status(res->status));
    }
    Json body = Json::parse(res->body, nullptr, false);
    if (body.is_discarded()) {
        throw TransportError("non-JSON body from " + role.endpoint, res->status, false);
    }
    return body;
}

}  // namespace

std::string HttpChatBackend::complete(const ChatRequest& request) {
    const ModelRole& role = *request.role;
    Json payload{{"model", role.model_name},
                 {"messages", Json::array({Json{{"role", "user"}, {"content", request.prompt}}})},
                 {"temperature", role.temperature},
                 {"max_tokens", role.max_tokens}};
    Json body = post_json(role, "/chat/completions", payload);
    try {
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception&) {
        throw TransportError("malformed chat completion response from " + role.endpoint, 200,
                             false);
    }
}

HttpEmbedding::HttpEmbedding(ModelRole role) : role_(std::move(role)) {}

std::string HttpEmbedding::id() const {
    return "http:" + role_.model_name;
}

std::vector<double> HttpEmbedding::embed(const std::string& text) {
    Json payload{{"model", role_.model_name}, {"input", Json::array({text})}};
    Json body = post_json(role_, "/embeddings", payload);
    try {
        return body.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const Json::exception&) {
        throw TransportError("malformed embedding response from " + role_.endpoint, 200, false);
    }
}

}  // namespace air
