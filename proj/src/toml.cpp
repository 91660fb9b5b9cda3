#include "air/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "air/errors.hpp"
#include "air/text.hpp"

namespace air {

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;

    [[noreturn]] void fail(const std::string& message) const {
        throw ConfigError("config line " + std::to_string(line) + ": " + message);
    }

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void advance() {
        if (text[pos] == '\n') ++line;
        ++pos;
    }

    void skip_ws_inline() {
        while (!done() && (peek() == ' ' || peek() == '\t')) advance();
    }

    void skip_ws_and_comments() {
        while (!done()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                advance();
            } else if (c == '#') {
                while (!done() && peek() != '\n') advance();
            } else {
                break;
            }
        }
    }

    void skip_to_eol() {
        skip_ws_inline();
        if (!done() && peek() == '#') {
            while (!done() && peek() != '\n') advance();
        }
        if (!done()) {
            if (peek() != '\n' && peek() != '\r') fail("unexpected trailing characters");
        }
    }
};

std::string parse_basic_string(Cursor& cur) {
    // opening quote already consumed by caller? No: consume here
    cur.advance();  // opening '"'
    std::string out;
    while (!cur.done()) {
        char c = cur.peek();
        if (c == '"') {
            cur.advance();
            return out;
        }
        if (c == '\n') cur.fail("unterminated string");
        if (c == '\\') {
            cur.advance();
            if (cur.done()) cur.fail("unterminated escape");
            char esc = cur.peek();
            cur.advance();
            switch (esc) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: cur.fail(std::string("unsupported escape \\") + esc);
            }
            continue;
        }
        out.push_back(c);
        cur.advance();
    }
    cur.fail("unterminated string");
}

Json parse_scalar(Cursor& cur) {
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("expected a value");
    char c = cur.peek();
    if (c == '"') return Json(parse_basic_string(cur));
    // bare token: number or boolean
    std::string token;
    while (!cur.done()) {
        char t = cur.peek();
        if (t == ',' || t == ']' || t == '#' || t == '\n' || t == '\r' || t == ' ' || t == '\t') {
            break;
        }
        token.push_back(t);
        cur.advance();
    }
    if (token == "true") return Json(true);
    if (token == "false") return Json(false);
    if (token.empty()) cur.fail("expected a value");
    bool is_float = token.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (is_float) {
            double v = std::stod(token, &used);
            if (used != token.size()) cur.fail("bad number: " + token);
            return Json(v);
        }
        long long v = std::stoll(token, &used);
        if (used != token.size()) cur.fail("bad number: " + token);
        return Json(v);
    } catch (const std::exception&) {
        cur.fail("unrecognized value: " + token);
    }
}

Json parse_value(Cursor& cur) {
    cur.skip_ws_inline();
    if (cur.done()) cur.fail("expected a value");
    if (cur.peek() != '[') return parse_scalar(cur);
    cur.advance();  // '['
    Json array = Json::array();
    for (;;) {
        cur.skip_ws_and_comments();
        if (cur.done()) cur.fail("unterminated array");
        if (cur.peek() == ']') {
            cur.advance();
            return array;
        }
        array.push_back(parse_scalar(cur));
        cur.skip_ws_and_comments();
        if (cur.done()) cur.fail("unterminated array");
        if (cur.peek() == ',') {
            cur.advance();
            continue;
        }
        if (cur.peek() == ']') {
            cur.advance();
            return array;
        }
        cur.fail("expected ',' or ']' in array");
    }
}

std::string parse_key(Cursor& cur) {
    cur.skip_ws_inline();
    std::string key;
    while (!cur.done()) {
        char c = cur.peek();
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
            key.push_back(c);
            cur.advance();
        } else {
            break;
        }
    }
    if (key.empty()) cur.fail("expected a key");
    return key;
}

Json* descend(Json& root, const std::string& dotted, Cursor& cur) {
    Json* node = &root;
    std::size_t start = 0;
    for (;;) {
        std::size_t dot = dotted.find('.', start);
        std::string part = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) cur.fail("empty table name component");
        if (!node->contains(part)) (*node)[part] = Json::object();
        node = &(*node)[part];
        if (!node->is_object()) cur.fail("key '" + part + "' is not a table");
        if (dot == std::string::npos) return node;
        start = dot + 1;
    }
}

}  // namespace

Json parse_toml(const std::string& text) {
    Json root = Json::object();
    Json* current = &root;
    Cursor cur{text};
    for (;;) {
        cur.skip_ws_and_comments();
        if (cur.done()) break;
        if (cur.peek() == '[') {
            cur.advance();
            std::string name = parse_key(cur);
            cur.skip_ws_inline();
            if (cur.done() || cur.peek() != ']') cur.fail("expected ']' after table name");
            cur.advance();
            cur.skip_to_eol();
            current = descend(root, name, cur);
            continue;
        }
        std::string key = parse_key(cur);
        cur.skip_ws_inline();
        if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
        cur.advance();
        Json value = parse_value(cur);
        cur.skip_to_eol();
        if (key.find('.') != std::string::npos) cur.fail("dotted keys are not supported");
        (*current)[key] = std::move(value);
    }
    return root;
}

Json parse_toml_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

}  // namespace air
