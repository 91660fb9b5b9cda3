#include "air/text.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace air {

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// glibc wide-character tables carry Unicode properties under a UTF-8 locale.
locale_t classification_locale() {
    static locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", nullptr);
        if (!l) l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", nullptr);
        return l;
    }();
    return loc;
}

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",   "for",
        "from", "has",  "have", "in",   "is",   "it",   "its",  "of",   "on",
        "or",   "that", "the",  "to",   "was",  "were", "will", "with", "this",
        "these", "those", "your", "you", "must", "should", "do",  "not",  "no",
        "any",  "all",  "each", "than", "then", "into", "if",   "so",   "such",
    };
    return words;
}

}  // namespace

uint32_t next_codepoint(std::string_view text, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    std::size_t len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > text.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
        unsigned char bc = byte(pos + i);
        if ((bc & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (bc & 0x3F);
    }
    pos += len;
    return cp;
}

CharClass classify_codepoint(uint32_t cp) {
    if (cp < 0x80) {
        if (is_ascii_space(static_cast<unsigned char>(cp))) return CharClass::whitespace;
        if (std::isalnum(static_cast<int>(cp))) return CharClass::textual;
        return CharClass::symbol;
    }
    if (cp == 0xFFFD) return CharClass::symbol;
    locale_t loc = classification_locale();
    if (loc) {
        wint_t wc = static_cast<wint_t>(cp);
        if (iswspace_l(wc, loc)) return CharClass::whitespace;
        if (iswalpha_l(wc, loc) || iswdigit_l(wc, loc)) return CharClass::textual;
        return CharClass::symbol;
    }
    // No UTF-8 locale available: count non-ASCII as textual.
    return CharClass::textual;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i == n) break;
        std::size_t start = i;
        while (i < n && !is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back(text.substr(start, i - start));
    }
    return out;
}

int word_count(std::string_view text) {
    return static_cast<int>(split_whitespace(text).size());
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::string trim(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_ws = false;
    for (char c : text) {
        if (is_ascii_space(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_for_comparison(std::string_view text) {
    return to_lower_ascii(collapse_whitespace(trim(text)));
}

std::vector<std::string> split_paragraphs(std::string_view text) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::size_t pos = 0;
    const std::size_t n = text.size();
    auto flush = [&] {
        if (!trim(current).empty()) paragraphs.push_back(current);
        current.clear();
    };
    while (pos <= n) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            (eol == std::string_view::npos) ? text.substr(pos) : text.substr(pos, eol - pos);
        bool blank = trim(line).empty();
        if (blank) {
            flush();
        } else {
            if (!current.empty()) current.push_back('\n');
            current.append(line);
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    flush();
    return paragraphs;
}

int max_char_run(std::string_view text) {
    int best = 0;
    int run = 0;
    uint32_t prev = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        uint32_t cp = next_codepoint(text, pos);
        if (classify_codepoint(cp) == CharClass::whitespace) {
            run = 0;
            prev = 0;
            continue;
        }
        if (cp == prev) {
            ++run;
        } else {
            run = 1;
            prev = cp;
        }
        best = std::max(best, run);
    }
    return best;
}

std::vector<std::string> content_words(std::string_view text) {
    std::vector<std::string> out;
    for (std::string_view tok : split_whitespace(text)) {
        std::size_t b = 0;
        std::size_t e = tok.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(tok[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(tok[e - 1]))) --e;
        if (b >= e) continue;
        std::string word = to_lower_ascii(tok.substr(b, e - b));
        if (stopwords().contains(word)) continue;
        out.push_back(std::move(word));
    }
    return out;
}

int unique_trigrams(std::string_view text) {
    std::string lowered = to_lower_ascii(text);
    std::vector<std::string_view> tokens = split_whitespace(lowered);
    if (tokens.size() < 3) return 0;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
        std::string key;
        key.reserve(tokens[i].size() + tokens[i + 1].size() + tokens[i + 2].size() + 2);
        key.append(tokens[i]);
        key.push_back('\x1f');
        key.append(tokens[i + 1]);
        key.push_back('\x1f');
        key.append(tokens[i + 2]);
        seen.insert(std::move(key));
    }
    return static_cast<int>(seen.size());
}

}  // namespace air
