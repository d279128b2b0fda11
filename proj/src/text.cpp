#include "dyadlss/text.hpp"

#include <cstdint>

namespace dyadlss::text {
namespace {

struct CodePoint {
    char32_t value;
    std::size_t length;  // 0 on malformed input
};

CodePoint decode(std::string_view s, std::size_t pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) return {lead, 1};

    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) {
        len = 2; cp = lead & 0x1F; min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3; cp = lead & 0x0F; min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4; cp = lead & 0x07; min = 0x10000;
    } else {
        return {0, 0};
    }
    if (pos + len > s.size()) return {0, 0};
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char c = byte(pos + i);
        if ((c & 0xC0) != 0x80) return {0, 0};
        cp = (cp << 6) | (c & 0x3F);
    }
    // overlong forms, surrogates and out-of-range values
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {0, 0};
    return {cp, len};
}

bool is_space(char32_t c) {
    switch (c) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
               (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    }
    switch (c) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
            return true;
        default:
            break;
    }
    return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
           (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
           (c >= 0xFE50 && c <= 0xFE6B) || (c >= 0xFF01 && c <= 0xFF0F);
}

// Splits on whitespace and calls fn(start, end) with byte offsets of each
// chunk. Malformed bytes are treated as ordinary (non-space) characters.
template <class Fn>
void for_each_chunk(std::string_view s, Fn&& fn) {
    std::size_t i = 0;
    std::size_t start = std::string_view::npos;
    while (i < s.size()) {
        CodePoint cp = decode(s, i);
        const std::size_t step = cp.length == 0 ? 1 : cp.length;
        const bool space = cp.length != 0 && is_space(cp.value);
        if (space) {
            if (start != std::string_view::npos) {
                fn(start, i);
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = i;
        }
        i += step;
    }
    if (start != std::string_view::npos) fn(start, s.size());
}

std::string strip_and_fold(std::string_view chunk) {
    // walk code points to find the first and last non-punctuation ones
    std::size_t begin = chunk.size();
    std::size_t end = 0;
    std::size_t i = 0;
    while (i < chunk.size()) {
        CodePoint cp = decode(chunk, i);
        const std::size_t step = cp.length == 0 ? 1 : cp.length;
        if (cp.length == 0 || !is_punct(cp.value)) {
            if (begin == chunk.size()) begin = i;
            end = i + step;
        }
        i += step;
    }
    if (begin >= end) return {};
    std::string out(chunk.substr(begin, end - begin));
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        CodePoint cp = decode(s, i);
        if (cp.length == 0) return false;
        i += cp.length;
    }
    return true;
}

std::string trim(std::string_view s) {
    std::size_t first = std::string_view::npos;
    std::size_t last = 0;
    for_each_chunk(s, [&](std::size_t a, std::size_t b) {
        if (first == std::string_view::npos) first = a;
        last = b;
    });
    if (first == std::string_view::npos) return {};
    return std::string(s.substr(first, last - first));
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    for_each_chunk(s, [&](std::size_t a, std::size_t b) {
        std::string tok = strip_and_fold(s.substr(a, b - a));
        if (!tok.empty()) tokens.push_back(std::move(tok));
    });
    return tokens;
}

std::size_t count_tokens(std::string_view s) {
    std::size_t n = 0;
    for_each_chunk(s, [&](std::size_t a, std::size_t b) {
        if (!strip_and_fold(s.substr(a, b - a)).empty()) ++n;
    });
    return n;
}

}  // namespace dyadlss::text
