#include "refactor/utf8.hpp"

namespace refactor::utf8 {

namespace {

// Decodes one scalar starting at `i`. Returns the scalar and advances `i`.
// Malformed input consumes exactly one byte and yields U+FFFD.
char32_t decode_one(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
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
        ++i;
        return 0xFFFD;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates, and out-of-range values.
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                          (len == 4 && cp < 0x10000);
    if (overlong || (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
        ++i;
        return 0xFFFD;
    }
    i += len;
    return cp;
}

}  // namespace

std::vector<char32_t> decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) out.push_back(decode_one(text, i));
    return out;
}

std::size_t count_scalars(std::string_view text) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        decode_one(text, i);
        ++n;
    }
    return n;
}

bool is_valid(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t before = i;
        const char32_t cp = decode_one(text, i);
        // A genuine U+FFFD occupies three bytes; malformed input consumes one.
        if (cp == 0xFFFD && (i - before) != 3) return false;
    }
    return true;
}

}  // namespace refactor::utf8
