#include <algorithm>

#include "gramprobe/checksum.hpp"
#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::dataset {
namespace {

struct CodePoint {
    char32_t value;
    std::size_t length;  // bytes consumed
    bool valid;
};

CodePoint decode_utf8(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1, true};

    std::size_t len = 0;
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
        return {b0, 1, false};
    }
    if (pos + len > s.size()) return {b0, 1, false};
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return {b0, 1, false};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len, true};
}

bool is_space(char32_t cp) noexcept {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x00A0: case 0x2009: case 0x200A: case 0x202F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x2008;
    }
}

bool is_digit(char32_t cp) noexcept { return cp >= U'0' && cp <= U'9'; }

enum class Kind { Space, Letter, Digit, Symbol };

Kind classify(const CodePoint& c) {
    if (!c.valid) return Kind::Symbol;
    if (is_space(c.value)) return Kind::Space;
    if (is_letter(c.value)) return Kind::Letter;
    if (is_digit(c.value)) return Kind::Digit;
    return Kind::Symbol;
}

}  // namespace

bool is_letter(char32_t cp) noexcept {
    if ((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z')) return true;
    return cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7;
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const CodePoint c = decode_utf8(text, pos);
        const Kind kind = classify(c);
        if (kind == Kind::Space) {
            pos += c.length;
            continue;
        }
        std::size_t end = pos + c.length;
        if (kind == Kind::Letter || kind == Kind::Digit) {
            while (end < text.size()) {
                const CodePoint next = decode_utf8(text, end);
                if (classify(next) != kind) break;
                end += next.length;
            }
        }
        out.push_back(Token{std::string(text.substr(pos, end - pos)), kind == Kind::Letter});
        pos = end;
    }
    return out;
}

std::string detokenize(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i].text;
    }
    return out;
}

bool Vocabulary::contains(std::string_view word) const {
    return std::binary_search(entries.begin(), entries.end(), word);
}

Vocabulary build_vocab(const std::vector<std::string>& sentences) {
    std::set<std::string> words;
    Fnv1a64 hash;
    for (const auto& s : sentences) {
        hash.update(s);
        hash.update("\n");
        for (auto& tok : tokenize(s)) {
            if (tok.is_alpha) words.insert(std::move(tok.text));
        }
    }
    if (words.empty()) throw DataError("empty vocabulary: corpus contains no alphabetic span");
    return Vocabulary{std::vector<std::string>(words.begin(), words.end()), hash.hex()};
}

}  // namespace gramprobe::dataset
