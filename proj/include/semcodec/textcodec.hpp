// Text layer of the codec: the 16-symbol alphabet, canonicalization, repair
// of model output, nibble packing and the rule-based devowel oracle.
#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcodec/errors.hpp"

namespace semcodec {

/// The fixed code: space at index 0, then the fifteen consonants in the
/// order the character-compression prompt lists them (n=1 ... v=15).
/// Interop tests pin this table; reordering it breaks every .smc file.
inline constexpr std::array<char, 16> kAlphabet = {' ', 'n', 't', 's', 'r', 'h', 'l', 'd',
                                                   'c', 'm', 'f', 'g', 'p', 'b', 'k', 'v'};

inline constexpr std::size_t kAlphabetSize = kAlphabet.size();
inline constexpr unsigned kBitsPerSymbol = 4;

using Symbol = std::uint8_t;

class Alphabet {
public:
    static constexpr std::optional<Symbol> index_of(char c) noexcept {
        for (std::size_t i = 0; i < kAlphabet.size(); ++i) {
            if (kAlphabet[i] == c) return static_cast<Symbol>(i);
        }
        return std::nullopt;
    }

    static constexpr bool contains(char c) noexcept { return index_of(c).has_value(); }

    static char symbol_at(Symbol s) {
        if (s >= kAlphabetSize) throw InvalidArgument("symbol index " + std::to_string(s) + " >= 16");
        return kAlphabet[s];
    }
};

/// Sequence of alphabet indices. Every element is < 16 by construction.
class SymbolString {
public:
    SymbolString() = default;

    explicit SymbolString(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            if (symbols_[i] >= kAlphabetSize) {
                throw InvalidArgument("symbol " + std::to_string(symbols_[i]) + " at position " +
                                      std::to_string(i) + " is not a 4-bit alphabet index");
            }
        }
    }

    SymbolString(std::initializer_list<Symbol> symbols)
        : SymbolString(std::vector<Symbol>(symbols)) {}

    std::size_t size() const noexcept { return symbols_.size(); }
    bool empty() const noexcept { return symbols_.empty(); }
    std::uint64_t bit_length() const noexcept { return kBitsPerSymbol * symbols_.size(); }

    Symbol operator[](std::size_t i) const { return symbols_[i]; }
    std::span<const Symbol> view() const noexcept { return symbols_; }
    const std::vector<Symbol> &values() const noexcept { return symbols_; }

    auto begin() const noexcept { return symbols_.begin(); }
    auto end() const noexcept { return symbols_.end(); }

    friend bool operator==(const SymbolString &, const SymbolString &) = default;

private:
    std::vector<Symbol> symbols_;
};

/// How to treat characters that fall outside the alphabet.
struct RepairPolicy {
    enum class Mode { strict, repair };

    Mode mode = Mode::repair;
    /// '\0' as a target means the character is dropped.
    std::map<char, char> substitutions;

    static RepairPolicy strict() { return RepairPolicy{Mode::strict, {}}; }

    static RepairPolicy repair() {
        return RepairPolicy{Mode::repair,
                            {{'w', 'v'}, {'j', 'g'}, {'q', 'k'}, {'x', 'k'}, {'z', 's'}, {'y', '\0'}}};
    }

    bool is_strict() const noexcept { return mode == Mode::strict; }

    /// Substitution targets must be alphabet members (or the drop marker).
    bool valid() const {
        if (is_strict() && !substitutions.empty()) return false;
        return std::all_of(substitutions.begin(), substitutions.end(), [](const auto &kv) {
            return kv.second == '\0' || Alphabet::contains(kv.second);
        });
    }
};

inline std::string to_string(RepairPolicy::Mode mode) {
    return mode == RepairPolicy::Mode::strict ? "strict" : "repair";
}

inline RepairPolicy parse_policy(std::string_view name) {
    if (name == "strict") return RepairPolicy::strict();
    if (name == "repair") return RepairPolicy::repair();
    throw InvalidArgument("unknown repair policy '" + std::string(name) + "'");
}

namespace detail {

inline bool is_vowel(char c) noexcept {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Joins the tokens of `text` (split on ' ') with single spaces.
inline std::string collapse_spaces(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (c == ' ') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// Decodes one UTF-8 sequence starting at text[i]. Returns the code point
// and advances i; invalid bytes yield nullopt and advance by one.
inline std::optional<char32_t> next_code_point(std::string_view text, std::size_t &i) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
        ++i;
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
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
        return std::nullopt;
    }
    if (i + len > text.size()) {
        ++i;
        return std::nullopt;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(text[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return std::nullopt;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

inline bool is_unicode_space(char32_t cp) noexcept {
    return cp == 0x85 || cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) ||
           cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

inline bool is_unicode_punct(char32_t cp) noexcept {
    // Latin-1 punctuation and symbols, General Punctuation, CJK punctuation,
    // fullwidth ASCII punctuation.
    return (cp >= 0xA1 && cp <= 0xBF && cp != 0xAA && cp != 0xB5 && cp != 0xBA) || cp == 0xD7 ||
           cp == 0xF7 || (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
           (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
           (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
           (cp >= 0xFF5B && cp <= 0xFF65) || (cp >= 0x2E00 && cp <= 0x2E7F);
}

inline void append_utf8(std::string &out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace detail

/// Lowercases, deletes punctuation, collapses whitespace runs and trims.
/// Total and idempotent. Non-ASCII letters are kept unchanged; invalid UTF-8
/// bytes are dropped.
inline std::string canonicalize(std::string_view text) {
    std::string spaced;
    spaced.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto cp = detail::next_code_point(text, i);
        if (!cp) continue;
        const char32_t c = *cp;
        if (c < 0x80) {
            const auto ch = static_cast<unsigned char>(c);
            if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f') {
                spaced.push_back(' ');
            } else if (ch >= 'A' && ch <= 'Z') {
                spaced.push_back(static_cast<char>(ch - 'A' + 'a'));
            } else if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9')) {
                spaced.push_back(static_cast<char>(ch));
            }
            // remaining ASCII: punctuation and control characters, deleted
        } else if (detail::is_unicode_space(c)) {
            spaced.push_back(' ');
        } else if (!detail::is_unicode_punct(c)) {
            detail::append_utf8(spaced, c);
        }
    }
    return detail::collapse_spaces(spaced);
}

/// Maps canonical text onto alphabet indices.
/// Strict: any out-of-alphabet character throws IllegalSymbol.
/// Repair: substitutes per the policy table, drops everything else, then
/// re-collapses whitespace.
inline SymbolString to_symbols(std::string_view text, const RepairPolicy &policy) {
    if (policy.is_strict()) {
        std::vector<Symbol> out;
        out.reserve(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            const auto idx = Alphabet::index_of(text[i]);
            if (!idx) throw IllegalSymbol(i, text[i]);
            out.push_back(*idx);
        }
        return SymbolString(std::move(out));
    }

    std::string kept;
    kept.reserve(text.size());
    for (char c : text) {
        if (Alphabet::contains(c)) {
            kept.push_back(c);
        } else if (auto it = policy.substitutions.find(c); it != policy.substitutions.end()) {
            if (it->second != '\0') kept.push_back(it->second);
        } else if (c == '\t' || c == '\n') {
            kept.push_back(' ');
        }
    }
    const std::string collapsed = detail::collapse_spaces(kept);
    std::vector<Symbol> out;
    out.reserve(collapsed.size());
    for (char c : collapsed) out.push_back(*Alphabet::index_of(c));
    return SymbolString(std::move(out));
}

inline std::string from_symbols(const SymbolString &s) {
    std::string out;
    out.reserve(s.size());
    for (Symbol sym : s) out.push_back(kAlphabet[sym]);
    return out;
}

/// Two symbols per byte, first in the high nibble; an odd tail gets a zero
/// low nibble.
inline std::vector<std::uint8_t> pack(const SymbolString &s) {
    std::vector<std::uint8_t> out((s.size() + 1) / 2, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto nibble = static_cast<std::uint8_t>(s[i] & 0x0F);
        out[i / 2] |= (i % 2 == 0) ? static_cast<std::uint8_t>(nibble << 4) : nibble;
    }
    return out;
}

inline SymbolString unpack(std::span<const std::uint8_t> bytes, std::uint64_t symbol_count) {
    if (bytes.size() != (symbol_count + 1) / 2) throw LengthMismatch(bytes.size(), symbol_count);
    std::vector<Symbol> out;
    out.reserve(static_cast<std::size_t>(symbol_count));
    for (std::uint64_t i = 0; i < symbol_count; ++i) {
        const std::uint8_t byte = bytes[static_cast<std::size_t>(i / 2)];
        out.push_back(static_cast<Symbol>(i % 2 == 0 ? byte >> 4 : byte & 0x0F));
    }
    return SymbolString(std::move(out));
}

/// Rule-based stand-in for the model's character compression: delete
/// vowels, apply the policy's substitutions, drop anything still outside the
/// alphabet, collapse whitespace. Only the mock backend and tests use it.
/// No stemming is attempted; plural removal belongs to the model.
inline std::string devowel_oracle(std::string_view text, const RepairPolicy &policy) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (detail::is_vowel(c)) continue;
        if (Alphabet::contains(c)) {
            out.push_back(c);
        } else if (auto it = policy.substitutions.find(c); it != policy.substitutions.end()) {
            if (it->second != '\0') out.push_back(it->second);
        }
    }
    return detail::collapse_spaces(out);
}

/// Splits on single spaces; canonical text has no empty tokens.
inline std::vector<std::string> split_words(std::string_view canonical) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < canonical.size()) {
        std::size_t end = canonical.find(' ', start);
        if (end == std::string_view::npos) end = canonical.size();
        if (end > start) words.emplace_back(canonical.substr(start, end - start));
        start = end + 1;
    }
    return words;
}

}  // namespace semcodec
