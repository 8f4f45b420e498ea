// Deterministic offline backend.
//
// Rules (every output is a pure function of fixtures and inputs):
//   describe        fixture text for the image's content hash; images this
//                   backend generated describe as their rendered scene text
//   word_select     canonicalize, drop stopwords, keep the first K words
//                   (K = first integer in the instruction)
//   word_compress   devowel_oracle with the default repair table
//   word_decompress per-token reverse dictionary; unknown tokens pass through
//   reflect_compare first content word of the original missing from the
//                   latest description -> "add <word>", else "no change"
//   generate        solid colour + stamp of sha256(prompt); the scene keeps
//                   the first render_word_limit words of the description
//   regenerate      stamp of sha256(prior_hash || edit); "add <word>"
//                   appends the word to the scene
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "semcodec/backend.hpp"
#include "semcodec/textcodec.hpp"

namespace semcodec {

inline const std::set<std::string, std::less<>> &mock_stopwords() {
    static const std::set<std::string, std::less<>> words = {
        "a",     "about", "above", "across", "against", "along", "among", "an",    "and",
        "any",   "are",   "around", "as",    "at",      "be",    "been",  "behind", "below",
        "beneath", "beside", "between", "both", "but",   "by",    "can",   "could", "do",
        "does",  "each",  "either", "for",   "from",    "has",   "have",  "having", "he",
        "her",   "his",   "i",     "in",    "into",    "is",    "it",    "its",    "near",
        "next",  "of",    "off",   "on",    "onto",    "or",    "other", "over",   "she",
        "so",    "some",  "such",  "than",  "that",    "the",   "their", "them",   "there",
        "these", "they",  "this",  "those", "through", "to",    "toward", "towards", "under",
        "up",    "upon",  "very",  "was",   "we",      "were",  "what",  "where",  "which",
        "while", "who",   "with",  "within", "without", "you",  "your",
    };
    return words;
}

inline std::vector<std::string> content_words(std::string_view text) {
    std::vector<std::string> out;
    for (auto &w : split_words(canonicalize(text))) {
        if (!mock_stopwords().contains(w)) out.push_back(std::move(w));
    }
    return out;
}

/// Devowels every word and keeps the alphabetically first word per key.
class ReverseDictionary {
public:
    ReverseDictionary() = default;

    explicit ReverseDictionary(std::vector<std::string> words) {
        std::sort(words.begin(), words.end());
        const auto policy = RepairPolicy::repair();
        for (const auto &w : words) {
            const std::string canon = canonicalize(w);
            if (canon.empty() || canon.find(' ') != std::string::npos) continue;
            const std::string key = devowel_oracle(canon, policy);
            if (!key.empty()) table_.emplace(key, canon);
        }
    }

    std::string expand(std::string_view token) const {
        const auto it = table_.find(std::string(token));
        return it == table_.end() ? std::string(token) : it->second;
    }

    std::size_t size() const noexcept { return table_.size(); }

private:
    std::unordered_map<std::string, std::string> table_;
};

inline std::vector<std::string> load_wordlist(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open word list " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() != '#') words.push_back(line);
    }
    return words;
}

/// Reads `<sha256-hex>.txt` files from `dir`; each holds one description.
inline std::map<std::string, std::string> load_mock_fixtures(const std::filesystem::path &dir) {
    std::map<std::string, std::string> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto &entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        const std::string stem = entry.path().stem().string();
        if (stem.size() != 64 ||
            !std::all_of(stem.begin(), stem.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
            continue;
        }
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        out.emplace(stem, std::move(text));
    }
    return out;
}

/// 1024x1024 placeholder: background colour from the first three digest
/// bytes, then the 256 digest bits as a 16x16 grid of 16-pixel cells in the
/// top-left corner (white = 1, black = 0).
inline Image placeholder_image(const Digest &digest, std::uint32_t side = kCanonicalSide) {
    Image img(side, side);
    for (std::uint32_t y = 0; y < side; ++y) {
        for (std::uint32_t x = 0; x < side; ++x) {
            auto *p = img.pixel(x, y);
            p[0] = digest[0];
            p[1] = digest[1];
            p[2] = digest[2];
        }
    }
    constexpr std::uint32_t kCell = 16;
    for (std::uint32_t bit = 0; bit < 256; ++bit) {
        const bool on = (digest[bit / 8] >> (7 - bit % 8)) & 1U;
        const std::uint32_t cx = (bit % 16) * kCell;
        const std::uint32_t cy = (bit / 16) * kCell;
        for (std::uint32_t y = cy; y < cy + kCell && y < side; ++y) {
            for (std::uint32_t x = cx; x < cx + kCell && x < side; ++x) {
                auto *p = img.pixel(x, y);
                p[0] = p[1] = p[2] = on ? 255 : 0;
            }
        }
    }
    return img;
}

/// Reads the stamp back out of a placeholder image.
inline Digest read_stamp(const Image &img) {
    Digest d{};
    constexpr std::uint32_t kCell = 16;
    for (std::uint32_t bit = 0; bit < 256; ++bit) {
        const auto *p = img.pixel((bit % 16) * kCell + kCell / 2, (bit / 16) * kCell + kCell / 2);
        if (p[0] > 127) d[bit / 8] |= static_cast<std::uint8_t>(1U << (7 - bit % 8));
    }
    return d;
}

struct MockOptions {
    bool supports_session_edit = true;
    std::size_t render_word_limit = 16;
};

class MockBackend : public Backend {
public:
    MockBackend(std::map<std::string, std::string> fixtures, std::vector<std::string> wordlist,
                MockOptions options = {})
        : fixtures_(std::move(fixtures)), dictionary_(std::move(wordlist)), options_(options) {}

    std::string name() const override { return "mock"; }

    BackendCapabilities capabilities() const override { return {options_.supports_session_edit}; }

    nlohmann::json parameters() const override {
        return {{"render_word_limit", options_.render_word_limit},
                {"supports_session_edit", options_.supports_session_edit}};
    }

    const ReverseDictionary &dictionary() const noexcept { return dictionary_; }

    void add_fixture(std::string hash, std::string description) {
        std::lock_guard lock(mu_);
        fixtures_.insert_or_assign(std::move(hash), std::move(description));
    }

    /// K parsed from a Word Select instruction, if present.
    static std::optional<std::size_t> first_integer(std::string_view text) {
        const auto it = std::find_if(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (it == text.end()) return std::nullopt;
        std::size_t value = 0;
        const char *begin = text.data() + (it - text.begin());
        auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
        if (ec != std::errc()) return std::nullopt;
        return value;
    }

    static std::string select_words(std::string_view text, std::optional<std::size_t> k) {
        auto words = content_words(text);
        if (k && words.size() > *k) words.resize(*k);
        return join(words);
    }

    static std::string compare(std::string_view latest, std::string_view original) {
        const auto seen_words = content_words(latest);
        const std::set<std::string> seen(seen_words.begin(), seen_words.end());
        for (const auto &w : content_words(original)) {
            if (!seen.contains(w)) return "add " + w;
        }
        return "no change";
    }

protected:
    std::string do_describe(const BackendSession &, const ImageRef &image, std::string_view) override {
        std::lock_guard lock(mu_);
        if (auto it = fixtures_.find(image.content_hash()); it != fixtures_.end()) return it->second;
        if (auto it = scenes_.find(image.content_hash()); it != scenes_.end()) return it->second;
        throw FixtureMissing(image.content_hash());
    }

    std::string do_transform(const BackendSession &session, TransformTask task,
                             std::string_view instruction, std::string_view payload) override {
        switch (task) {
            case TransformTask::word_select:
                return select_words(payload, first_integer(instruction));
            case TransformTask::word_compress:
                return devowel_oracle(canonicalize(payload), RepairPolicy::repair());
            case TransformTask::word_decompress: {
                std::vector<std::string> out;
                for (const auto &tok : split_words(canonicalize(payload))) out.push_back(dictionary_.expand(tok));
                return join(out);
            }
            case TransformTask::reflect_compare:
                return compare(session.last_reply_text().value_or(""), payload);
        }
        throw InvalidArgument("unknown transform task");
    }

    ImageRef do_generate(const BackendSession &, std::string_view instruction,
                         std::string_view description) override {
        ImageRef img(placeholder_image(sha256(compose(instruction, description))));
        auto words = split_words(canonicalize(description));
        if (words.size() > options_.render_word_limit) words.resize(options_.render_word_limit);
        remember(img.content_hash(), join(words));
        return img;
    }

    ImageRef do_regenerate(const BackendSession &, const ImageRef &prior, std::string_view,
                           std::string_view edit) override {
        ImageRef img(placeholder_image(sha256(prior.content_hash() + std::string(edit))));
        std::string scene;
        {
            std::lock_guard lock(mu_);
            if (auto it = scenes_.find(prior.content_hash()); it != scenes_.end()) scene = it->second;
        }
        constexpr std::string_view kAdd = "add ";
        if (edit.starts_with(kAdd)) {
            const std::string word = canonicalize(edit.substr(kAdd.size()));
            if (!word.empty()) scene = scene.empty() ? word : scene + " " + word;
        }
        remember(img.content_hash(), scene);
        return img;
    }

private:
    static std::string join(const std::vector<std::string> &words) {
        std::string out;
        for (const auto &w : words) {
            if (!out.empty()) out.push_back(' ');
            out += w;
        }
        return out;
    }

    void remember(const std::string &hash, std::string scene) {
        std::lock_guard lock(mu_);
        scenes_.insert_or_assign(hash, std::move(scene));
    }

    mutable std::mutex mu_;
    std::map<std::string, std::string> fixtures_;
    std::map<std::string, std::string> scenes_;
    ReverseDictionary dictionary_;
    MockOptions options_;
};

}  // namespace semcodec
