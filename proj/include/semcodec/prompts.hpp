// Prompt templates, one plain-text file per stage.
#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "semcodec/errors.hpp"

namespace semcodec {

inline constexpr std::string_view kWordCountPlaceholder = "{K}";

/// describe is shared by the encoder and by reflection.
struct PromptSet {
    std::string describe;
    std::string word_select;
    std::string word_compress;
    std::string word_decompress;
    std::string generate;
    std::string reflect_compare;
    std::string reflect_generate;

    /// word_select with every {K} replaced by k.
    std::string word_select_for(std::size_t k) const {
        std::string out = word_select;
        const std::string value = std::to_string(k);
        for (auto pos = out.find(kWordCountPlaceholder); pos != std::string::npos;
             pos = out.find(kWordCountPlaceholder, pos + value.size())) {
            out.replace(pos, kWordCountPlaceholder.size(), value);
        }
        return out;
    }

    friend bool operator==(const PromptSet &, const PromptSet &) = default;

    static PromptSet defaults();
};

/// File stem for each template, in load order.
inline constexpr std::array<std::string_view, 7> kPromptNames = {
    "describe", "word_select", "word_compress", "word_decompress", "generate", "reflect_compare", "reflect_generate",
};

inline PromptSet PromptSet::defaults() {
    PromptSet p;
    p.describe =
        "Can you describe this photo in as much detail as possible so that someone can recreate it based "
        "only on your description? Describe each object and its size in the image with small, medium, large, "
        "and huge. Describe the relative locations of all objects from the perspective of the viewer. "
        "Describe the colors in each object.";
    p.word_select =
        "This description will be used to regenerate an image. Can you compress this image description to {K} "
        "words with the goal of selecting the most important words that humans would find relevant during the "
        "image reconstruction? These should be the most important words. Do not include helper words like "
        "prepositions or other unimportant words.";
    p.word_compress =
        "This description will be used to regenerate an image. Please remove all vowels and restrict to the "
        "following characters only: n, t, s, r, h, l, d, c, m, f, g, p, b, k, v. No punctuation is allowed. "
        "Remove plurals and uppercase letters.";
    p.word_decompress =
        "This is a description of an image that has been extremely compressed by removing vowels and "
        "punctuation. Keep in mind only these characters were allowed: n, t, s, r, h, l, d, c, m, f, g, p, b, "
        "k, v. Please decompress it to its original text.";
    p.generate = "Please generate a square image based on this description by following all of the details.";
    p.reflect_compare =
        "Please compare the image description above to the original description below and highlight the most "
        "important difference between the two. Format this difference into a suggested change to make to the "
        "description above to make it more like the original description below.";
    p.reflect_generate = "Please keep the exact same image but make the following change:";
    return p;
}

namespace detail {

inline std::string read_template(const std::filesystem::path &dir, std::string_view name) {
    const auto path = dir / (std::string(name) + ".txt");
    std::ifstream in(path);
    if (!in) throw MissingTemplate(std::string(name));
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) text.pop_back();
    if (text.empty()) throw MissingTemplate(std::string(name));
    return text;
}

}  // namespace detail

/// Loads `<name>.txt` for every template; word_select must contain {K}.
inline PromptSet load_prompts(const std::filesystem::path &dir) {
    PromptSet p;
    std::string *slots[] = {&p.describe, &p.word_select, &p.word_compress, &p.word_decompress,
                            &p.generate, &p.reflect_compare, &p.reflect_generate};
    for (std::size_t i = 0; i < kPromptNames.size(); ++i) *slots[i] = detail::read_template(dir, kPromptNames[i]);
    if (p.word_select.find(kWordCountPlaceholder) == std::string::npos) {
        throw MissingPlaceholder("word_select", std::string(kWordCountPlaceholder));
    }
    return p;
}

}  // namespace semcodec
