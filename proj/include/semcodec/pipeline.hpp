// Encoder: describe -> word select -> word compress -> pack.
// Decoder: unpack -> word decompress -> generate -> (reflection).
//
// Encoder and decoder each open a fresh session; the only thing that
// crosses between them is the container byte string.
#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semcodec/backend.hpp"
#include "semcodec/config.hpp"
#include "semcodec/container.hpp"
#include "semcodec/metrics.hpp"
#include "semcodec/reflection.hpp"
#include "semcodec/textcodec.hpp"
#include "semcodec/transcript.hpp"

namespace semcodec {

struct EncodeIntermediate {
    std::string description;
    std::string selected_words;
    /// Canonicalized, policy-applied compressed text; exactly what the payload holds.
    std::string compressed_text;
};

struct EncodeResult {
    std::vector<std::uint8_t> container;
    EncodeIntermediate intermediate;
    SessionTranscript transcript;
    BitrateReport report;
    std::optional<WordBudgetViolation> word_budget_violation;
};

enum class SkipReason { below_threshold, edit_unsupported, r_zero };

inline std::string_view to_string(SkipReason r) {
    switch (r) {
        case SkipReason::below_threshold: return "below_threshold";
        case SkipReason::edit_unsupported: return "edit_unsupported";
        case SkipReason::r_zero: return "r_zero";
    }
    return "unknown";
}

struct DecodeResult {
    ImageRef image;          // final image
    ImageRef initial_image;  // first generation, before reflection
    std::string compressed_text;
    std::string decompressed_text;
    std::string expanded_prompt;
    SessionTranscript transcript;
    BitrateReport report;
    std::optional<ReflectionTrace> reflection_trace;
    std::optional<SkipReason> reflection_skipped;
};

/// Returns a violation when |actual - K| / K exceeds the tolerance.
inline std::optional<WordBudgetViolation> check_word_budget(std::size_t actual, std::size_t target,
                                                            double tolerance) {
    const double deviation =
        std::abs(static_cast<double>(actual) - static_cast<double>(target)) / static_cast<double>(target);
    if (deviation <= tolerance) return std::nullopt;
    return WordBudgetViolation{target, actual, deviation, tolerance};
}

inline std::string session_id_for(std::string_view role, std::string_view seed) {
    const auto d = sha256(std::string(role) + ":" + std::string(seed));
    return std::string(role) + "-" + to_hex(std::span(d).first(8));
}

inline EncodeResult encode_image(const ImageRef &image, const PipelineConfig &config, Backend &backend) {
    config.validate();
    if (image.empty()) throw InvalidArgument("encode_image: no image");
    const auto &prompts = config.prompts;

    BackendSession session(session_id_for("enc", image.content_hash()));
    EncodeResult result;
    result.transcript = SessionTranscript(session.id(), "encoder", config.timestamps);
    result.transcript.set_backend(backend.name(), backend.parameters());
    auto &tr = result.transcript;

    result.intermediate.description = backend.describe(session, image, prompts.describe);
    tr.record({Stage::describe, 0, prompts.describe, image_token(image.content_hash()),
               result.intermediate.description, 0, {}});

    const std::string select_prompt = prompts.word_select_for(config.target_word_count);
    result.intermediate.selected_words = backend.transform(session, TransformTask::word_select, select_prompt,
                                                           result.intermediate.description);
    const auto word_count = split_words(canonicalize(result.intermediate.selected_words)).size();
    std::string select_note = "words=" + std::to_string(word_count);
    result.word_budget_violation =
        check_word_budget(word_count, config.target_word_count, config.word_count_tolerance);
    if (result.word_budget_violation) {
        tr.add_warning(*result.word_budget_violation);
        select_note += "; WordBudgetViolation";
    }
    tr.record({Stage::word_select, 0, select_prompt, result.intermediate.description,
               result.intermediate.selected_words, 0, select_note});

    const std::string raw_compressed = backend.transform(session, TransformTask::word_compress,
                                                         prompts.word_compress, result.intermediate.selected_words);
    const std::string canonical = canonicalize(raw_compressed);
    std::string compress_note = "policy=" + to_string(config.repair_policy.mode);
    SymbolString symbols;
    try {
        symbols = to_symbols(canonical, config.repair_policy);
    } catch (const IllegalSymbol &) {
        tr.record({Stage::word_compress, 0, prompts.word_compress, result.intermediate.selected_words,
                   raw_compressed, 0, compress_note + "; IllegalSymbol"});
        throw;
    }
    result.intermediate.compressed_text = from_symbols(symbols);
    if (result.intermediate.compressed_text != raw_compressed) {
        compress_note += "; canonical=\"" + result.intermediate.compressed_text + "\"";
    }
    tr.record({Stage::word_compress, 0, prompts.word_compress, result.intermediate.selected_words, raw_compressed,
               0, compress_note});

    result.container = encode_container(symbols, image.width(), image.height());
    result.report = bpp(bits_of_symbols(symbols.size()), image.width(), image.height(), config.regions);
    return result;
}

inline DecodeResult decode_container(std::span<const std::uint8_t> container_bytes, const PipelineConfig &config,
                                     Backend &backend) {
    config.validate();
    const SemanticContainer c = decode_container(container_bytes);
    const auto &prompts = config.prompts;

    BackendSession session(session_id_for("dec", to_hex(sha256(container_bytes))));
    DecodeResult result;
    result.transcript = SessionTranscript(session.id(), "decoder", config.timestamps);
    result.transcript.set_backend(backend.name(), backend.parameters());
    auto &tr = result.transcript;
    result.report = payload_report(c, config.regions);
    result.compressed_text = from_symbols(c.symbols);

    if (result.compressed_text.empty()) {
        tr.record({Stage::word_decompress, 0, prompts.word_decompress, "", "", 0,
                   "empty payload; model not called"});
    } else {
        result.decompressed_text = backend.transform(session, TransformTask::word_decompress,
                                                     prompts.word_decompress, result.compressed_text);
        tr.record({Stage::word_decompress, 0, prompts.word_decompress, result.compressed_text,
                   result.decompressed_text, 0, {}});
    }

    result.expanded_prompt = Backend::compose(prompts.generate, result.decompressed_text);
    result.initial_image = backend.generate(session, prompts.generate, result.decompressed_text);
    result.image = result.initial_image;
    tr.record({Stage::generate, 0, prompts.generate, result.decompressed_text,
               image_token(result.initial_image.content_hash()), 0, {}});

    const std::uint64_t bits = bits_of_symbols(c.symbol_count());
    std::optional<SkipReason> skip;
    if (config.reflection_iterations == 0) {
        skip = SkipReason::r_zero;
    } else if (!gate(bits, c.width, c.height, config)) {
        skip = SkipReason::below_threshold;
    } else if (!backend.capabilities().supports_session_edit) {
        skip = SkipReason::edit_unsupported;
    }

    if (skip) {
        result.reflection_skipped = skip;
        tr.record({Stage::reflection_skipped, 0, "", format_microbpp(result.report.microbpp) + " µbpp",
                   std::string(to_string(*skip)), 0,
                   "threshold=" + fmt::format("{:g}", config.reflection_threshold_microbpp) + " µbpp"});
        return result;
    }

    result.reflection_trace =
        run_reflection(session, result.initial_image, result.decompressed_text, config, backend, &tr);
    result.image = result.reflection_trace->final_image(result.initial_image);
    return result;
}

/// Stage texts that appear in both transcripts, ignoring image tokens,
/// prompts and the transmitted payload text.
inline std::set<std::string> shared_stage_texts(const SessionTranscript &encoder, const SessionTranscript &decoder,
                                                std::string_view payload_text) {
    auto collect = [&](const SessionTranscript &t) {
        std::set<std::string> out;
        for (const auto &s : t.stages()) {
            for (const auto *text : {&s.input, &s.output}) {
                if (text->empty() || text->starts_with("sha256:") || *text == payload_text) continue;
                out.insert(*text);
            }
        }
        return out;
    };
    const auto enc = collect(encoder);
    const auto dec = collect(decoder);
    std::set<std::string> shared;
    for (const auto &t : enc) {
        if (dec.contains(t)) shared.insert(t);
    }
    return shared;
}

class SessionLeak : public Error {
public:
    explicit SessionLeak(const std::string &what) : Error("SessionLeak: " + what) {}
};

/// Encode then decode in independent sessions. The decoder receives only
/// the container bytes; the encoder's Describe output must not show up on
/// the decoder side.
inline std::pair<EncodeResult, DecodeResult> roundtrip(const ImageRef &image, const PipelineConfig &config,
                                                       Backend &backend) {
    EncodeResult enc = encode_image(image, config, backend);
    const std::vector<std::uint8_t> wire = enc.container;
    DecodeResult dec = decode_container(std::span<const std::uint8_t>(wire), config, backend);

    if (enc.transcript.session_id() == dec.transcript.session_id()) {
        throw SessionLeak("encoder and decoder share session " + enc.transcript.session_id());
    }
    const std::string &description = enc.intermediate.description;
    if (!description.empty() && description != enc.intermediate.compressed_text) {
        for (const auto &s : dec.transcript.stages()) {
            if (s.input == description || s.output == description) {
                throw SessionLeak("encoder description reached decoder stage " + std::string(to_string(s.name)));
            }
        }
    }
    return {std::move(enc), std::move(dec)};
}

}  // namespace semcodec
