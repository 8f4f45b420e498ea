// Generate -> describe -> compare -> regenerate loop.
//
// The loop runs a fixed number of iterations. It has no stopping test and
// no rollback; every intermediate hash stays in the trace and the last
// regenerated image wins.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcodec/backend.hpp"
#include "semcodec/config.hpp"
#include "semcodec/metrics.hpp"
#include "semcodec/transcript.hpp"

namespace semcodec {

struct IterationRecord {
    std::string generated_image_hash;
    std::string new_description;
    std::string edit_suggestion;
    std::string regenerated_image_hash;
    // Pixels for persistence; not serialized.
    ImageRef generated_image;
    ImageRef regenerated_image;
};

enum class StopReason { budget_exhausted, edit_unsupported };

inline std::string_view to_string(StopReason r) {
    return r == StopReason::budget_exhausted ? "budget_exhausted" : "edit_unsupported";
}

struct ReflectionTrace {
    std::vector<IterationRecord> iterations;
    StopReason stop_reason = StopReason::budget_exhausted;

    /// Last regenerated image, or `fallback` when no iteration ran.
    ImageRef final_image(const ImageRef &fallback) const {
        return iterations.empty() ? fallback : iterations.back().regenerated_image;
    }

    nlohmann::json to_json() const {
        nlohmann::json its = nlohmann::json::array();
        for (const auto &r : iterations) {
            its.push_back({{"generated_image_hash", r.generated_image_hash},
                           {"new_description", r.new_description},
                           {"edit_suggestion", r.edit_suggestion},
                           {"regenerated_image_hash", r.regenerated_image_hash}});
        }
        return {{"iterations", std::move(its)}, {"stop_reason", std::string(to_string(stop_reason))}};
    }
};

/// Thrown when an iteration fails for a reason other than missing edit
/// support. Carries the iterations completed so far.
class ReflectionFailed : public Error {
public:
    ReflectionFailed(ReflectionTrace partial, const std::string &cause)
        : Error("reflection stopped after " + std::to_string(partial.iterations.size()) +
                " iteration(s): " + cause),
          partial_(std::move(partial)) {}

    const ReflectionTrace &partial_trace() const noexcept { return partial_; }

private:
    ReflectionTrace partial_;
};

class EmptyEditSuggestion : public Error {
public:
    EmptyEditSuggestion() : Error("EmptyEditSuggestion: compare stage returned no change instruction") {}
};

/// bits/(w*h) >= threshold.
inline bool gate(std::uint64_t bits, std::uint64_t width, std::uint64_t height, const PipelineConfig &config) {
    return meets_microbpp(bits, width, height, config.reflection_threshold_microbpp);
}

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

/// One describe/compare/regenerate round on the session's current image.
/// `original_description` must be the decoder-side text.
inline IterationRecord reflect_once(BackendSession &session, const ImageRef &current_image,
                                    std::string_view original_description, const PromptSet &prompts,
                                    Backend &backend, SessionTranscript *transcript = nullptr,
                                    int iteration = 1) {
    if (!backend.capabilities().supports_session_edit) throw EditUnsupported();
    if (!session.last_generated_image()) throw NoPriorImage();

    IterationRecord rec;
    rec.generated_image = current_image;
    rec.generated_image_hash = current_image.content_hash();

    rec.new_description = backend.describe(session, current_image, prompts.describe);
    if (transcript) {
        transcript->record({Stage::reflect_describe, iteration, prompts.describe,
                            image_token(rec.generated_image_hash), rec.new_description, 0, {}});
    }

    const std::string raw_edit =
        backend.transform(session, TransformTask::reflect_compare, prompts.reflect_compare, original_description);
    rec.edit_suggestion = trim(raw_edit);
    if (transcript) {
        transcript->record({Stage::reflect_compare, iteration, prompts.reflect_compare,
                            std::string(original_description), raw_edit, 0, {}});
    }
    if (rec.edit_suggestion.empty()) throw EmptyEditSuggestion();

    rec.regenerated_image = backend.regenerate(session, prompts.reflect_generate, rec.edit_suggestion);
    rec.regenerated_image_hash = rec.regenerated_image.content_hash();
    if (transcript) {
        transcript->record({Stage::reflect_generate, iteration, prompts.reflect_generate, rec.edit_suggestion,
                            image_token(rec.regenerated_image_hash), 0, {}});
    }
    return rec;
}

/// Runs exactly config.reflection_iterations rounds unless the backend
/// cannot edit, in which case the trace stops with edit_unsupported.
inline ReflectionTrace run_reflection(BackendSession &session, const ImageRef &image,
                                      std::string_view original_description, const PipelineConfig &config,
                                      Backend &backend, SessionTranscript *transcript = nullptr) {
    ReflectionTrace trace;
    ImageRef current = image;
    for (int i = 1; i <= config.reflection_iterations; ++i) {
        try {
            auto rec = reflect_once(session, current, original_description, config.prompts, backend, transcript, i);
            current = rec.regenerated_image;
            trace.iterations.push_back(std::move(rec));
        } catch (const EditUnsupported &) {
            trace.stop_reason = StopReason::edit_unsupported;
            return trace;
        } catch (const Error &e) {
            throw ReflectionFailed(std::move(trace), e.what());
        }
    }
    trace.stop_reason = StopReason::budget_exhausted;
    return trace;
}

}  // namespace semcodec
