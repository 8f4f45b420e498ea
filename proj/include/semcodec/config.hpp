#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "semcodec/errors.hpp"
#include "semcodec/metrics.hpp"
#include "semcodec/prompts.hpp"
#include "semcodec/textcodec.hpp"
#include "semcodec/transcript.hpp"

namespace semcodec {

/// Knobs for one encode/decode run.
struct PipelineConfig {
    /// Word budget K handed to Word Select.
    std::size_t target_word_count = 30;
    /// Allowed |actual - K| / K before a WordBudgetViolation is recorded.
    double word_count_tolerance = 0.10;
    /// Reflection iterations R; there is no convergence test.
    int reflection_iterations = 2;
    /// Reflection runs only when the payload rate reaches this many µbpp.
    double reflection_threshold_microbpp = 500.0;
    RepairPolicy repair_policy = RepairPolicy::repair();
    PromptSet prompts = PromptSet::defaults();
    RegionThresholds regions;
    TimestampMode timestamps = TimestampMode::logical;

    void validate() const {
        if (target_word_count < 1) throw InvalidArgument("target_word_count must be >= 1");
        if (!(word_count_tolerance >= 0.0 && word_count_tolerance < 1.0)) {
            throw InvalidArgument("word_count_tolerance must be in [0, 1)");
        }
        if (reflection_iterations < 0) throw InvalidArgument("reflection_iterations must be >= 0");
        if (!(reflection_threshold_microbpp >= 0.0)) {
            throw InvalidArgument("reflection_threshold must be >= 0");
        }
        if (!repair_policy.valid()) throw InvalidArgument("repair policy maps outside the alphabet");
        if (!regions.valid()) throw InvalidArgument("region thresholds must be strictly decreasing and positive");
    }
};

}  // namespace semcodec
