// Bitrate arithmetic and compression-region classification.
//
// Rates are kept as exact rationals (bits / pixels); doubles are derived
// only for display and for comparison against configured thresholds.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "semcodec/container.hpp"
#include "semcodec/errors.hpp"
#include "semcodec/textcodec.hpp"

namespace semcodec {

/// Non-negative rational in lowest terms.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    static Rational make(std::uint64_t num, std::uint64_t den) {
        if (den == 0) throw InvalidArgument("zero denominator");
        const auto g = std::gcd(num, den);
        return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
    }

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    long double value_ld() const noexcept {
        return static_cast<long double>(num) / static_cast<long double>(den);
    }

    friend bool operator==(const Rational &, const Rational &) = default;
};

enum class Region { structural, mixed, semantic, sub_semantic };

inline std::string_view to_string(Region r) {
    switch (r) {
        case Region::structural: return "structural";
        case Region::mixed: return "mixed";
        case Region::semantic: return "semantic";
        case Region::sub_semantic: return "sub_semantic";
    }
    return "unknown";
}

/// Lower edges of each band, in bpp.
struct RegionThresholds {
    double structural_min = 1e-1;
    double mixed_min = 1e-3;
    double semantic_min = 1e-5;

    bool valid() const noexcept {
        return structural_min > mixed_min && mixed_min > semantic_min && semantic_min > 0.0;
    }
};

struct BitrateReport {
    std::uint64_t bits = 0;
    std::uint64_t pixels = 0;
    Rational bpp_exact;
    double bpp = 0.0;
    double microbpp = 0.0;
    Region region = Region::sub_semantic;
    std::optional<Rational> baseline_ratio;
};

inline constexpr std::uint64_t bits_of_symbols(std::uint64_t n) noexcept { return kBitsPerSymbol * n; }

inline Rational bpp_rational(std::uint64_t bits, std::uint64_t width, std::uint64_t height) {
    if (width == 0 || height == 0) throw ZeroPixels();
    return Rational::make(bits, width * height);
}

inline Region classify_region(double bpp_value, const RegionThresholds &t = {}) {
    if (bpp_value >= t.structural_min) return Region::structural;
    if (bpp_value >= t.mixed_min) return Region::mixed;
    if (bpp_value >= t.semantic_min) return Region::semantic;
    return Region::sub_semantic;
}

inline BitrateReport bpp(std::uint64_t bits, std::uint64_t width, std::uint64_t height,
                         const RegionThresholds &thresholds = {}) {
    BitrateReport r;
    r.bits = bits;
    r.pixels = width * height;
    r.bpp_exact = bpp_rational(bits, width, height);
    r.bpp = r.bpp_exact.value();
    // bits * 1e6 stays exact in long double for any realistic bit count.
    r.microbpp = static_cast<double>(static_cast<long double>(bits) * 1e6L /
                                     static_cast<long double>(r.pixels));
    r.region = classify_region(r.bpp, thresholds);
    return r;
}

/// baseline_bits / our_bits.
inline Rational baseline_ratio(std::uint64_t our_bits, std::uint64_t baseline_bits) {
    if (our_bits == 0) throw ZeroBits();
    return Rational::make(baseline_bits, our_bits);
}

/// True iff bits/(w*h) >= threshold (given in micro-bpp).
inline bool meets_microbpp(std::uint64_t bits, std::uint64_t width, std::uint64_t height,
                           double threshold_microbpp) {
    if (width == 0 || height == 0) throw ZeroPixels();
    const long double lhs = static_cast<long double>(bits) * 1e6L;
    const long double rhs =
        static_cast<long double>(threshold_microbpp) * static_cast<long double>(width * height);
    return lhs >= rhs;
}

/// Payload-only rate of a container (header excluded).
inline BitrateReport payload_report(const SemanticContainer &c, const RegionThresholds &t = {}) {
    return bpp(bits_of_symbols(c.symbol_count()), c.width, c.height, t);
}

/// Rate including the 13-byte header and padding nibble.
inline BitrateReport total_report(const SemanticContainer &c, const RegionThresholds &t = {}) {
    return bpp(8 * c.total_bytes(), c.width, c.height, t);
}

/// Rounds to one significant figure: 95.37 -> 100, 801.1 -> 800.
inline double one_sig_fig(double v) {
    if (v <= 0.0) return 0.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    return std::round(v / mag) * mag;
}

inline std::string format_microbpp(double microbpp) { return fmt::format("{:.2f}", microbpp); }

/// The loose figure used when quoting rates informally (one significant figure).
inline std::string approx_note(double microbpp) {
    return fmt::format("≈{:g} µbpp", one_sig_fig(microbpp));
}

inline nlohmann::json to_json(const BitrateReport &r) {
    nlohmann::json j = {
        {"bits", r.bits},
        {"pixels", r.pixels},
        {"bpp", r.bpp},
        {"bpp_exact", fmt::format("{}/{}", r.bpp_exact.num, r.bpp_exact.den)},
        {"microbpp", r.microbpp},
        {"region", std::string(to_string(r.region))},
    };
    if (r.baseline_ratio) {
        j["baseline_ratio"] = r.baseline_ratio->value();
        j["baseline_ratio_exact"] =
            fmt::format("{}/{}", r.baseline_ratio->num, r.baseline_ratio->den);
    }
    return j;
}

}  // namespace semcodec
