// RGB images, content hashing, PNG I/O and the crop/resample preprocessing
// applied to encoder inputs.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

#include "semcodec/errors.hpp"

namespace semcodec {

inline constexpr std::uint32_t kCanonicalSide = 1024;

using Digest = std::array<std::uint8_t, SHA256_DIGEST_LENGTH>;

inline Digest sha256(std::span<const std::uint8_t> data) {
    Digest d{};
    SHA256(data.data(), data.size(), d.data());
    return d;
}

inline Digest sha256(std::string_view text) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0x0F]);
    }
    return out;
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw InvalidArgument("base64 length not a multiple of 4");
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char *>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw InvalidArgument("invalid base64");
    std::size_t len = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    if (!text.empty() && text.back() == '=') --len;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

/// 8-bit RGB, row-major, no padding.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h) : width(w), height(h), rgb(std::size_t{w} * h * 3, 0) {}

    std::uint8_t *pixel(std::uint32_t x, std::uint32_t y) { return &rgb[(std::size_t{y} * width + x) * 3]; }
    const std::uint8_t *pixel(std::uint32_t x, std::uint32_t y) const {
        return &rgb[(std::size_t{y} * width + x) * 3];
    }

    friend bool operator==(const Image &, const Image &) = default;
};

/// SHA-256 over big-endian u32 width, u32 height, then the RGB bytes.
inline std::string content_hash(const Image &img) {
    std::array<std::uint8_t, 8> dims{};
    for (int i = 0; i < 4; ++i) {
        dims[i] = static_cast<std::uint8_t>(img.width >> (24 - 8 * i));
        dims[4 + i] = static_cast<std::uint8_t>(img.height >> (24 - 8 * i));
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    Digest d{};
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), dims.data(), dims.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), img.rgb.data(), img.rgb.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), d.data(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    return to_hex(d);
}

/// Shared, immutable handle to image pixels plus their digest.
class ImageRef {
public:
    ImageRef() = default;

    explicit ImageRef(Image img)
        : pixels_(std::make_shared<const Image>(std::move(img))), hash_(semcodec::content_hash(*pixels_)) {}

    bool empty() const noexcept { return pixels_ == nullptr; }
    std::uint32_t width() const noexcept { return pixels_ ? pixels_->width : 0; }
    std::uint32_t height() const noexcept { return pixels_ ? pixels_->height : 0; }
    const std::string &content_hash() const noexcept { return hash_; }
    const Image &pixels() const {
        if (!pixels_) throw InvalidArgument("empty image reference");
        return *pixels_;
    }

private:
    std::shared_ptr<const Image> pixels_;
    std::string hash_;
};

// ---- PNG ----

namespace detail {

struct PngImageGuard {
    png_image *img;
    ~PngImageGuard() { png_image_free(img); }
};

inline Image finish_png_read(png_image &png) {
    png.format = PNG_FORMAT_RGB;
    Image out(png.width, png.height);
    if (!png_image_finish_read(&png, nullptr, out.rgb.data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG decode failed: ") + png.message);
    }
    return out;
}

}  // namespace detail

inline Image read_png(const std::filesystem::path &path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    detail::PngImageGuard guard{&png};
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw ImageIoError(path.string() + ": " + png.message);
    }
    return detail::finish_png_read(png);
}

inline Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    detail::PngImageGuard guard{&png};
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw ImageIoError(std::string("PNG decode failed: ") + png.message);
    }
    return detail::finish_png_read(png);
}

inline std::vector<std::uint8_t> encode_png(const Image &img) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = img.width;
    png.height = img.height;
    png.format = PNG_FORMAT_RGB;
    detail::PngImageGuard guard{&png};
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.rgb.data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG size query failed: ") + png.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.rgb.data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG encode failed: ") + png.message);
    }
    out.resize(size);
    return out;
}

inline void write_png(const std::filesystem::path &path, const Image &img) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = img.width;
    png.height = img.height;
    png.format = PNG_FORMAT_RGB;
    detail::PngImageGuard guard{&png};
    if (!png_image_write_to_file(&png, path.c_str(), 0, img.rgb.data(), 0, nullptr)) {
        throw ImageIoError(path.string() + ": " + png.message);
    }
}

// ---- preprocessing ----

struct CropInfo {
    std::uint32_t original_width = 0;
    std::uint32_t original_height = 0;
    std::uint32_t x0 = 0;
    std::uint32_t y0 = 0;
    std::uint32_t side = 0;
    bool cropped = false;
    bool resampled = false;
};

inline Image crop(const Image &img, std::uint32_t x0, std::uint32_t y0, std::uint32_t w, std::uint32_t h) {
    if (x0 + w > img.width || y0 + h > img.height) throw InvalidArgument("crop window outside image");
    Image out(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
        std::memcpy(out.pixel(0, y), img.pixel(x0, y0 + y), std::size_t{w} * 3);
    }
    return out;
}

namespace detail {

struct Tap {
    std::uint32_t first = 0;
    std::vector<double> weights;
};

// Triangle-filter taps for one axis. The kernel widens by the scale factor
// when shrinking so every source pixel contributes.
inline std::vector<Tap> triangle_taps(std::uint32_t src, std::uint32_t dst) {
    const double scale = static_cast<double>(src) / dst;
    const double support = std::max(1.0, scale);
    std::vector<Tap> taps(dst);
    for (std::uint32_t i = 0; i < dst; ++i) {
        const double center = (i + 0.5) * scale;
        const auto lo = static_cast<std::int64_t>(std::floor(center - support));
        const auto hi = static_cast<std::int64_t>(std::ceil(center + support));
        const auto first = static_cast<std::uint32_t>(std::max<std::int64_t>(lo, 0));
        const auto last = static_cast<std::uint32_t>(std::min<std::int64_t>(hi, src - 1));
        Tap tap{first, {}};
        double total = 0.0;
        for (std::uint32_t j = first; j <= last; ++j) {
            const double w = std::max(0.0, 1.0 - std::abs((j + 0.5 - center) / support));
            tap.weights.push_back(w);
            total += w;
        }
        if (total > 0.0) {
            for (double &w : tap.weights) w /= total;
        }
        taps[i] = std::move(tap);
    }
    return taps;
}

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace detail

/// Separable triangle-filter resize. Deterministic for identical inputs.
inline Image resample(const Image &img, std::uint32_t w, std::uint32_t h) {
    if (w == 0 || h == 0 || img.width == 0 || img.height == 0) throw InvalidArgument("empty resample");
    if (w == img.width && h == img.height) return img;

    const auto xtaps = detail::triangle_taps(img.width, w);
    const auto ytaps = detail::triangle_taps(img.height, h);

    std::vector<double> horizontal(std::size_t{w} * img.height * 3);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            const auto &tap = xtaps[x];
            double acc[3] = {0, 0, 0};
            for (std::size_t k = 0; k < tap.weights.size(); ++k) {
                const auto *p = img.pixel(tap.first + static_cast<std::uint32_t>(k), y);
                for (int c = 0; c < 3; ++c) acc[c] += tap.weights[k] * p[c];
            }
            for (int c = 0; c < 3; ++c) horizontal[(std::size_t{y} * w + x) * 3 + c] = acc[c];
        }
    }

    Image out(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
        const auto &tap = ytaps[y];
        for (std::uint32_t x = 0; x < w; ++x) {
            double acc[3] = {0, 0, 0};
            for (std::size_t k = 0; k < tap.weights.size(); ++k) {
                const std::size_t row = tap.first + k;
                for (int c = 0; c < 3; ++c) acc[c] += tap.weights[k] * horizontal[(row * w + x) * 3 + c];
            }
            auto *p = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) p[c] = detail::clamp_u8(acc[c]);
        }
    }
    return out;
}

/// Largest centered square, then resample to side x side. A no-op on
/// images that are already side x side.
inline Image center_crop_square(const Image &img, std::uint32_t side = kCanonicalSide,
                                CropInfo *info = nullptr) {
    if (img.width == 0 || img.height == 0) throw InvalidArgument("empty image");
    CropInfo ci;
    ci.original_width = img.width;
    ci.original_height = img.height;
    ci.side = std::min(img.width, img.height);
    ci.x0 = (img.width - ci.side) / 2;
    ci.y0 = (img.height - ci.side) / 2;
    ci.cropped = img.width != img.height;
    ci.resampled = ci.side != side;
    if (info) *info = ci;

    if (!ci.cropped && !ci.resampled) return img;
    Image square = ci.cropped ? crop(img, ci.x0, ci.y0, ci.side, ci.side) : img;
    return ci.resampled ? resample(square, side, side) : square;
}

}  // namespace semcodec
