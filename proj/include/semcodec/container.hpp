// The .smc wire format.
//
//   offset  size  field
//   0       4     magic "SMC1"
//   4       1     version (1)
//   5       2     width   (big-endian)
//   7       2     height  (big-endian)
//   9       4     symbol_count (big-endian)
//   13      n     payload, n = ceil(symbol_count / 2), high nibble first
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "semcodec/errors.hpp"
#include "semcodec/textcodec.hpp"

namespace semcodec {

inline constexpr std::array<std::uint8_t, 4> kContainerMagic = {'S', 'M', 'C', '1'};
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 13;

struct SemanticContainer {
    SymbolString symbols;
    std::uint16_t width = 0;
    std::uint16_t height = 0;

    std::uint64_t symbol_count() const noexcept { return symbols.size(); }
    std::uint64_t payload_bytes() const noexcept { return (symbols.size() + 1) / 2; }
    std::uint64_t total_bytes() const noexcept { return kContainerHeaderSize + payload_bytes(); }

    friend bool operator==(const SemanticContainer &, const SemanticContainer &) = default;
};

namespace detail {

inline void put_be(std::vector<std::uint8_t> &out, std::uint64_t value, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

inline std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in[offset + i];
    return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_container(const SymbolString &symbols, std::uint64_t width,
                                                  std::uint64_t height) {
    if (width == 0 || width > 0xFFFF) throw DimensionOverflow("width", width);
    if (height == 0 || height > 0xFFFF) throw DimensionOverflow("height", height);
    if (symbols.size() > 0xFFFFFFFFull) {
        throw InvalidArgument("symbol_count exceeds the 32-bit header field");
    }

    std::vector<std::uint8_t> out;
    out.reserve(kContainerHeaderSize + (symbols.size() + 1) / 2);
    out.insert(out.end(), kContainerMagic.begin(), kContainerMagic.end());
    out.push_back(kContainerVersion);
    detail::put_be(out, width, 2);
    detail::put_be(out, height, 2);
    detail::put_be(out, symbols.size(), 4);
    const auto payload = pack(symbols);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

inline std::vector<std::uint8_t> encode_container(const SemanticContainer &c) {
    return encode_container(c.symbols, c.width, c.height);
}

/// Parses and validates a container. Errors name the first violated field.
inline SemanticContainer decode_container(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kContainerMagic.size()) {
        throw Truncated("magic: need 4 bytes, have " + std::to_string(bytes.size()));
    }
    if (!std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin())) {
        throw BadMagic("magic: expected \"SMC1\"");
    }
    if (bytes.size() < 5) throw Truncated("version: missing");
    if (bytes[4] != kContainerVersion) {
        throw UnsupportedVersion("version: " + std::to_string(bytes[4]) + " (supported: 1)");
    }
    if (bytes.size() < 7) throw Truncated("width: missing");
    if (bytes.size() < 9) throw Truncated("height: missing");
    if (bytes.size() < kContainerHeaderSize) throw Truncated("symbol_count: missing");

    const auto width = static_cast<std::uint16_t>(detail::get_be(bytes, 5, 2));
    const auto height = static_cast<std::uint16_t>(detail::get_be(bytes, 7, 2));
    const std::uint64_t count = detail::get_be(bytes, 9, 4);
    if (width == 0) throw DimensionOverflow("width", 0);
    if (height == 0) throw DimensionOverflow("height", 0);

    const std::uint64_t expected = (count + 1) / 2;
    const std::uint64_t have = bytes.size() - kContainerHeaderSize;
    if (have < expected) {
        throw Truncated("payload: symbol_count=" + std::to_string(count) + " needs " +
                        std::to_string(expected) + " bytes, have " + std::to_string(have));
    }
    if (have > expected) {
        throw LengthMismatch(static_cast<std::size_t>(have), count);
    }
    return SemanticContainer{unpack(bytes.subspan(kContainerHeaderSize), count), width, height};
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageIoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError("short write to " + path.string());
}

}  // namespace semcodec
