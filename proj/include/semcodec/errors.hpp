// Exception hierarchy shared by every semcodec module.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace semcodec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- textcodec ----

class IllegalSymbol : public Error {
public:
    IllegalSymbol(std::size_t position, char ch)
        : Error("IllegalSymbol: character '" + std::string(1, ch) + "' at position " +
                std::to_string(position) + " is outside the 16-symbol alphabet"),
          position_(position), ch_(ch) {}

    std::size_t position() const noexcept { return position_; }
    char character() const noexcept { return ch_; }

private:
    std::size_t position_;
    char ch_;
};

class LengthMismatch : public Error {
public:
    LengthMismatch(std::size_t bytes, std::uint64_t symbol_count)
        : Error("LengthMismatch: " + std::to_string(bytes) + " payload bytes cannot hold exactly " +
                std::to_string(symbol_count) + " symbols") {}
};

class DimensionOverflow : public Error {
public:
    DimensionOverflow(const char *field, std::uint64_t value)
        : Error(std::string("DimensionOverflow: ") + field + "=" + std::to_string(value) +
                " must be in [1, 65535]") {}
};

/// Malformed container. kind() is one of "BadMagic", "UnsupportedVersion", "Truncated".
class ContainerError : public Error {
public:
    ContainerError(std::string kind, const std::string &detail)
        : Error(kind + ": " + detail), kind_(std::move(kind)) {}

    const std::string &kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class BadMagic : public ContainerError {
public:
    explicit BadMagic(const std::string &detail) : ContainerError("BadMagic", detail) {}
};

class UnsupportedVersion : public ContainerError {
public:
    explicit UnsupportedVersion(const std::string &detail)
        : ContainerError("UnsupportedVersion", detail) {}
};

class Truncated : public ContainerError {
public:
    explicit Truncated(const std::string &detail) : ContainerError("Truncated", detail) {}
};

// ---- metrics ----

class ZeroPixels : public Error {
public:
    ZeroPixels() : Error("ZeroPixels: width and height must be positive") {}
};

class ZeroBits : public Error {
public:
    ZeroBits() : Error("ZeroBits: bit count must be positive for a ratio") {}
};

// ---- backends ----

class BackendError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public BackendError {
public:
    explicit BackendUnavailable(const std::string &detail)
        : BackendError("BackendUnavailable: " + detail) {}
};

class RateLimited : public BackendError {
public:
    RateLimited(const std::string &detail, double retry_after_seconds)
        : BackendError("RateLimited: " + detail), retry_after_(retry_after_seconds) {}

    double retry_after() const noexcept { return retry_after_; }

private:
    double retry_after_;
};

class MalformedResponse : public BackendError {
public:
    explicit MalformedResponse(std::string field_path)
        : BackendError("MalformedResponse: missing or invalid field " + field_path),
          field_(std::move(field_path)) {}

    const std::string &field_path() const noexcept { return field_; }

private:
    std::string field_;
};

class ContentRefused : public BackendError {
public:
    explicit ContentRefused(const std::string &detail)
        : BackendError("ContentRefused: " + detail) {}
};

class EditUnsupported : public BackendError {
public:
    EditUnsupported()
        : BackendError("EditUnsupported: backend cannot edit a previous image within a session") {}
};

class NoPriorImage : public BackendError {
public:
    NoPriorImage() : BackendError("NoPriorImage: session has no generated image to edit") {}
};

class FixtureMissing : public BackendError {
public:
    explicit FixtureMissing(const std::string &hash)
        : BackendError("FixtureMissing: no mock description for image " + hash), hash_(hash) {}

    const std::string &hash() const noexcept { return hash_; }

private:
    std::string hash_;
};

// ---- pipeline ----

class MissingTemplate : public Error {
public:
    explicit MissingTemplate(const std::string &name)
        : Error("MissingTemplate: " + name), name_(name) {}

    const std::string &name() const noexcept { return name_; }

private:
    std::string name_;
};

class MissingPlaceholder : public Error {
public:
    MissingPlaceholder(const std::string &tmpl, const std::string &placeholder)
        : Error("MissingPlaceholder: template '" + tmpl + "' lacks " + placeholder) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string &what) : Error("InvalidArgument: " + what) {}
};

class ImageIoError : public Error {
public:
    explicit ImageIoError(const std::string &what) : Error("ImageIoError: " + what) {}
};

}  // namespace semcodec
