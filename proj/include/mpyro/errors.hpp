#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mpyro {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (non-positive
/// temperature, wavelength, ratio ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Intensity ratio at or above the singular ratio: the inversion denominator
/// has reached zero and no finite temperature exists.
class RatioAboveRangeError : public DomainError {
public:
    using DomainError::DomainError;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class TruncationError : public FormatError {
public:
    TruncationError(std::uint64_t frame_index, const std::string& what)
        : FormatError(what), frame_index_(frame_index) {}

    /// Index of the first frame that could not be read completely.
    std::uint64_t frame_index() const noexcept { return frame_index_; }

private:
    std::uint64_t frame_index_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class RegistrationError : public Error {
public:
    using Error::Error;
};

} // namespace mpyro
