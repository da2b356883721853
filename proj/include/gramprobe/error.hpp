#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gramprobe {

/// Base class of every error the toolkit raises on bad input or failed numerics.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments supplied by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Input data violates a precondition (missing split, single class, id mismatch, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed binary dump. Carries the byte offset where decoding failed.
class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// A numerical procedure could not meet its contract (e.g. a sparsity target).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace gramprobe
