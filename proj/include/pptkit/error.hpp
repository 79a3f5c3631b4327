#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pptkit {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition (bad rate, token out of vocab, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Bytes on disk do not follow the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A stream ended before the header promised it would.
class TruncationError : public FormatError {
public:
    TruncationError(const std::string& what, std::uint64_t offset)
        : FormatError(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pptkit
