#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hairstep {

/// Input violates an operation's precondition (shape, range, unit norm, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure reading or writing a file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. Carries the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace hairstep
