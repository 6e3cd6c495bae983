#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mediator {

// Root of every error the engine raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A user-supplied value is out of range or malformed. `field()` is the
// dotted path of the offending value, e.g. "intensity.politics".
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// An operation was called outside its precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

// Non-finite arithmetic input.
class ComputationError : public Error {
public:
    using Error::Error;
};

// A resource file (fact database, lexicon, log) could not be read or parsed.
class LoadError : public Error {
public:
    using Error::Error;
};

// The audit log could not be written. Tick processing halts after this.
class AuditError : public Error {
public:
    using Error::Error;
};

// Replay produced a record that differs from the stored one.
class ReplayDivergence : public Error {
public:
    ReplayDivergence(std::uint64_t seq, const std::string& message)
        : Error("replay diverged at seq " + std::to_string(seq) + ": " + message), seq_(seq) {}

    std::uint64_t seq() const noexcept { return seq_; }

private:
    std::uint64_t seq_;
};

// Evidence hash chain failed verification.
class ChainError : public Error {
public:
    ChainError(std::size_t index, const std::string& message)
        : Error("evidence chain broken at index " + std::to_string(index) + ": " + message),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace mediator
