#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cyberrisk {

// Invalid argument to a distribution, formula or estimator.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable input (missing file, bad encoding).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input that decodes but does not follow the expected record schema.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A margin ratio was requested against a zero best estimate.
class UndefinedMarginError : public DomainError {
public:
    using DomainError::DomainError;
};

// A simulated loss was NaN or infinite.
class NumericFault : public std::runtime_error {
public:
    NumericFault(std::string level, std::uint64_t repetition)
        : std::runtime_error("nonfinite loss at level '" + level + "', repetition " +
                             std::to_string(repetition)),
          level_(std::move(level)),
          repetition_(repetition) {}

    const std::string& level() const noexcept { return level_; }
    std::uint64_t repetition() const noexcept { return repetition_; }

private:
    std::string level_;
    std::uint64_t repetition_;
};

} // namespace cyberrisk
