#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace seqctl {

enum class ErrorCode {
    InvalidInput,
    Coverage,
    ZeroProbability,
    NumericalConsistency,
    Accuracy,
    ExpansionDomain,
    InsufficientData,
    Saturation,
    DegenerateSet,
    Rank,
    Alignment,
    Validation,
    Io,
};

// Coarse grouping used for process exit codes.
enum class ErrorCategory { Validation, Numerical, Io };

constexpr ErrorCategory category_of(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidInput:
    case ErrorCode::Coverage:
    case ErrorCode::Alignment:
    case ErrorCode::Validation:
        return ErrorCategory::Validation;
    case ErrorCode::Io:
        return ErrorCategory::Io;
    default:
        return ErrorCategory::Numerical;
    }
}

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

// Carries the estimate that was reached when the accuracy target was missed.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double estimate, double bound)
        : Error(ErrorCode::Accuracy, what), estimate(estimate), bound(bound) {}
    double estimate;
    double bound;
};

// Ramsey coherence W <= 0: the log inversion is undefined.
class SaturationError : public Error {
public:
    SaturationError(const std::string& what, double p, double w)
        : Error(ErrorCode::Saturation, what), probability(p), coherence(w) {}
    double probability;
    double coherence;
};

// All validation failures of a config, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> failures);
    const std::vector<std::string>& failures() const noexcept { return failures_; }

private:
    std::vector<std::string> failures_;
};

}  // namespace seqctl
