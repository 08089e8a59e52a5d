#include "seqctl/errors.hpp"

namespace seqctl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::ZeroProbability: return "zero-probability-branch";
    case ErrorCode::NumericalConsistency: return "numerical-consistency";
    case ErrorCode::Accuracy: return "accuracy";
    case ErrorCode::ExpansionDomain: return "expansion-domain";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::Saturation: return "saturation";
    case ErrorCode::DegenerateSet: return "degenerate-set";
    case ErrorCode::Rank: return "rank";
    case ErrorCode::Alignment: return "alignment";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

namespace {
std::string join_failures(const std::vector<std::string>& failures) {
    std::string out = "configuration invalid:";
    for (const auto& f : failures) {
        out += "\n  - ";
        out += f;
    }
    return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> failures)
    : Error(ErrorCode::Validation, join_failures(failures)), failures_(std::move(failures)) {}

}  // namespace seqctl
