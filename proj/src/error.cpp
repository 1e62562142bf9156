#include "pvb/error.hpp"

namespace pvb {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::SeparationDetected: return "SeparationDetected";
    case ErrorKind::DegenerateMargin: return "DegenerateMargin";
    case ErrorKind::DegenerateImputation: return "DegenerateImputation";
    case ErrorKind::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorKind::DomainError: return "DomainError";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidConfig:
        return ErrorCategory::Usage;
    case ErrorKind::MalformedInput:
    case ErrorKind::EmptyDataset:
    case ErrorKind::InvalidSpec:
        return ErrorCategory::Data;
    default:
        return ErrorCategory::Numerical;
    }
}

}  // namespace pvb
