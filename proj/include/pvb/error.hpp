#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pvb {

enum class ErrorKind {
    MalformedInput,
    EmptyDataset,
    InvalidSpec,
    InvalidConfig,
    DimensionMismatch,
    RankDeficientDesign,
    SeparationDetected,
    DegenerateMargin,
    DegenerateImputation,
    TooManyFailedReplicates,
    DomainError,
};

std::string_view to_string(ErrorKind kind);

/// Coarse grouping used for CLI exit codes.
enum class ErrorCategory { Usage, Data, Numerical };

ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace pvb
