#pragma once

#include <stdexcept>
#include <string>

namespace dlss {

enum class ErrorCode {
    InvalidArgument,
    NonZeroMean,
    QuadratureFailure,
    NewtonDivergence,
    PositivityLoss,
    PositivityRequired,
    StepFailure,
    Infeasible,
    NoProgress,
    Config,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code selects the C API status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dlss
