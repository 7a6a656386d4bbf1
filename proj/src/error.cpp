#include "dlsslab/error.hpp"

namespace dlss {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonZeroMean: return "NonZeroMean";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::NewtonDivergence: return "NewtonDivergence";
        case ErrorCode::PositivityLoss: return "PositivityLoss";
        case ErrorCode::PositivityRequired: return "PositivityRequired";
        case ErrorCode::StepFailure: return "StepFailure";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::NoProgress: return "NoProgress";
        case ErrorCode::Config: return "ConfigError";
        case ErrorCode::Io: return "IoError";
    }
    return "Unknown";
}

}  // namespace dlss
