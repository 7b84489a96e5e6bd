#include "causal_energy/error.hpp"

namespace ce {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Schema: return "schema-error";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::DegenerateColumn: return "degenerate-column";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::SampleTooSmall: return "sample-too-small";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::TrainingDiverged: return "training-diverged";
    case ErrorCode::Alignment: return "alignment-error";
    case ErrorCode::Io: return "io-error";
    }
    return "unknown-error";
}

}  // namespace ce
