#pragma once

#include <stdexcept>
#include <string>

namespace ce {

enum class ErrorCode {
    InvalidArgument = 1,
    Schema,
    Parse,
    DegenerateColumn,
    DegenerateInput,
    EmptyDataset,
    SampleTooSmall,
    SingularSystem,
    TrainingDiverged,
    Alignment,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code maps 1:1 onto ce_status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace ce
