#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mcs {

enum class ErrorCode {
    Schema,
    DimensionMismatch,
    DanglingReference,
    MissingInput,
    InsufficientData,
    DegenerateTarget,
    ConstantInput,
    LengthMismatch,
    NonFiniteInput,
    AllTied,
    NoDonorObjects,
    NoDonorRegions,
    InvalidArgument,
    Io,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the engine; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    // 1-based line number in the source stream, when the error came from parsing.
    std::optional<std::size_t> line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
    std::string detail_;
};

} // namespace mcs
