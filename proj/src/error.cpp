#include "mcs/error.hpp"

namespace mcs {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::AllTied: return "AllTied";
    case ErrorCode::NoDonorObjects: return "NoDonorObjects";
    case ErrorCode::NoDonorRegions: return "NoDonorRegions";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "IoError";
    }
    return "Error";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, std::optional<std::size_t> line) {
    std::string out(error_code_name(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    out += ": ";
    out += message;
    return out;
}

} // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(compose(code, message, line)), code_(code), line_(line), detail_(message) {}

} // namespace mcs
