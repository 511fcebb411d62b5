#include <texsr/error.hpp>

namespace texsr {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::PartialWrite: return "PartialWrite";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::DegenerateAtlas: return "DegenerateAtlas";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::InvalidFactor: return "InvalidFactor";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyOperator: return "EmptyOperator";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ViewMismatch: return "ViewMismatch";
    case ErrorCode::NoObservations: return "NoObservations";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

bool is_numerical(ErrorCode code)
{
    return code == ErrorCode::SingularMatrix || code == ErrorCode::DivergenceDetected;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message)
    , m_code(code)
{}

void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace texsr
