#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace texsr {

enum class ErrorCode {
    // I/O and parsing
    FileNotFound,
    ParseError,
    IoError,
    MissingFile,
    UnsupportedVersion,
    PartialWrite,
    // mesh and atlas
    MissingAttribute,
    EmptyMesh,
    InvalidSize,
    DegenerateAtlas,
    // camera
    SingularMatrix,
    InvalidFactor,
    BehindCamera,
    // operators and solvers
    InvalidConfig,
    EmptyOperator,
    DimensionMismatch,
    ViewMismatch,
    NoObservations,
    MaskMismatch,
    DivergenceDetected,
    EmptyIntersection,
    // command line
    UsageError,
};

std::string_view to_string(ErrorCode code);

/// Failures that indicate a numerical problem rather than bad input data.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

} // namespace texsr
