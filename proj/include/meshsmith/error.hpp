#pragma once

#include <stdexcept>
#include <string>

namespace meshsmith {

enum class ErrorCode {
  BoundaryNode,
  OpenRing,
  EmptyMesh,
  DegenerateInput,
  DuplicatePoints,
  DegenerateAngle,
  DegenerateTriangle,
  ShapeMismatch,
  NonScalarOutput,
  ZeroExtent,
  EmptyDataset,
  MissingDegree,
  VersionMismatch,
  CorruptFile,
  UnknownSmoother,
  ParseError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::BoundaryNode: return "BoundaryNode";
    case ErrorCode::OpenRing: return "OpenRing";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DuplicatePoints: return "DuplicatePoints";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonScalarOutput: return "NonScalarOutput";
    case ErrorCode::ZeroExtent: return "ZeroExtent";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MissingDegree: return "MissingDegree";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::UnknownSmoother: return "UnknownSmoother";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace meshsmith
