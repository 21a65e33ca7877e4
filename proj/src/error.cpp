#include "uavmem/error.hpp"

namespace uavmem {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::HorizonViolation: return "HorizonViolation";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DoubleEndFrame: return "DoubleEndFrame";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularKernel: return "SingularKernel";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::MissingMetadata: return "MissingMetadata";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace uavmem
