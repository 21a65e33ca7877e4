#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uavmem {

enum class ErrorCode {
  InvalidCamera,
  HorizonViolation,
  BehindCamera,
  PoleProximity,
  InvalidSpec,
  DoubleEndFrame,
  VersionMismatch,
  InsufficientData,
  SingularKernel,
  OutOfOrderFrame,
  MissingMetadata,
  SpecMismatch,
  ClockSkew,
  InvalidInput,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. The code distinguishes
/// validation failures (exit 1 in the CLI) from I/O failures (exit 2).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uavmem
