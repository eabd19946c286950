#pragma once

#include <stdexcept>
#include <string>

namespace mchess {

enum class ErrorCode {
  Parse,
  GeometryOutOfRange,
  IllegalStartingArray,
  InvalidFen,
  IllegalMove,
  MagicSearchExhausted,
  NotLegalInPosition,
  ShapeMismatch,
  CorruptCheckpoint,
  VersionMismatch,
  SpecMismatch,
  InvalidConfig,
  UnknownName,
  ScarceClass,
  NonFiniteInput,
  EmptyValidation,
  Io,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix.
  const std::string& detail() const { return detail_; }

  // Usage and configuration problems, as opposed to runtime failures.
  bool is_usage_error() const;

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mchess
