#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pie {

enum class ErrorKind {
  // configuration / usage
  Config,
  InvalidPartition,
  InvalidHyperparameter,
  InvalidLevel,
  InvalidInit,
  Shape,
  GridMismatch,
  Range,
  Domain,
  // data
  Parse,
  InvalidData,
  Io,
  ExistingFile,
  EmptyShard,
  EmptyDraws,
  InsufficientDraws,
  DegenerateSample,
  // numerics
  SingularMatrix,
  ConvergenceFailure,
  Numeric,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every library failure is reported as a pie::Error carrying its kind so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CLI exit code for an error kind: 2 config, 3 data, 4 numeric failure.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace pie
