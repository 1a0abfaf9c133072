#include "pie/error.hpp"

namespace pie {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::InvalidPartition: return "invalid-partition";
    case ErrorKind::InvalidHyperparameter: return "invalid-hyperparameter";
    case ErrorKind::InvalidLevel: return "invalid-level";
    case ErrorKind::InvalidInit: return "invalid-init";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::Range: return "range";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::InvalidData: return "invalid-data";
    case ErrorKind::Io: return "io";
    case ErrorKind::ExistingFile: return "existing-file";
    case ErrorKind::EmptyShard: return "empty-shard";
    case ErrorKind::EmptyDraws: return "empty-draws";
    case ErrorKind::InsufficientDraws: return "insufficient-draws";
    case ErrorKind::DegenerateSample: return "degenerate-sample";
    case ErrorKind::SingularMatrix: return "singular-matrix";
    case ErrorKind::ConvergenceFailure: return "convergence-failure";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidPartition:
    case ErrorKind::InvalidHyperparameter:
    case ErrorKind::InvalidLevel:
    case ErrorKind::InvalidInit:
    case ErrorKind::Shape:
    case ErrorKind::GridMismatch:
    case ErrorKind::Range:
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::Parse:
    case ErrorKind::InvalidData:
    case ErrorKind::Io:
    case ErrorKind::ExistingFile:
    case ErrorKind::EmptyShard:
    case ErrorKind::EmptyDraws:
    case ErrorKind::InsufficientDraws:
    case ErrorKind::DegenerateSample:
      return 3;
    case ErrorKind::SingularMatrix:
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::Numeric:
      return 4;
  }
  return 4;
}

}  // namespace pie
