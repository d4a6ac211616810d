#pragma once

#include <stdexcept>
#include <string>

namespace milo {

// All error conditions surface as typed exceptions so callers can decide
// between hard failure (CLI) and recoverable handling (B&B node pruning,
// MPC candidate fallthrough).

struct SingularKinematics : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInterval : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleBounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InconsistentAssignment : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidWarmStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooManyBinaries : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientHistory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorruptLine : std::runtime_error {
  CorruptLine(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

struct AllCandidatesFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace milo
