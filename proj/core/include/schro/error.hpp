#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace schro {

enum class ErrorKind {
  InvalidArgument,
  EmptySupport,
  DuplicateAtom,
  NonpositiveWeight,
  NegativeCost,
  NonConvergence,
  OverflowInKernel,
  MarginalMismatch,
  TooLargeForEnumeration,
  Overflow,
  DegeneratePermanent,
  NotADistribution,
  SpectralGapViolation,
  NotMeanZero,
  NotDegenerate,
  NotDegenerateFirstOrder,
  BatchTooSmall,
  DegenerateVariance,
  EmptySample,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace schro
