#include "schro/error.hpp"

namespace schro {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::DuplicateAtom: return "DuplicateAtom";
    case ErrorKind::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorKind::NegativeCost: return "NegativeCost";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::OverflowInKernel: return "OverflowInKernel";
    case ErrorKind::MarginalMismatch: return "MarginalMismatch";
    case ErrorKind::TooLargeForEnumeration: return "TooLargeForEnumeration";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::DegeneratePermanent: return "DegeneratePermanent";
    case ErrorKind::NotADistribution: return "NotADistribution";
    case ErrorKind::SpectralGapViolation: return "SpectralGapViolation";
    case ErrorKind::NotMeanZero: return "NotMeanZero";
    case ErrorKind::NotDegenerate: return "NotDegenerate";
    case ErrorKind::NotDegenerateFirstOrder: return "NotDegenerateFirstOrder";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::EmptySample: return "EmptySample";
  }
  return "Unknown";
}

}  // namespace schro
