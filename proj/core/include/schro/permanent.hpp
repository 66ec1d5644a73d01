#pragma once

#include <Eigen/Dense>

namespace schro {

/// value * exp(log_scale).
struct ScaledValue {
  double value = 0.0;
  double log_scale = 0.0;

  double log() const;
  double to_double() const;
};

/// Ryser permanent with Gray-code subset order. Rows are scaled to max 1
/// first and the removed factors go into log_scale. n <= 20, entries > 0.
/// Throws InvalidArgument, TooLargeForEnumeration, Overflow,
/// DegeneratePermanent.
ScaledValue permanent(const Eigen::MatrixXd& w);

/// Raw Ryser sum in extended precision, no scaling and no checks beyond
/// size. Used when the caller already controls the range.
long double ryser(const Eigen::MatrixXd& w);

}  // namespace schro
