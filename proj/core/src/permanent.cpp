#include "schro/permanent.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "schro/error.hpp"

namespace schro {

double ScaledValue::log() const { return std::log(value) + log_scale; }

double ScaledValue::to_double() const { return value * std::exp(log_scale); }

long double ryser(const Eigen::MatrixXd& w) {
  const auto n = static_cast<int>(w.rows());
  if (n == 0) return 1.0L;
  if (n > 20) {
    throw Error(ErrorKind::TooLargeForEnumeration, "permanent limited to n <= 20");
  }
  // per(w) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} w_ij, S walked in
  // Gray-code order so each step adds or removes one column.
  std::vector<long double> row_sum(static_cast<std::size_t>(n), 0.0L);
  long double total = 0.0L;
  long double carry = 0.0L;
  std::uint32_t gray = 0;
  const std::uint32_t subsets = 1u << n;
  for (std::uint32_t k = 1; k < subsets; ++k) {
    const int j = __builtin_ctz(k);
    gray ^= 1u << j;
    const long double sign = (gray >> j) & 1u ? 1.0L : -1.0L;
    long double prod = 1.0L;
    for (int i = 0; i < n; ++i) {
      row_sum[static_cast<std::size_t>(i)] += sign * w(i, j);
      prod *= row_sum[static_cast<std::size_t>(i)];
    }
    if ((n - __builtin_popcount(gray)) % 2 != 0) prod = -prod;
    // Neumaier
    const long double t = total + prod;
    if (std::fabs(total) >= std::fabs(prod)) {
      carry += (total - t) + prod;
    } else {
      carry += (prod - t) + total;
    }
    total = t;
  }
  return total + carry;
}

ScaledValue permanent(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) {
    throw Error(ErrorKind::InvalidArgument, "permanent needs a square matrix");
  }
  if (w.rows() > 20) {
    throw Error(ErrorKind::TooLargeForEnumeration,
                "n = " + std::to_string(w.rows()) + " exceeds 20");
  }
  if (w.size() > 0 && (!w.allFinite() || w.minCoeff() <= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "permanent entries must be positive and finite");
  }
  Eigen::MatrixXd scaled = w;
  double log_scale = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double m = w.row(i).maxCoeff();
    scaled.row(i) /= m;
    log_scale += std::log(m);
  }
  const long double v = ryser(scaled);
  if (!std::isfinite(static_cast<double>(v))) {
    throw Error(ErrorKind::Overflow, "permanent sum is not finite");
  }
  if (!(v > 0.0L) || static_cast<double>(v) < 1e-300) {
    throw Error(ErrorKind::DegeneratePermanent, "permanent vanished after scaling");
  }
  return {static_cast<double>(v), log_scale};
}

}  // namespace schro
