#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "schro/sinkhorn.hpp"

namespace schro {

/// Tolerances used across the operator algebra.
inline constexpr double kSpectralGapTol = 1e-10;
inline constexpr double kMeanZeroTol = 1e-10;
inline constexpr double kDegeneracyTol = 1e-9;

/// Conditional-mean residuals of a bivariate function.
struct DegeneracyReport {
  double residual_x = 0.0;  // max_y |E[h(X, y) | Y = y]|
  double residual_y = 0.0;  // max_x |E[h(x, Y) | X = x]|

  double max() const { return residual_x > residual_y ? residual_x : residual_y; }
};

/// Conditional means of h under the joint weights W (any positive m0 x m1
/// matrix, normalization irrelevant).
DegeneracyReport check_degenerate(const Eigen::MatrixXd& joint_weights, const Eigen::MatrixXd& h);

/// Same check under the product of two weight vectors.
DegeneracyReport check_degenerate(const Eigen::VectorXd& w0, const Eigen::VectorXd& w1,
                                  const Eigen::MatrixXd& h);

/// The Markov operators of a bridge and their singular system.
///
/// Functions on rho0 atoms are vectors of length m0, on rho1 atoms length
/// m1; bivariate functions are m0 x m1 matrices with (O1 (x) O2) h realized
/// as O1 h O2^T. alpha and beta hold the singular functions as columns,
/// orthonormal in L2(rho0) and L2(rho1). s has max(m0, m1) entries, padded
/// with zeros past min(m0, m1).
class BridgeOperators {
 public:
  /// Throws MarginalMismatch if the kernel residual exceeds 1e-10 and
  /// SpectralGapViolation if s_1 > 1 - 1e-10.
  static BridgeOperators build(const GibbsKernel& kernel);

  Eigen::Index m0() const noexcept { return w0_.size(); }
  Eigen::Index m1() const noexcept { return w1_.size(); }
  const Eigen::VectorXd& rho0_weights() const noexcept { return w0_; }
  const Eigen::VectorXd& rho1_weights() const noexcept { return w1_; }
  const Eigen::MatrixXd& xi() const noexcept { return xi_; }

  /// m1 x m0 matrix of A: (A f)(y) = sum_x f(x) xi(x, y) rho0(x).
  const Eigen::MatrixXd& A() const noexcept { return a_; }
  /// m0 x m1 matrix of A*: (A* g)(x) = sum_y g(y) xi(x, y) rho1(y).
  const Eigen::MatrixXd& A_star() const noexcept { return a_star_; }

  const Eigen::VectorXd& s() const noexcept { return s_; }
  const Eigen::MatrixXd& alpha() const noexcept { return alpha_; }
  const Eigen::MatrixXd& beta() const noexcept { return beta_; }
  double gap() const noexcept { return gap_; }

  Eigen::VectorXd apply_A(const Eigen::VectorXd& f) const;
  Eigen::VectorXd apply_A_star(const Eigen::VectorXd& g) const;

  /// (I - A*A)^{-1} f for f mean-zero under rho0. Throws NotMeanZero.
  Eigen::VectorXd solve_resolvent_x(const Eigen::VectorXd& f) const;
  /// (I - AA*)^{-1} g for g mean-zero under rho1. Throws NotMeanZero.
  Eigen::VectorXd solve_resolvent_y(const Eigen::VectorXd& g) const;

  /// (B h)(x, y) = sum h(x', y') xi(x', y) xi(x, y') rho0(x') rho1(y').
  Eigen::MatrixXd apply_B(const Eigen::MatrixXd& h) const;
  /// (I + B)^{-1} h for h mean-zero under rho0 (x) rho1. Throws NotMeanZero.
  Eigen::MatrixXd solve_I_plus_B(const Eigen::MatrixXd& h) const;

  /// C h = (I - A*A) h (I - AA*)^T.
  Eigen::MatrixXd apply_C(const Eigen::MatrixXd& h) const;
  /// C^{-1} h for h doubly degenerate under rho0 (x) rho1. Throws NotDegenerate.
  Eigen::MatrixXd solve_C(const Eigen::MatrixXd& h) const;

  /// Coefficients <h, alpha_k (x) beta_l> in L2(rho0 (x) rho1), m0 x m1.
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& h) const;
  /// Inverse of coefficients().
  Eigen::MatrixXd from_coefficients(const Eigen::MatrixXd& c) const;

  /// Singular value with index k, zero past the end.
  double s_at(Eigen::Index k) const noexcept { return k < s_.size() ? s_(k) : 0.0; }

  double mean0(const Eigen::VectorXd& f) const { return f.dot(w0_); }
  double mean1(const Eigen::VectorXd& g) const { return g.dot(w1_); }
  double norm0(const Eigen::VectorXd& f) const;
  double norm1(const Eigen::VectorXd& g) const;
  /// L2(rho0 (x) rho1) norm of a bivariate function.
  double norm01(const Eigen::MatrixXd& h) const;

 private:
  BridgeOperators() = default;

  Eigen::VectorXd w0_;
  Eigen::VectorXd w1_;
  Eigen::MatrixXd xi_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_star_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd alpha_;
  Eigen::MatrixXd beta_;
  double gap_ = 1.0;
};

/// f (+) g as an m0 x m1 matrix.
Eigen::MatrixXd direct_sum(const Eigen::VectorXd& f, const Eigen::VectorXd& g);

}  // namespace schro
