#include "schro/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "schro/error.hpp"

namespace schro {

namespace {

// Makes the first entry whose magnitude is within 1e-9 of the largest
// positive. Ties are common (SYM2 has alpha_1 = (1, -1)).
bool needs_flip(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::fabs(v(i)) >= (1.0 - 1e-9) * top) return v(i) < 0.0;
  }
  return false;
}

}  // namespace

DegeneracyReport check_degenerate(const Eigen::MatrixXd& joint_weights, const Eigen::MatrixXd& h) {
  if (joint_weights.rows() != h.rows() || joint_weights.cols() != h.cols()) {
    throw Error(ErrorKind::InvalidArgument, "weights and function differ in shape");
  }
  const Eigen::MatrixXd wh = joint_weights.cwiseProduct(h);
  DegeneracyReport r;
  r.residual_x = (wh.colwise().sum().array() / joint_weights.colwise().sum().array())
                     .abs()
                     .maxCoeff();
  r.residual_y = (wh.rowwise().sum().array() / joint_weights.rowwise().sum().array())
                     .abs()
                     .maxCoeff();
  return r;
}

DegeneracyReport check_degenerate(const Eigen::VectorXd& w0, const Eigen::VectorXd& w1,
                                  const Eigen::MatrixXd& h) {
  return check_degenerate(Eigen::MatrixXd(w0 * w1.transpose()), h);
}

Eigen::MatrixXd direct_sum(const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  return (Eigen::MatrixXd::Zero(f.size(), g.size()).colwise() + f).rowwise() + g.transpose();
}

BridgeOperators BridgeOperators::build(const GibbsKernel& kernel) {
  const double residual = kernel.marginal_residual();
  if (residual > 1e-10) {
    throw Error(ErrorKind::MarginalMismatch,
                "kernel marginal residual " + std::to_string(residual) + " exceeds 1e-10");
  }
  BridgeOperators ops;
  ops.w0_ = kernel.rho0.weights();
  ops.w1_ = kernel.rho1.weights();
  ops.xi_ = kernel.xi;
  ops.a_ = (ops.xi_.transpose() * ops.w0_.asDiagonal());
  ops.a_star_ = ops.xi_ * ops.w1_.asDiagonal();

  const Eigen::Index m0 = ops.w0_.size();
  const Eigen::Index m1 = ops.w1_.size();
  const Eigen::Index lo = std::min(m0, m1);
  const Eigen::VectorXd r0 = ops.w0_.cwiseSqrt();
  const Eigen::VectorXd r1 = ops.w1_.cwiseSqrt();
  const Eigen::MatrixXd sym = r0.asDiagonal() * ops.xi_ * r1.asDiagonal();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sym, Eigen::ComputeFullU | Eigen::ComputeFullV);

  ops.s_ = Eigen::VectorXd::Zero(std::max(m0, m1));
  ops.s_.head(lo) = svd.singularValues();
  ops.alpha_ = r0.cwiseInverse().asDiagonal() * svd.matrixU();
  ops.beta_ = r1.cwiseInverse().asDiagonal() * svd.matrixV();
  for (Eigen::Index k = 0; k < m0; ++k) {
    if (needs_flip(ops.alpha_.col(k))) {
      ops.alpha_.col(k) *= -1.0;
      if (k < lo) ops.beta_.col(k) *= -1.0;
    }
  }
  for (Eigen::Index k = lo; k < m1; ++k) {
    if (needs_flip(ops.beta_.col(k))) ops.beta_.col(k) *= -1.0;
  }

  const double s1 = ops.s_at(1);
  ops.gap_ = 1.0 - s1;
  if (lo >= 2 && s1 > 1.0 - kSpectralGapTol) {
    throw Error(ErrorKind::SpectralGapViolation,
                "s_1 = " + std::to_string(s1) + " leaves no spectral gap");
  }
  return ops;
}

Eigen::VectorXd BridgeOperators::apply_A(const Eigen::VectorXd& f) const {
  if (f.size() != m0()) throw Error(ErrorKind::InvalidArgument, "apply_A: length mismatch");
  return a_ * f;
}

Eigen::VectorXd BridgeOperators::apply_A_star(const Eigen::VectorXd& g) const {
  if (g.size() != m1()) throw Error(ErrorKind::InvalidArgument, "apply_A_star: length mismatch");
  return a_star_ * g;
}

Eigen::VectorXd BridgeOperators::solve_resolvent_x(const Eigen::VectorXd& f) const {
  if (f.size() != m0()) throw Error(ErrorKind::InvalidArgument, "resolvent: length mismatch");
  const double mean = mean0(f);
  if (std::fabs(mean) > kMeanZeroTol) {
    throw Error(ErrorKind::NotMeanZero, "<f, 1> = " + std::to_string(mean));
  }
  if (gap_ <= kSpectralGapTol) throw Error(ErrorKind::SpectralGapViolation, "gap too small");
  Eigen::VectorXd c = alpha_.transpose() * w0_.asDiagonal() * f;
  c(0) = 0.0;
  for (Eigen::Index k = 1; k < c.size(); ++k) c(k) /= 1.0 - s_at(k) * s_at(k);
  return alpha_ * c;
}

Eigen::VectorXd BridgeOperators::solve_resolvent_y(const Eigen::VectorXd& g) const {
  if (g.size() != m1()) throw Error(ErrorKind::InvalidArgument, "resolvent: length mismatch");
  const double mean = mean1(g);
  if (std::fabs(mean) > kMeanZeroTol) {
    throw Error(ErrorKind::NotMeanZero, "<g, 1> = " + std::to_string(mean));
  }
  if (gap_ <= kSpectralGapTol) throw Error(ErrorKind::SpectralGapViolation, "gap too small");
  Eigen::VectorXd c = beta_.transpose() * w1_.asDiagonal() * g;
  c(0) = 0.0;
  for (Eigen::Index k = 1; k < c.size(); ++k) c(k) /= 1.0 - s_at(k) * s_at(k);
  return beta_ * c;
}

Eigen::MatrixXd BridgeOperators::apply_B(const Eigen::MatrixXd& h) const {
  if (h.rows() != m0() || h.cols() != m1()) {
    throw Error(ErrorKind::InvalidArgument, "apply_B: shape mismatch");
  }
  return a_star_ * h.transpose() * a_.transpose();
}

Eigen::MatrixXd BridgeOperators::solve_I_plus_B(const Eigen::MatrixXd& h) const {
  if (h.rows() != m0() || h.cols() != m1()) {
    throw Error(ErrorKind::InvalidArgument, "solve_I_plus_B: shape mismatch");
  }
  const double mean = w0_.dot(h * w1_);
  if (std::fabs(mean) > kMeanZeroTol) {
    throw Error(ErrorKind::NotMeanZero, "mean under rho0 x rho1 = " + std::to_string(mean));
  }
  // B maps alpha_k (x) beta_l to s_k s_l alpha_l (x) beta_k, so I + B is
  // diagonal only on k = l; the (k, l), (l, k) pairs form 2 x 2 blocks.
  const Eigen::MatrixXd c = coefficients(h);
  Eigen::MatrixXd x = c;
  const Eigen::Index lo = std::min(m0(), m1());
  for (Eigen::Index k = 0; k < lo; ++k) {
    const double sk = s_at(k);
    x(k, k) = c(k, k) / (1.0 + sk * sk);
    for (Eigen::Index l = k + 1; l < lo; ++l) {
      const double t = sk * s_at(l);
      const double det = 1.0 - t * t;
      x(k, l) = (c(k, l) - t * c(l, k)) / det;
      x(l, k) = (c(l, k) - t * c(k, l)) / det;
    }
  }
  return from_coefficients(x);
}

Eigen::MatrixXd BridgeOperators::apply_C(const Eigen::MatrixXd& h) const {
  if (h.rows() != m0() || h.cols() != m1()) {
    throw Error(ErrorKind::InvalidArgument, "apply_C: shape mismatch");
  }
  const Eigen::MatrixXd p0 = Eigen::MatrixXd::Identity(m0(), m0()) - a_star_ * a_;
  const Eigen::MatrixXd p1 = Eigen::MatrixXd::Identity(m1(), m1()) - a_ * a_star_;
  return p0 * h * p1.transpose();
}

Eigen::MatrixXd BridgeOperators::solve_C(const Eigen::MatrixXd& h) const {
  if (h.rows() != m0() || h.cols() != m1()) {
    throw Error(ErrorKind::InvalidArgument, "solve_C: shape mismatch");
  }
  const DegeneracyReport rep = check_degenerate(w0_, w1_, h);
  if (rep.max() > kDegeneracyTol) {
    throw Error(ErrorKind::NotDegenerate, "conditional means " + std::to_string(rep.residual_x) +
                                              ", " + std::to_string(rep.residual_y));
  }
  if (gap_ <= kSpectralGapTol) throw Error(ErrorKind::SpectralGapViolation, "gap too small");
  Eigen::MatrixXd c = coefficients(h);
  c.row(0).setZero();
  c.col(0).setZero();
  for (Eigen::Index k = 1; k < c.rows(); ++k) {
    for (Eigen::Index l = 1; l < c.cols(); ++l) {
      c(k, l) /= (1.0 - s_at(k) * s_at(k)) * (1.0 - s_at(l) * s_at(l));
    }
  }
  return from_coefficients(c);
}

Eigen::MatrixXd BridgeOperators::coefficients(const Eigen::MatrixXd& h) const {
  return alpha_.transpose() * w0_.asDiagonal() * h * w1_.asDiagonal() * beta_;
}

Eigen::MatrixXd BridgeOperators::from_coefficients(const Eigen::MatrixXd& c) const {
  return alpha_ * c * beta_.transpose();
}

double BridgeOperators::norm0(const Eigen::VectorXd& f) const {
  return std::sqrt(f.cwiseAbs2().dot(w0_));
}

double BridgeOperators::norm1(const Eigen::VectorXd& g) const {
  return std::sqrt(g.cwiseAbs2().dot(w1_));
}

double BridgeOperators::norm01(const Eigen::MatrixXd& h) const {
  return std::sqrt(w0_.dot(h.cwiseAbs2() * w1_));
}

}  // namespace schro
