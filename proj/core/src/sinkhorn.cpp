#include "schro/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "schro/error.hpp"

namespace schro {

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Max violation of sum_j k_ij w1_j = 1 and sum_i k_ij w0_i = 1, where
// k = exp(f_i + g_j - c_ij/eps).
double scaling_residual(const Eigen::MatrixXd& log_kernel, const Eigen::VectorXd& f,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& w0,
                        const Eigen::VectorXd& w1) {
  const Eigen::MatrixXd k =
      ((log_kernel.colwise() + f).rowwise() + g.transpose()).array().exp().matrix();
  const double rows = ((k * w1).array() - 1.0).abs().maxCoeff();
  const double cols = ((k.transpose() * w0).array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

}  // namespace

double GibbsKernel::marginal_residual() const {
  const double rows = ((xi * rho1.weights()).array() - 1.0).abs().maxCoeff();
  const double cols = ((xi.transpose() * rho0.weights()).array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

ScaledPotentials scale_potentials(const Eigen::MatrixXd& cost, const Eigen::VectorXd& w0,
                                  const Eigen::VectorXd& w1, double eps,
                                  const SinkhornOptions& options) {
  const Eigen::Index m0 = cost.rows();
  const Eigen::Index m1 = cost.cols();
  const Eigen::MatrixXd log_kernel = -cost / eps;
  const Eigen::VectorXd log_w0 = w0.array().log().matrix();
  const Eigen::VectorXd log_w1 = w1.array().log().matrix();

  ScaledPotentials out{Eigen::VectorXd::Zero(m0), Eigen::VectorXd::Zero(m1), {}};
  Eigen::VectorXd scratch0(m1);
  Eigen::VectorXd scratch1(m0);
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    for (Eigen::Index i = 0; i < m0; ++i) {
      scratch0 = log_kernel.row(i).transpose() + out.g + log_w1;
      out.f(i) = -log_sum_exp(scratch0);
    }
    for (Eigen::Index j = 0; j < m1; ++j) {
      scratch1 = log_kernel.col(j) + out.f + log_w0;
      out.g(j) = -log_sum_exp(scratch1);
    }
    out.report.iterations = it;
    out.report.residual = scaling_residual(log_kernel, out.f, out.g, w0, w1);
    if (!std::isfinite(out.report.residual)) break;
    if (out.report.residual <= options.tol) {
      out.report.converged = true;
      break;
    }
  }
  return out;
}

std::pair<GibbsKernel, SinkhornReport> solve_bridge(const DiscreteMeasure& rho0,
                                                    const DiscreteMeasure& rho1,
                                                    const Eigen::MatrixXd& cost, double eps,
                                                    const SinkhornOptions& options) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::InvalidArgument, "eps must be positive, got " + std::to_string(eps));
  }
  if (!(options.tol > 0.0) || options.tol > 1e-6) {
    throw Error(ErrorKind::InvalidArgument, "tol must lie in (0, 1e-6]");
  }
  if (cost.rows() != static_cast<Eigen::Index>(rho0.size()) ||
      cost.cols() != static_cast<Eigen::Index>(rho1.size())) {
    throw Error(ErrorKind::InvalidArgument, "cost matrix shape does not match the measures");
  }

  ScaledPotentials pot = scale_potentials(cost, rho0.weights(), rho1.weights(), eps, options);
  if (!std::isfinite(pot.report.residual) || !pot.f.allFinite() || !pot.g.allFinite()) {
    throw Error(ErrorKind::OverflowInKernel, "scaling left the floating-point range");
  }
  if (!pot.report.converged) {
    throw Error(ErrorKind::NonConvergence,
                "residual " + std::to_string(pot.report.residual) + " after " +
                    std::to_string(pot.report.iterations) + " iterations");
  }

  Eigen::VectorXd a = eps * pot.f;
  Eigen::VectorXd b = eps * pot.g;
  const double shift = a.dot(rho0.weights());
  a.array() -= shift;
  b.array() += shift;

  Eigen::MatrixXd xi = (((-cost).colwise() + a).rowwise() + b.transpose()) / eps;
  xi = xi.array().exp().matrix();
  if (!xi.allFinite() || xi.minCoeff() <= 0.0) {
    throw Error(ErrorKind::OverflowInKernel, "xi over- or underflows for eps = " +
                                                 std::to_string(eps));
  }
  Eigen::MatrixXd mu = rho0.weights().asDiagonal() * xi * rho1.weights().asDiagonal();

  GibbsKernel kernel{rho0, rho1, cost, eps, std::move(xi), std::move(a), std::move(b),
                     std::move(mu)};
  SinkhornReport report = pot.report;
  report.residual = kernel.marginal_residual();
  return {std::move(kernel), report};
}

Eigen::MatrixXd markov_kernel(const Eigen::MatrixXd& cost, const Eigen::VectorXd& rho1_weights,
                              double eps) {
  if (!(eps > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  }
  if (cost.cols() != rho1_weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "cost columns do not match rho1");
  }
  Eigen::MatrixXd p(cost.rows(), cost.cols());
  const Eigen::VectorXd log_w1 = rho1_weights.array().log().matrix();
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    const Eigen::VectorXd logits = (-cost.row(i).transpose() / eps) + log_w1;
    const double z = log_sum_exp(logits);
    if (!std::isfinite(z)) {
      throw Error(ErrorKind::OverflowInKernel, "row " + std::to_string(i) + " normalizer");
    }
    p.row(i) = (logits.array() - z).exp().transpose();
  }
  return p;
}

double entropic_objective(const Eigen::MatrixXd& coupling, const Eigen::MatrixXd& cost,
                          const Eigen::VectorXd& rho0_weights,
                          const Eigen::VectorXd& rho1_weights, double eps) {
  if (coupling.rows() != cost.rows() || coupling.cols() != cost.cols() ||
      coupling.rows() != rho0_weights.size() || coupling.cols() != rho1_weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "coupling shape mismatch");
  }
  if (coupling.minCoeff() < 0.0) {
    throw Error(ErrorKind::MarginalMismatch, "coupling has negative mass");
  }
  const double row_err = (coupling.rowwise().sum() - rho0_weights).cwiseAbs().maxCoeff();
  const double col_err =
      (coupling.colwise().sum().transpose() - rho1_weights).cwiseAbs().maxCoeff();
  if (std::max(row_err, col_err) > 1e-8) {
    throw Error(ErrorKind::MarginalMismatch,
                "marginal error " + std::to_string(std::max(row_err, col_err)));
  }
  double transport = 0.0;
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < coupling.cols(); ++j) {
      const double v = coupling(i, j);
      transport += cost(i, j) * v;
      if (v > 0.0) entropy += v * std::log(v / (rho0_weights(i) * rho1_weights(j)));
    }
  }
  return transport + eps * entropy;
}

}  // namespace schro
