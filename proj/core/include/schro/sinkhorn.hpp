#pragma once

#include <cstddef>
#include <utility>

#include <Eigen/Dense>

#include "schro/measures.hpp"

namespace schro {

struct SinkhornOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100000;
};

struct SinkhornReport {
  std::size_t iterations = 0;
  /// Max violation of the two constraints sum_j xi_ij rho1_j = 1 and
  /// sum_i xi_ij rho0_i = 1.
  double residual = 0.0;
  bool converged = false;
};

/// Static Schrodinger bridge on a finite product space.
///
/// xi_ij = exp(-(c_ij - a_i - b_j) / eps), mu_ij = xi_ij rho0_i rho1_j, and
/// the potentials satisfy sum_i a_i rho0_i = 0.
struct GibbsKernel {
  DiscreteMeasure rho0;
  DiscreteMeasure rho1;
  Eigen::MatrixXd cost;
  double eps = 1.0;
  Eigen::MatrixXd xi;
  Eigen::VectorXd a_eps;
  Eigen::VectorXd b_eps;
  Eigen::MatrixXd mu;

  std::size_t m0() const noexcept { return rho0.size(); }
  std::size_t m1() const noexcept { return rho1.size(); }

  /// Current max violation of the xi-form marginal constraints.
  double marginal_residual() const;
};

/// Log-domain scaling on raw weight vectors. Returns (a/eps, b/eps) and a
/// report; never throws on non-convergence (the caller decides).
struct ScaledPotentials {
  Eigen::VectorXd f;  // a / eps
  Eigen::VectorXd g;  // b / eps
  SinkhornReport report;
};

ScaledPotentials scale_potentials(const Eigen::MatrixXd& cost, const Eigen::VectorXd& w0,
                                  const Eigen::VectorXd& w1, double eps,
                                  const SinkhornOptions& options);

/// Solves for the bridge. Throws InvalidArgument (eps <= 0, tol outside
/// (0, 1e-6], shape mismatch), NonConvergence, OverflowInKernel.
std::pair<GibbsKernel, SinkhornReport> solve_bridge(const DiscreteMeasure& rho0,
                                                    const DiscreteMeasure& rho1,
                                                    const Eigen::MatrixXd& cost, double eps,
                                                    const SinkhornOptions& options = {});

/// Row-stochastic kernel p(i,j) = exp(-c_ij/eps) rho1_j / Z(i).
Eigen::MatrixXd markov_kernel(const Eigen::MatrixXd& cost, const Eigen::VectorXd& rho1_weights,
                              double eps);

/// sum c_ij nu_ij + eps * sum nu_ij log(nu_ij / (rho0_i rho1_j)), with
/// 0 log 0 = 0. Throws MarginalMismatch when nu is not a coupling to 1e-8.
double entropic_objective(const Eigen::MatrixXd& coupling, const Eigen::MatrixXd& cost,
                          const Eigen::VectorXd& rho0_weights,
                          const Eigen::VectorXd& rho1_weights, double eps);

}  // namespace schro
