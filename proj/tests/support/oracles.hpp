#pragma once

// Slow, independent reference computations for the unit tests. Nothing here
// calls into the library's numerical routines; they only share the data
// types.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "schro/measures.hpp"
#include "schro/rng.hpp"

namespace oracle {

// per(w) by summing over every permutation.
double permanent_by_enumeration(const Eigen::MatrixXd& w);

// Number of cycles of a permutation given as images.
std::size_t cycle_count(const std::vector<std::size_t>& sigma);

// (1/r!) sum_{sigma in S_r} u^{#cycles}.
double cycle_mean(std::size_t r, double u);

struct Enumerated {
  double t_n = 0.0;
  Eigen::MatrixXd coupling;
};

// T_N and the coupling from the Gibbs law over S_N, no log-domain tricks.
Enumerated gibbs_by_enumeration(const Eigen::MatrixXd& eta, const Eigen::MatrixXd& cost,
                                double eps);

// Plain ratio iteration for xi: u <- 1 / (K v w1), v <- 1 / (K^T u w0),
// xi = u_i K_ij v_j. Stops on the xi-form residual.
Eigen::MatrixXd naive_sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& w0,
                               const Eigen::VectorXd& w1, double eps, double tol);

// B and C as (m0 m1) x (m0 m1) matrices acting on row-major flattenings,
// built entry by entry from their kernel definitions.
Eigen::MatrixXd dense_B(const Eigen::MatrixXd& xi, const Eigen::VectorXd& w0,
                        const Eigen::VectorXd& w1);
Eigen::MatrixXd dense_C(const Eigen::MatrixXd& xi, const Eigen::VectorXd& w0,
                        const Eigen::VectorXd& w1);

Eigen::VectorXd flatten(const Eigen::MatrixXd& h);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

// Solve op * x = rhs on the subspace orthogonal (in the weighted product
// inner product) to the given constraint vectors, by least squares on the
// augmented system.
Eigen::VectorXd constrained_solve(const Eigen::MatrixXd& op, const Eigen::VectorXd& rhs,
                                  const Eigen::MatrixXd& constraints);

// Literal double loop for the second-order chaos value.
double second_chaos_loop(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                         const Eigen::MatrixXd& k20, const Eigen::MatrixXd& k02,
                         const Eigen::MatrixXd& k11, const Eigen::MatrixXd& ell);

// E[U_N^2] straight from the definition: all (m0 m1)^N sample configurations
// and all N! permutations.
double u_n_second_moment(const Eigen::MatrixXd& h, const Eigen::MatrixXd& xi,
                         const Eigen::VectorXd& w0, const Eigen::VectorXd& w1, std::size_t n);

// Random positive matrix with entries in [lo, hi).
Eigen::MatrixXd random_positive(Eigen::Index rows, Eigen::Index cols, schro::Stream& rng,
                                double lo = 0.2, double hi = 2.0);

// Random vector made mean zero under weights w.
Eigen::VectorXd random_mean_zero(const Eigen::VectorXd& w, schro::Stream& rng);

// Random matrix made mean zero under w0 (x) w1 (global mean only).
Eigen::MatrixXd random_mean_zero(const Eigen::VectorXd& w0, const Eigen::VectorXd& w1,
                                 schro::Stream& rng);

double max_abs(const Eigen::MatrixXd& m);

}  // namespace oracle
