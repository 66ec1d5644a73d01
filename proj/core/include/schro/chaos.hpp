#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "schro/measures.hpp"
#include "schro/operators.hpp"
#include "schro/sinkhorn.hpp"

namespace schro {

/// First-order chaos of T_N for a test function eta (m0 x m1).
struct FirstOrderKernels {
  Eigen::VectorXd kappa10;
  Eigen::VectorXd kappa01;
  Eigen::VectorXd f_chaos;  // (I - A*A)^{-1}(kappa10 - A* kappa01)
  Eigen::VectorXd g_chaos;  // (I - AA*)^{-1}(kappa01 - A kappa10)
  double sigma2 = 0.0;
  double theta = 0.0;
};

FirstOrderKernels first_order_kernels(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                      const BridgeOperators& ops);

/// (1/N) sum_i f(X_i) + g(Y_i).
double first_chaos_value(const SampleBatch& batch, const FirstOrderKernels& fk);

/// Same quantity through (1/N) sum_i (I + B)^{-1}(kappa10 (+) kappa01)(X_i, Y_i).
double first_chaos_value_via_B(const SampleBatch& batch, const FirstOrderKernels& fk,
                               const BridgeOperators& ops);

/// ||(I + B)^{-1}(kappa10 (+) kappa01)||^2 in L2(rho0 x rho1); equals sigma2.
double sigma2_via_B(const FirstOrderKernels& fk, const BridgeOperators& ops);

/// Second-order chaos. kappa20 is m0 x m0, kappa02 m1 x m1, kappa11p
/// m0 x m1. The affine correction is ell(x, y) = ell_const + ell_x(x) +
/// ell_y(y). gamma(k-1, l-1) is the coefficient of eta_tilde * xi on
/// alpha_k (x) beta_l for k, l >= 1.
struct SecondOrderKernels {
  Eigen::MatrixXd eta_tilde;
  Eigen::MatrixXd kappa20;
  Eigen::MatrixXd kappa02;
  Eigen::MatrixXd kappa11p;
  double theta11p = 0.0;
  double ell_const = 0.0;
  Eigen::VectorXd ell_x;
  Eigen::VectorXd ell_y;
  Eigen::MatrixXd gamma;

  Eigen::MatrixXd ell() const;
};

/// Throws NotDegenerate if eta_tilde * xi fails the 1e-9 degeneracy check.
SecondOrderKernels second_order_kernels(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                        const BridgeOperators& ops, const FirstOrderKernels& fk);

/// L_2 on a batch. Throws BatchTooSmall for N < 2.
double second_chaos_value(const SampleBatch& batch, const SecondOrderKernels& sk);

/// gamma_kl = <(eta - theta) xi, alpha_k (x) beta_l>, k, l >= 1, stored at
/// (k-1, l-1). Throws NotDegenerateFirstOrder if sigma2 > 1e-10.
Eigen::MatrixXd gamma_coefficients(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                   const BridgeOperators& ops);

/// Draws of the second-order limit. gamma(k-1, l-1) = gamma_kl and
/// s(k-1) = s_k; missing singular values count as 0. Draw d uses the stream
/// (seed, d), so the output does not depend on `threads`.
std::vector<double> simulate_second_order_limit(const Eigen::MatrixXd& gamma,
                                                const Eigen::VectorXd& s, std::size_t n_draws,
                                                std::uint64_t seed, std::size_t threads = 0);

/// One draw of the limit from given normals (length >= max(K0, K1)).
double second_order_limit_draw(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// E[U_N^2] under rho0 x rho1 from the cycle expansion, with every inner
/// expectation enumerated. Needs N <= 4 and m0 * m1 <= 16.
double u_n_variance_exact(const Eigen::MatrixXd& h, const Eigen::MatrixXd& xi,
                          const Eigen::VectorXd& w0, const Eigen::VectorXd& w1, std::size_t n);

/// (1/N^2) sum_r (r^2 / r!) sum_{sigma in S_r} s1^{2(r - #sigma)}
/// s0^{2(#sigma - 1)} s^2, summed by cycle counts.
double u_n_variance_bound(double s1, double varsigma0, double varsigma, std::size_t n);

/// prod_{i=1}^r (1 - 1/i + u/i), the mean of u^{#cycles} over S_r.
double cycle_mgf(std::size_t r, double u);

/// sum over subsets C of the factors of prod_{i in C} (x_i - 1).
double hoeffding_expansion(const std::vector<double>& factors);

/// Max entrywise residuals of the three identities tying the second-order
/// kernels together.
struct KernelIdentityResiduals {
  double x_identity = 0.0;
  double y_identity = 0.0;
  double reconstruction = 0.0;

  double max() const;
};

KernelIdentityResiduals kernel_identity_residuals(const SecondOrderKernels& sk, const BridgeOperators& ops);


/// E[U_N^2] straight from U_N = (1/(N N!)) sum_sigma sum_i h(X_i, Y_sigma_i)
/// prod_{j != i} xi(X_j, Y_sigma_j), enumerating every sample configuration.
/// Same size limits as u_n_variance_exact.
double u_n_second_moment_direct(const Eigen::MatrixXd& h, const Eigen::MatrixXd& xi,
                                const Eigen::VectorXd& w0, const Eigen::VectorXd& w1,
                                std::size_t n);

}  // namespace schro
