#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "schro/measures.hpp"
#include "schro/sinkhorn.hpp"

namespace schro {

enum class EstimatorMethod { Auto, Brute, Permanent };

std::string_view to_string(EstimatorMethod method) noexcept;

/// Largest N for each evaluation path.
inline constexpr std::size_t kMaxQStarN = 10;
inline constexpr std::size_t kMaxBruteN = 8;
inline constexpr std::size_t kMaxPermanentN = 16;
/// Auto switches from brute force to permanents at this N.
inline constexpr std::size_t kAutoSwitchN = 8;

/// Exact evaluation of the discrete bridge on one sample.
///
/// `coupling` is M with M_ij = P(sigma_i = j) / N under the Gibbs
/// distribution, so N * M is doubly stochastic. `l_n` is only known when the
/// weights were rescaled by the population potentials.
struct BridgeEstimate {
  double t_n = 0.0;
  Eigen::MatrixXd coupling;
  std::optional<double> l_n;
  EstimatorMethod method = EstimatorMethod::Brute;
};

/// Row potentials a(X_i) and column potentials b(Y_j) used to rescale the
/// sample weights to w_ij = exp(-(c_ij - a_i - b_j) / eps).
struct SamplePotentials {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

/// All permutations of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> enumerate_permutations(std::size_t n);

/// Gibbs probability of sigma, normalized over all of S_N. N <= 10.
double q_star(const Eigen::MatrixXd& cost_sample, double eps,
              const std::vector<std::size_t>& sigma);

/// The whole Gibbs distribution in enumerate_permutations order. N <= 10.
std::vector<double> q_star_distribution(const Eigen::MatrixXd& cost_sample, double eps);

/// T_N by summing over S_N. N <= 8.
BridgeEstimate t_n_brute(const Eigen::MatrixXd& eta_sample, const Eigen::MatrixXd& cost_sample,
                         double eps);

/// T_N through N^2 + 1 Ryser permanents. Without potentials the empirical
/// Sinkhorn potentials of the two uniform empirical measures are used.
/// N <= 16.
BridgeEstimate t_n_permanent(const Eigen::MatrixXd& eta_sample,
                             const Eigen::MatrixXd& cost_sample, double eps,
                             const std::optional<SamplePotentials>& potentials = std::nullopt);

/// Dispatch on method; Auto uses brute force below kAutoSwitchN.
BridgeEstimate estimate(const Eigen::MatrixXd& eta_sample, const Eigen::MatrixXd& cost_sample,
                        double eps, EstimatorMethod method = EstimatorMethod::Auto,
                        const std::optional<SamplePotentials>& potentials = std::nullopt);

/// Population potentials gathered at the sample points.
SamplePotentials sample_potentials(const GibbsKernel& kernel, const SampleBatch& batch);

/// L_N = per(Xi_sample) / N!. N <= 16.
double likelihood_ratio(const SampleBatch& batch, const GibbsKernel& kernel);

/// <M_q, C> + (eps / N) sum_sigma q log q for a distribution q over S_N in
/// enumerate_permutations order. N <= 6. Throws NotADistribution.
double gibbs_objective_check(const std::vector<double>& q, const Eigen::MatrixXd& cost_sample,
                             double eps);

}  // namespace schro
