#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "schro/chaos.hpp"
#include "schro/estimator.hpp"
#include "schro/fixtures.hpp"
#include "schro/stats.hpp"

namespace schro {

enum class EtaChoice { Cost, CustomMatrix };

std::string_view to_string(EtaChoice eta) noexcept;

struct ExperimentConfig {
  Problem problem = sym2();
  EtaChoice eta = EtaChoice::Cost;
  Eigen::MatrixXd eta_matrix;  // CustomMatrix only
  std::vector<std::size_t> n_values{12};
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  EstimatorMethod method = EstimatorMethod::Auto;
  double tol = 1e-12;
  /// Sampling law; each experiment has its own default when unset.
  std::optional<SampleSource> source;
  /// Limit-law draws for the second-order comparison; 0 means 10x replicates.
  std::size_t reference_draws = 0;
  std::string output_dir;  // empty: nothing written
  bool strict = true;
  std::size_t threads = 0;
};

/// Throws InvalidArgument when N, replicates or eta do not fit.
void validate(const ExperimentConfig& config);

/// Pass/fail line with the measured value and its threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Exact limit parameters written next to every experiment.
struct LimitParameters {
  double theta = 0.0;
  double sigma2 = 0.0;
  double theta11p = 0.0;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd s;
};

struct PerN {
  std::size_t n = 0;
  std::vector<double> t_n;
  std::vector<double> l_n;
  /// The experiment's scaled statistic (e.g. sqrt(N)(T_N - theta)).
  std::vector<double> statistic;
  std::vector<double> first_chaos;
  std::vector<double> second_chaos;  // NaN for N < 2
  std::vector<double> remainder;
  /// Extra per-replicate columns (compare-cuturi).
  std::vector<std::pair<std::string, std::vector<double>>> extra;
  Moments stat_moments;
  nlohmann::ordered_json summary;
};

struct ExperimentResult {
  std::string experiment;
  std::string fixture;
  std::uint64_t seed = 0;
  SampleSource source = SampleSource::Product;
  LimitParameters limits;
  std::vector<PerN> per_n;
  nlohmann::ordered_json summary;
  std::vector<Check> checks;

  bool passed() const;
};

LimitParameters limit_parameters(const SolvedProblem& solved, const Eigen::MatrixXd& eta);

ExperimentResult run_clt(const ExperimentConfig& config);
ExperimentResult run_second_order(const ExperimentConfig& config);
ExperimentResult run_remainder_decay(const ExperimentConfig& config);
ExperimentResult run_unbiasedness(const ExperimentConfig& config);
ExperimentResult run_compare_with_cuturi(const ExperimentConfig& config);

/// Writes {experiment}_{fixture}_{N}_{seed}.{json,csv} per N and
/// {experiment}_{fixture}_summary_{seed}.json. Returns the paths written.
std::vector<std::string> write_result(const ExperimentResult& result, const std::string& dir);

nlohmann::ordered_json to_json(const LimitParameters& limits);
nlohmann::ordered_json to_json(const Check& check);

/// Identity and property suite on one problem (the library-level checks
/// behind the sinkhorn, operator, estimator and chaos modules).
std::vector<Check> verify(const Problem& problem, std::uint64_t seed = 1);

}  // namespace schro
