#include <benchmark/benchmark.h>

#include "schro/estimator.hpp"
#include "schro/fixtures.hpp"
#include "schro/permanent.hpp"
#include "schro/sinkhorn.hpp"

namespace {

Eigen::MatrixXd positive_matrix(Eigen::Index n, std::uint64_t seed) {
  schro::Stream rng(seed);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = 0.1 + rng.uniform();
  return m;
}

void BM_Permanent(benchmark::State& state) {
  const Eigen::MatrixXd w = positive_matrix(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(schro::permanent(w).log());
}
BENCHMARK(BM_Permanent)->DenseRange(8, 16, 4);

void BM_Sinkhorn(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  std::vector<schro::Point> atoms;
  for (Eigen::Index i = 0; i < m; ++i) atoms.push_back({static_cast<double>(i) / m});
  const auto rho = schro::uniform_measure(atoms);
  const Eigen::MatrixXd c = schro::cost_matrix(schro::CostSpec::squared_euclidean(), rho, rho);
  for (auto _ : state) benchmark::DoNotOptimize(schro::solve_bridge(rho, rho, c, 0.1).second);
}
BENCHMARK(BM_Sinkhorn)->Arg(2)->Arg(16)->Arg(64);

void BM_TN(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sp = schro::solve(schro::asym23());
  schro::Stream rng(11, 0, n);
  const auto batch = schro::sample_product(sp.problem.rho0, sp.problem.rho1, n, rng);
  const Eigen::MatrixXd cs = schro::sample_matrix(sp.cost, batch);
  const auto pot = schro::sample_potentials(sp.kernel, batch);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        schro::estimate(cs, cs, sp.problem.eps, schro::EstimatorMethod::Auto, pot).t_n);
  }
}
BENCHMARK(BM_TN)->Arg(6)->Arg(10)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
