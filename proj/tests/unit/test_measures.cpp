#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "schro/error.hpp"
#include "schro/fixtures.hpp"
#include "schro/measures.hpp"
#include "schro/sampling.hpp"
#include "schro/sinkhorn.hpp"

using namespace schro;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("make normalizes weights") {
  auto m = DiscreteMeasure::make({{0.0}, {1.0}}, {1.0, 1.0});
  CHECK(m.weight(0) == 0.5);
  CHECK(m.weight(1) == 0.5);
}

TEST_CASE("already normalized weights are kept bit for bit") {
  auto m = DiscreteMeasure::make({{0.0}, {1.0}}, {0.3, 0.7});
  CHECK(m.weight(0) == 0.3);
  CHECK(m.weight(1) == 0.7);
}

TEST_CASE("make rejects bad input") {
  CHECK(kind_of([] { DiscreteMeasure::make({{0.0}, {0.0}}, {0.5, 0.5}); }) ==
        ErrorKind::DuplicateAtom);
  CHECK(kind_of([] { DiscreteMeasure::make({}, {}); }) == ErrorKind::EmptySupport);
  CHECK(kind_of([] { DiscreteMeasure::make({{0.0}, {1.0}}, {1.0, 0.0}); }) ==
        ErrorKind::NonpositiveWeight);
  CHECK(kind_of([] { DiscreteMeasure::make({{0.0}, {1.0}}, {1.0, -1.0}); }) ==
        ErrorKind::NonpositiveWeight);
  CHECK(kind_of([] { DiscreteMeasure::make({{0.0}, {1.0}}, {1.0}); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { DiscreteMeasure::make({{0.0}, {1.0, 2.0}}, {1.0, 1.0}); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("normalized weights sum to one") {
  auto m = DiscreteMeasure::make({{0.0}, {1.0}, {2.0}}, {1.0, 1.0, 1.0});
  CHECK(std::fabs(m.weights().sum() - 1.0) <= 1e-12);
}

TEST_CASE("cost matrices") {
  auto r01 = uniform_measure({{0.0}, {1.0}});
  Eigen::MatrixXd c = cost_matrix(CostSpec::squared_euclidean(), r01, r01);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 1.0);
  CHECK(c(1, 0) == 1.0);
  CHECK(c(1, 1) == 0.0);

  auto r02 = uniform_measure({{0.0}, {2.0}});
  auto r1 = uniform_measure({{1.0}});
  Eigen::MatrixXd d = cost_matrix(CostSpec::euclidean_power(1.0), r02, r1);
  CHECK(d.rows() == 2);
  CHECK(d.cols() == 1);
  CHECK(d(0, 0) == doctest::Approx(1.0));
  CHECK(d(1, 0) == doctest::Approx(1.0));

  Eigen::MatrixXd bad(2, 2);
  bad << 0, -1, 1, 0;
  CHECK(kind_of([&] { cost_matrix(CostSpec::explicit_matrix(bad), r01, r01); }) ==
        ErrorKind::NegativeCost);
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(3, 2);
  CHECK(kind_of([&] { cost_matrix(CostSpec::explicit_matrix(wrong), r01, r01); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("2-d squared distance") {
  auto a = uniform_measure({{0.0, 0.0}, {1.0, 1.0}});
  auto b = uniform_measure({{0.0, 1.0}});
  Eigen::MatrixXd c = cost_matrix(CostSpec::squared_euclidean(), a, b);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK(c(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("point mass samples are deterministic") {
  auto m = DiscreteMeasure::make({{3.0}}, {1.0});
  Stream rng(5);
  CHECK(sample(m, 5, rng) == std::vector<std::size_t>(5, 0));
}

TEST_CASE("fair coin frequency") {
  auto m = uniform_measure({{0.0}, {1.0}});
  Stream rng(12345);
  auto idx = sample(m, 1000000, rng);
  double zeros = 0;
  for (auto i : idx) zeros += i == 0 ? 1.0 : 0.0;
  CHECK(std::fabs(zeros / 1e6 - 0.5) <= 0.002);
}

TEST_CASE("sampling repeats under the same seed") {
  auto m = DiscreteMeasure::make({{0.0}, {1.0}, {2.0}}, {0.2, 0.5, 0.3});
  Stream a(99, 3), b(99, 3), c(99, 4);
  auto sa = sample(m, 1000, a);
  auto sb = sample(m, 1000, b);
  auto sc = sample(m, 1000, c);
  CHECK(sa == sb);
  CHECK(sa != sc);
}

TEST_CASE("every atom frequency within four sigma") {
  auto m = DiscreteMeasure::make({{0.0}, {1.0}, {2.0}, {3.0}}, {0.1, 0.2, 0.3, 0.4});
  Stream rng(2024);
  const std::size_t n = 100000;
  auto idx = sample(m, n, rng);
  std::vector<double> counts(4, 0.0);
  for (auto i : idx) counts[i] += 1.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double w = m.weight(k);
    CHECK(std::fabs(counts[k] / n - w) <= 4.0 * std::sqrt(w * (1 - w) / n));
  }
}

TEST_CASE("product batches draw x and y independently") {
  auto p = asym23();
  Stream rng(1);
  auto b = sample_product(p.rho0, p.rho1, 200000, rng);
  CHECK(b.source == SampleSource::Product);
  CHECK(b.size() == 200000);
  double n00 = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    nx += b.x_idx[i] == 0;
    ny += b.y_idx[i] == 0;
    n00 += b.x_idx[i] == 0 && b.y_idx[i] == 0;
  }
  const double n = 200000;
  CHECK(std::fabs(ny / n - 0.3) <= 4 * std::sqrt(0.21 / n));
  CHECK(std::fabs(n00 / n - 0.15) <= 4 * std::sqrt(0.15 * 0.85 / n));
  CHECK(std::fabs(nx / n - 0.5) <= 4 * std::sqrt(0.25 / n));
}

TEST_CASE("sample_matrix gathers table entries") {
  Eigen::MatrixXd t(2, 3);
  t << 1, 2, 3, 4, 5, 6;
  SampleBatch b;
  b.x_idx = {1, 0};
  b.y_idx = {2, 0};
  Eigen::MatrixXd s = sample_matrix(t, b);
  CHECK(s(0, 0) == 6);
  CHECK(s(0, 1) == 4);
  CHECK(s(1, 0) == 3);
  CHECK(s(1, 1) == 1);
}

TEST_CASE("bridge sampling with a zero cost is the product law") {
  auto rho0 = DiscreteMeasure::make({{0.0}, {1.0}}, {0.4, 0.6});
  auto rho1 = DiscreteMeasure::make({{0.0}, {1.0}, {2.0}}, {0.2, 0.3, 0.5});
  auto [k, rep] = solve_bridge(rho0, rho1, Eigen::MatrixXd::Zero(2, 3), 1.0);
  Stream rng(8);
  const std::size_t n = 200000;
  auto b = sample_bridge(k, n, rng);
  CHECK(b.source == SampleSource::Bridge);
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(2, 3);
  for (std::size_t i = 0; i < n; ++i) freq(b.x_idx[i], b.y_idx[i]) += 1.0 / n;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const double p = rho0.weight(i) * rho1.weight(j);
      CHECK(std::fabs(freq(i, j) - p) <= 4 * std::sqrt(p * (1 - p) / n));
    }
}

TEST_CASE("bridge sampling on sym2 hits mu00") {
  auto sp = solve(sym2());
  Stream rng(77);
  const std::size_t n = 1000000;
  auto b = sample_bridge(sp.kernel, n, rng);
  double n00 = 0;
  for (std::size_t i = 0; i < n; ++i) n00 += b.x_idx[i] == 0 && b.y_idx[i] == 0;
  // mu00 = xi00 / 4 with xi00 = 2e / (1 + e)
  const double e = std::exp(1.0);
  const double mu00 = e / (2 * (1 + e));
  CHECK(std::fabs(n00 / n - mu00) <= 3 * std::sqrt(mu00 * (1 - mu00) / n));
}

TEST_CASE("bridge batch of one") {
  auto sp = solve(asym23());
  Stream rng(3);
  auto b = sample_bridge(sp.kernel, 1, rng);
  REQUIRE(b.size() == 1);
  CHECK(b.x_idx[0] < 2);
  CHECK(b.y_idx[0] < 2);
}
