#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "schro/error.hpp"
#include "schro/harness.hpp"
#include "schro/stats.hpp"

using namespace schro;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("schro_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(const Problem& p, std::vector<std::size_t> n, std::size_t reps = 200) {
  ExperimentConfig c;
  c.problem = p;
  c.n_values = std::move(n);
  c.replicates = reps;
  c.seed = 5;
  return c;
}

Problem zero_cost() {
  Problem p = asym23();
  p.name = "zero";
  p.cost = CostSpec::explicit_matrix(Eigen::MatrixXd::Zero(2, 2));
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small(asym23(), {6});
  c.replicates = 99;
  CHECK_THROWS_AS(validate(c), Error);
  c = small(asym23(), {17});
  CHECK_THROWS_AS(validate(c), Error);
  c = small(asym23(), {9});
  c.method = EstimatorMethod::Brute;
  CHECK_THROWS_AS(validate(c), Error);
  c = small(asym23(), {6});
  c.eta = EtaChoice::CustomMatrix;
  c.eta_matrix = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(validate(c), Error);
  c.eta_matrix = Eigen::MatrixXd::Zero(2, 2);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("clt on asym23 records the scaled statistic") {
  auto c = small(asym23(), {4, 8});
  auto r = run_clt(c);
  REQUIRE(r.per_n.size() == 2);
  CHECK(r.limits.sigma2 > 0.0);
  for (const auto& p : r.per_n) {
    REQUIRE(p.t_n.size() == c.replicates);
    REQUIRE(p.statistic.size() == c.replicates);
    for (std::size_t i = 0; i < p.t_n.size(); ++i) {
      CHECK(std::isfinite(p.t_n[i]));
      CHECK(std::isfinite(p.l_n[i]));
      CHECK(p.statistic[i] == doctest::Approx(std::sqrt(double(p.n)) * (p.t_n[i] - r.limits.theta)));
    }
  }
  CHECK(r.checks.size() == 4);
  CHECK_THROWS_AS(run_clt(small(sym2(), {6})), Error);
}

TEST_CASE("high temperature theta") {
  Problem p = asym23();
  p.eps = 1e6;
  auto sp = solve(p);
  auto l = limit_parameters(sp, sp.cost);
  const Eigen::MatrixXd prod = p.rho0.weights() * p.rho1.weights().transpose();
  CHECK(std::fabs(l.theta - sp.cost.cwiseProduct(prod).sum()) <= 1e-6);
}

TEST_CASE("second order refuses a non-degenerate statistic") {
  try {
    run_second_order(small(asym23(), {6}));
    FAIL("expected NotDegenerateFirstOrder");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotDegenerateFirstOrder);
  }
  try {
    run_clt(small(sym2(), {6}));
    FAIL("expected DegenerateVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateVariance);
  }
}

TEST_CASE("second order with constant eta records zeros") {
  auto c = small(sym2(), {6});
  c.eta = EtaChoice::CustomMatrix;
  c.eta_matrix = Eigen::MatrixXd::Constant(2, 2, 0.8);
  auto r = run_second_order(c);
  for (double v : r.per_n[0].statistic) CHECK(std::fabs(v) <= 1e-12);
}

TEST_CASE("second order statistic and remainder definitions") {
  auto c = small(sym2(), {6});
  auto r = run_second_order(c);
  const auto& p = r.per_n[0];
  for (std::size_t i = 0; i < p.t_n.size(); ++i) {
    CHECK(p.statistic[i] == doctest::Approx(6 * (p.t_n[i] - r.limits.theta) + r.limits.theta11p));
    CHECK(p.remainder[i] == doctest::Approx(6 * (p.t_n[i] - r.limits.theta - p.second_chaos[i])));
  }
  CHECK(r.summary["reference_draws"] == 2000);
}

TEST_CASE("remainder decay slope is undefined for constant eta") {
  auto c = small(asym23(), {4, 6});
  c.eta = EtaChoice::CustomMatrix;
  c.eta_matrix = Eigen::MatrixXd::Constant(2, 2, -1.0);
  auto r = run_remainder_decay(c);
  const bool undefined = r.summary["slope"].is_null() || std::isnan(r.summary["slope"].get<double>());
  CHECK(undefined);
  CHECK(r.summary["slope_defined"] == false);
  CHECK(r.checks.empty());
  for (const auto& p : r.per_n)
    for (double v : p.remainder) CHECK(std::fabs(v) <= 1e-12);
  CHECK_THROWS_AS(run_remainder_decay(small(asym23(), {3, 6})), Error);
}

TEST_CASE("remainder slope is stable when replicates double") {
  auto c = small(asym23(), {4, 6, 8, 10, 12}, 5000);
  c.seed = 21;
  auto a = run_remainder_decay(c);
  c.replicates = 10000;
  auto b = run_remainder_decay(c);
  const double sa = a.summary["slope"].get<double>();
  const double sb = b.summary["slope"].get<double>();
  CHECK(std::fabs(sa - sb) < 0.1);
}

TEST_CASE("unbiasedness") {
  auto c = small(sym2(), {1, 4}, 2000);
  auto r = run_unbiasedness(c);
  CHECK(r.source == SampleSource::Bridge);
  CHECK(r.passed());
  // N = 1: T_1 = eta(X_1, Y_1)
  const auto& one = r.per_n[0];
  for (double t : one.t_n) CHECK((t == 0.0 || t == 1.0));

  c.source = SampleSource::Product;
  auto prod = run_unbiasedness(c);
  CHECK(prod.checks.empty());
  CHECK(prod.per_n[0].summary.contains("bias"));
}

TEST_CASE("compare with cuturi") {
  auto c = small(asym23(), {1, 10});
  auto r = run_compare_with_cuturi(c);
  REQUIRE(r.per_n.size() == 2);
  for (double d : r.per_n[0].statistic) CHECK(std::fabs(d) <= 1e-12);
  REQUIRE(r.per_n[1].extra.size() == 3);
  CHECK(r.per_n[1].summary.contains("difference"));
  CHECK(r.checks.empty());

  auto z = run_compare_with_cuturi(small(zero_cost(), {5}));
  for (double d : z.per_n[0].statistic) CHECK(std::fabs(d) <= 1e-12);

  CHECK_THROWS_AS(run_compare_with_cuturi(small(asym23(), {15})), Error);
}

TEST_CASE("consistency: median error falls with N") {
  auto c = small(asym23(), {4, 8, 12, 16}, 200);
  c.source = SampleSource::Product;
  auto r = run_unbiasedness(c);
  std::vector<double> med, mae;
  for (const auto& p : r.per_n) {
    std::vector<double> err;
    for (double t : p.t_n) err.push_back(std::fabs(t - r.limits.theta));
    mae.push_back(moments(err).mean);
    std::sort(err.begin(), err.end());
    med.push_back(0.5 * (err[99] + err[100]));
  }
  int inversions = 0;
  for (std::size_t i = 1; i < med.size(); ++i) inversions += med[i] >= med[i - 1];
  CHECK(inversions <= 1);
  int mae_inversions = 0;
  for (std::size_t i = 1; i < mae.size(); ++i)
    if (mae[i] >= mae[i - 1]) {
      ++mae_inversions;
      CHECK(mae[i] <= 1.05 * mae[i - 1]);
    }
  CHECK(mae_inversions <= 1);
}

TEST_CASE("outputs are byte identical across reruns and thread counts") {
  auto c = small(asym23(), {6, 9}, 100);
  c.seed = 77;
  c.threads = 1;
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  auto fa = write_result(run_clt(c), a.string());
  c.threads = 4;
  auto fb = write_result(run_clt(c), b.string());
  REQUIRE(fa.size() == fb.size());
  REQUIRE(fa.size() == 5);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fs::path(fa[i]).filename() == fs::path(fb[i]).filename());
    CHECK(slurp(fa[i]) == slurp(fb[i]));
  }
  CHECK(fs::exists(a / "clt_asym23_6_77.json"));
  CHECK(fs::exists(a / "clt_asym23_9_77.csv"));
  CHECK(fs::exists(a / "clt_asym23_summary_77.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("summary carries the limit parameters") {
  auto c = small(sym2(), {6}, 100);
  const fs::path d = scratch("limits");
  write_result(run_second_order(c), d.string());
  auto j = nlohmann::json::parse(slurp(d / "second-order_sym2_summary_5.json"));
  CHECK(j["limits"]["theta"].get<double>() == doctest::Approx(1 / (1 + std::exp(1.0))));
  CHECK(j["limits"]["s"][0].get<double>() == doctest::Approx(std::tanh(0.5)));
  CHECK(j["limits"]["gamma"].size() == 1);
  CHECK(j["limits"].contains("theta11p"));
  CHECK(j["limits"].contains("sigma2"));
  std::ifstream csv(d / "second-order_sym2_6_5.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "replicate,t_n,l_n,statistic,first_chaos,second_chaos,remainder");
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 100);
  fs::remove_all(d);
}

TEST_CASE("ks distance") {
  Stream rng(3);
  std::vector<double> x(10000);
  for (double& v : x) v = rng.normal();
  CHECK(ks_distance(x, [](double t) { return normal_cdf(t); }) <= 1.63 / 100 * 1.5);
  // one atom at a: max(F(a), 1 - F(a-))
  const double a = 0.3;
  CHECK(ks_distance({a, a, a}, [](double t) { return normal_cdf(t); }) ==
        doctest::Approx(std::max(normal_cdf(a), 1 - normal_cdf(a))));
  CHECK_THROWS_AS(ks_distance({}, [](double t) { return t; }), Error);
  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), Error);
}

TEST_CASE("two-sample ks with ties") {
  CHECK(ks_two_sample({0, 0, 1, 1}, {0, 1}) == doctest::Approx(0.0));
  CHECK(ks_two_sample({0, 0, 0, 1}, {0, 1}) == doctest::Approx(0.25));
  CHECK(ks_two_sample({0, 1}, {2, 3}) == doctest::Approx(1.0));
}

TEST_CASE("moments and slope") {
  auto m = moments({1, 2, 3, 4});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(5.0 / 3.0));
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(ls_slope({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0));
  CHECK(std::isnan(ls_slope({1, 1}, {2, 3})));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.0, 1.0, 2.0) == doctest::Approx(0.5));
}
