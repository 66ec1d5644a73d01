#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "schro/chaos.hpp"
#include "schro/error.hpp"
#include "schro/fixtures.hpp"
#include "schro/stats.hpp"

using namespace schro;

namespace {

const double e = std::exp(1.0);

struct Setup {
  SolvedProblem sp;
  FirstOrderKernels fk;
  SecondOrderKernels sk;
};

Setup setup(const Problem& p) {
  Setup s{solve(p), {}, {}};
  s.fk = first_order_kernels(s.sp.cost, s.sp.kernel, s.sp.ops);
  s.sk = second_order_kernels(s.sp.cost, s.sp.kernel, s.sp.ops, s.fk);
  return s;
}

SampleBatch random_batch(std::size_t n, std::size_t m0, std::size_t m1, Stream& rng) {
  SampleBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.x_idx.push_back(rng.next_u64() % m0);
    b.y_idx.push_back(rng.next_u64() % m1);
  }
  return b;
}

}  // namespace

TEST_CASE("constant eta has no chaos") {
  auto sp = solve(asym23());
  const Eigen::MatrixXd k = Eigen::MatrixXd::Constant(2, 2, 3.25);
  auto fk = first_order_kernels(k, sp.kernel, sp.ops);
  CHECK(fk.theta == doctest::Approx(3.25).epsilon(1e-14));
  CHECK(fk.kappa10.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(fk.kappa01.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(fk.sigma2 <= 1e-28);
  auto sk = second_order_kernels(k, sp.kernel, sp.ops, fk);
  CHECK(oracle::max_abs(sk.kappa20) <= 1e-14);
  CHECK(oracle::max_abs(sk.kappa02) <= 1e-14);
  CHECK(oracle::max_abs(sk.kappa11p) <= 1e-14);
  CHECK(std::fabs(sk.theta11p) <= 1e-14);
  CHECK(oracle::max_abs(gamma_coefficients(k, sp.kernel, sp.ops)) <= 1e-14);
}

TEST_CASE("sym2 first order vanishes") {
  auto s = setup(sym2());
  CHECK(std::fabs(s.fk.theta - 1 / (1 + e)) <= 1e-12);
  CHECK(s.fk.kappa10.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(s.fk.kappa01.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(s.fk.sigma2 <= 1e-20);
  Stream rng(1);
  for (int t = 0; t < 10; ++t)
    CHECK(std::fabs(first_chaos_value(random_batch(7, 2, 2, rng), s.fk)) <= 1e-12);
}

TEST_CASE("asym23 variance against a dense solve") {
  auto s = setup(asym23());
  const auto& k = s.sp.kernel;
  const Eigen::VectorXd w0 = k.rho0.weights(), w1 = k.rho1.weights();
  const double theta = s.sp.cost.cwiseProduct(k.mu).sum();
  const Eigen::MatrixXd r = (s.sp.cost.array() - theta).matrix().cwiseProduct(k.xi);
  const Eigen::VectorXd k10 = r * w1;
  const Eigen::VectorXd k01 = r.transpose() * w0;
  // A(y, x) = xi(x, y) rho0(x); A*(x, y) = xi(x, y) rho1(y)
  const Eigen::MatrixXd a = k.xi.transpose() * w0.asDiagonal();
  const Eigen::MatrixXd as = k.xi * w1.asDiagonal();
  const Eigen::MatrixXd ix = Eigen::MatrixXd::Identity(2, 2) - as * a;
  const Eigen::MatrixXd iy = Eigen::MatrixXd::Identity(2, 2) - a * as;
  const Eigen::VectorXd f = oracle::constrained_solve(ix, k10 - as * k01, w0);
  const Eigen::VectorXd g = oracle::constrained_solve(iy, k01 - a * k10, w1);
  const double sigma2 = f.cwiseAbs2().dot(w0) + g.cwiseAbs2().dot(w1);

  CHECK(s.fk.sigma2 > 1e-3);
  CHECK(std::fabs(s.fk.sigma2 - sigma2) <= 1e-10);
  CHECK(oracle::max_abs(s.fk.f_chaos - f) <= 1e-10);
  CHECK(oracle::max_abs(s.fk.g_chaos - g) <= 1e-10);
  CHECK(std::fabs(s.fk.kappa10.dot(w0)) <= 1e-10);
  CHECK(std::fabs(s.fk.kappa01.dot(w1)) <= 1e-10);
  CHECK(std::fabs(s.fk.sigma2 - (std::pow(s.sp.ops.norm0(s.fk.f_chaos), 2) +
                                 std::pow(s.sp.ops.norm1(s.fk.g_chaos), 2))) <= 1e-12);
  CHECK(std::fabs(sigma2_via_B(s.fk, s.sp.ops) - s.fk.sigma2) <= 1e-10);
}

TEST_CASE("first chaos two ways") {
  auto s = setup(asym23());
  Stream rng(2);
  for (int t = 0; t < 100; ++t) {
    auto b = random_batch(1 + t % 12, 2, 2, rng);
    CHECK(std::fabs(first_chaos_value(b, s.fk) - first_chaos_value_via_B(b, s.fk, s.sp.ops)) <=
          1e-10);
  }
  SampleBatch one;
  one.x_idx = {1};
  one.y_idx = {0};
  CHECK(first_chaos_value(one, s.fk) == doctest::Approx(s.fk.f_chaos(1) + s.fk.g_chaos(0)));
}

TEST_CASE("sym2 second-order kernels by hand") {
  auto s = setup(sym2());
  const double s1 = std::tanh(0.5);
  const auto& ops = s.sp.ops;
  const double theta = s.fk.theta;
  const Eigen::MatrixXd r = (s.sp.cost.array() - theta).matrix().cwiseProduct(s.sp.kernel.xi);
  Eigen::VectorXd a1 = ops.alpha().col(1), b1 = ops.beta().col(1);
  const double g11 = (r.cwiseProduct(a1 * b1.transpose()) * 0.25).sum();
  const Eigen::MatrixXd expect = (1 + s1 * s1) / std::pow(1 - s1 * s1, 2) * g11 * a1 * b1.transpose();
  CHECK(oracle::max_abs(s.sk.kappa11p - expect) <= 1e-12);
  CHECK(std::fabs(s.sk.theta11p - s.sk.kappa11p.cwiseProduct(s.sp.kernel.mu).sum()) <= 1e-14);

  const Eigen::MatrixXd gamma = gamma_coefficients(s.sp.cost, s.sp.kernel, ops);
  REQUIRE(gamma.rows() == 1);
  REQUIRE(gamma.cols() == 1);
  CHECK(std::fabs(gamma(0, 0) - g11) <= 1e-12);
  CHECK(std::fabs(gamma(0, 0) * gamma(0, 0) - std::pow(ops.norm01(r), 2)) <= 1e-12);
  CHECK(oracle::max_abs(s.sk.gamma - gamma) <= 1e-14);
}

TEST_CASE("gamma reconstructs eta xi") {
  auto sp = solve(sym2());
  const auto& ops = sp.ops;
  const double theta = sp.cost.cwiseProduct(sp.kernel.mu).sum();
  const Eigen::MatrixXd eta = sp.cost;
  const Eigen::MatrixXd gamma = gamma_coefficients(eta, sp.kernel, ops);
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(2, 2);
  coeff.bottomRightCorner(1, 1) = gamma;
  const Eigen::MatrixXd rebuilt = ops.from_coefficients(coeff) + theta * sp.kernel.xi;
  CHECK(oracle::max_abs(rebuilt - eta.cwiseProduct(sp.kernel.xi)) <= 1e-10);

  auto asym = solve(asym23());
  CHECK_THROWS_AS(gamma_coefficients(asym.cost, asym.kernel, asym.ops), Error);
}

TEST_CASE("degeneracy of the second-order kernels") {
  for (const auto& name : fixture_names()) {
    auto s = setup(fixture(name));
    const auto& w0 = s.sp.ops.rho0_weights();
    const auto& w1 = s.sp.ops.rho1_weights();
    CHECK(check_degenerate(w0, w0, s.sk.kappa20).max() <= 1e-9);
    CHECK(check_degenerate(w1, w1, s.sk.kappa02).max() <= 1e-9);
    CHECK(check_degenerate(w0, w1, s.sk.kappa11p).max() <= 1e-9);
    CHECK(check_degenerate(s.sp.kernel.mu, s.sk.kappa11p - s.sk.ell()).max() <= 1e-9);
    CHECK(check_degenerate(w0, w1, s.sk.eta_tilde.cwiseProduct(s.sp.kernel.xi)).max() <= 1e-9);
    CHECK(std::fabs(s.sk.theta11p - s.sk.kappa11p.cwiseProduct(s.sp.kernel.mu).sum()) <= 1e-12);
  }
}

TEST_CASE("kernel identities hold on both fixtures") {
  for (const auto& name : fixture_names()) {
    auto s = setup(fixture(name));
    auto r = kernel_identity_residuals(s.sk, s.sp.ops);
    CHECK(r.x_identity <= 1e-9);
    CHECK(r.y_identity <= 1e-9);
    CHECK(r.reconstruction <= 1e-9);
  }
}

TEST_CASE("reconstruction identity written out with T") {
  auto s = setup(asym23());
  const auto& ops = s.sp.ops;
  // (I0 (x) A)(I+T) k20 + (A* (x) I1)(I+T) k02 + (I+B) k11'
  const Eigen::MatrixXd t20 = s.sk.kappa20 + s.sk.kappa20.transpose();
  const Eigen::MatrixXd t02 = s.sk.kappa02 + s.sk.kappa02.transpose();
  const Eigen::MatrixXd lhs = t20 * ops.A().transpose() + ops.A_star() * t02 + s.sk.kappa11p +
                              ops.apply_B(s.sk.kappa11p);
  CHECK(oracle::max_abs(lhs - s.sk.eta_tilde.cwiseProduct(s.sp.kernel.xi)) <= 1e-9);
}

TEST_CASE("second chaos against a literal loop") {
  auto s = setup(asym23());
  const Eigen::MatrixXd ell = s.sk.ell();
  Stream rng(4);
  for (std::size_t n : {2u, 3u, 8u}) {
    auto b = random_batch(n, 2, 2, rng);
    CHECK(std::fabs(second_chaos_value(b, s.sk) -
                    oracle::second_chaos_loop(b.x_idx, b.y_idx, s.sk.kappa20, s.sk.kappa02,
                                              s.sk.kappa11p, ell)) <= 1e-12);
  }
  SampleBatch one;
  one.x_idx = {0};
  one.y_idx = {0};
  CHECK_THROWS_AS(second_chaos_value(one, s.sk), Error);
}

TEST_CASE("second chaos is symmetric and vanishes for zero kernels") {
  auto s = setup(asym23());
  SampleBatch b;
  b.x_idx = {0, 1, 1, 0, 1};
  b.y_idx = {1, 1, 0, 0, 1};
  const double v = second_chaos_value(b, s.sk);
  SampleBatch bx = b;
  bx.x_idx = {1, 0, 1, 1, 0};
  SampleBatch by = b;
  by.y_idx = {0, 1, 1, 1, 0};
  // the diagonal sum of an affine ell does not see the pairing
  CHECK(std::fabs(second_chaos_value(bx, s.sk) - v) <= 1e-12);
  CHECK(std::fabs(second_chaos_value(by, s.sk) - v) <= 1e-12);

  SecondOrderKernels z;
  z.kappa20 = Eigen::MatrixXd::Zero(2, 2);
  z.kappa02 = Eigen::MatrixXd::Zero(2, 2);
  z.kappa11p = Eigen::MatrixXd::Zero(2, 2);
  z.ell_x = Eigen::VectorXd::Zero(2);
  z.ell_y = Eigen::VectorXd::Zero(2);
  CHECK(second_chaos_value(b, z) == 0.0);
}

TEST_CASE("limit simulator: product of normals") {
  Eigen::MatrixXd g(1, 1);
  g << 1.0;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
  auto z = simulate_second_order_limit(g, s, 100000, 9);
  auto m = moments(z);
  CHECK(std::fabs(m.variance - 1.0) <= 0.02);
  CHECK(std::fabs(m.mean) <= 4 * std::sqrt(m.variance / 1e5));
}

TEST_CASE("limit simulator: single-term variance") {
  auto sp = solve(sym2());
  const Eigen::MatrixXd g = gamma_coefficients(sp.cost, sp.kernel, sp.ops);
  const double s1 = sp.ops.s_at(1);
  Eigen::VectorXd s(1);
  s << s1;
  auto z = simulate_second_order_limit(g, s, 1000000, 10);
  const double g2 = g(0, 0) * g(0, 0);
  const double var = g2 * (std::pow(1 + s1 * s1, 2) + 4 * s1 * s1) / std::pow(1 - s1 * s1, 4);
  auto m = moments(z);
  CHECK(std::fabs(m.variance / var - 1.0) <= 0.01);
  CHECK(std::fabs(m.mean) <= 4 * std::sqrt(var / 1e6));
}

TEST_CASE("limit draws do not depend on the thread count") {
  Eigen::MatrixXd g(2, 2);
  g << 0.4, -0.1, 0.3, 0.2;
  Eigen::VectorXd s(2);
  s << 0.5, 0.2;
  auto a = simulate_second_order_limit(g, s, 5000, 11, 1);
  auto b = simulate_second_order_limit(g, s, 5000, 11, 3);
  CHECK(a == b);
}

TEST_CASE("limit draw formula") {
  Eigen::MatrixXd g(1, 1);
  g << 2.0;
  Eigen::VectorXd s(1), u(1), v(1);
  s << 0.5;
  u << 1.5;
  v << -0.5;
  // g / (1 - s^2)^2 * (u v + s^2 u v - s (u^2 - 1) - s (v^2 - 1))
  const double expect =
      2.0 / (0.75 * 0.75) * (1.5 * -0.5 * 1.25 - 0.5 * (2.25 - 1) - 0.5 * (0.25 - 1));
  CHECK(second_order_limit_draw(g, s, u, v) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("U_N second moment") {
  auto s = setup(sym2());
  const auto& k = s.sp.kernel;
  const Eigen::VectorXd w0 = k.rho0.weights(), w1 = k.rho1.weights();
  const Eigen::MatrixXd h = s.sk.eta_tilde.cwiseProduct(k.xi);

  CHECK(u_n_variance_exact(Eigen::MatrixXd::Zero(2, 2), k.xi, w0, w1, 3) == 0.0);
  CHECK(u_n_variance_exact(h, k.xi, w0, w1, 1) ==
        doctest::Approx(h.cwiseAbs2().cwiseProduct(w0 * w1.transpose()).sum()).epsilon(1e-14));

  const double exact = u_n_variance_exact(h, k.xi, w0, w1, 3);
  CHECK(std::fabs(exact - oracle::u_n_second_moment(h, k.xi, w0, w1, 3)) <= 1e-10);
  CHECK(std::fabs(u_n_second_moment_direct(h, k.xi, w0, w1, 3) - exact) <= 1e-10);

  CHECK_THROWS_AS(u_n_variance_exact(h, k.xi, w0, w1, 5), Error);
}

TEST_CASE("U_N formula on asym23 and a random degenerate kernel") {
  auto s = setup(asym23());
  const auto& k = s.sp.kernel;
  const Eigen::VectorXd w0 = k.rho0.weights(), w1 = k.rho1.weights();
  const Eigen::MatrixXd h = s.sk.eta_tilde.cwiseProduct(k.xi);
  for (std::size_t n = 1; n <= 4; ++n) {
    CHECK(std::fabs(u_n_variance_exact(h, k.xi, w0, w1, n) -
                    oracle::u_n_second_moment(h, k.xi, w0, w1, n)) <= 1e-10);
  }
}

TEST_CASE("U_N variance stays under the cycle bound") {
  for (const auto& name : fixture_names()) {
    auto s = setup(fixture(name));
    const auto& k = s.sp.kernel;
    const auto& ops = s.sp.ops;
    const Eigen::VectorXd w0 = k.rho0.weights(), w1 = k.rho1.weights();
    const Eigen::MatrixXd h = s.sk.eta_tilde.cwiseProduct(k.xi);
    const double vs0 = ops.norm01((k.xi.array() - 1.0).matrix());
    const double vs = ops.norm01(h);
    for (std::size_t n = 1; n <= 4; ++n) {
      CHECK(u_n_variance_exact(h, k.xi, w0, w1, n) <=
            u_n_variance_bound(ops.s_at(1), vs0, vs, n) * (1 + 1e-12));
    }
  }
}

TEST_CASE("cycle generating function") {
  for (std::size_t r = 1; r <= 8; ++r) CHECK(cycle_mgf(r, 1.0) == doctest::Approx(1.0));
  for (double u : {0.3, 2.0, 5.0}) CHECK(cycle_mgf(2, u) == doctest::Approx((u * u + u) / 2));
  for (std::size_t r = 1; r <= 6; ++r)
    for (double u : {2.0, 3.0}) CHECK(cycle_mgf(r, u) == doctest::Approx(oracle::cycle_mean(r, u)).epsilon(1e-14));
}

TEST_CASE("Hoeffding expansion base cases") {
  CHECK(hoeffding_expansion({}) == 1.0);
  CHECK(hoeffding_expansion({2.5}) == doctest::Approx(2.5));
  CHECK(hoeffding_expansion({2.0, 3.0}) == doctest::Approx(6.0));
}
