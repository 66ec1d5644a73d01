#include <algorithm>
#include <cmath>
#include <numeric>

#include "schro/error.hpp"
#include "schro/harness.hpp"
#include "schro/sampling.hpp"

namespace schro {

namespace {

Check at_most(std::string name, double value, double tol) {
  return {std::move(name), value, tol, std::isfinite(value) && value <= tol};
}

Eigen::VectorXd random_mean_zero(const Eigen::VectorXd& w, Stream& rng) {
  Eigen::VectorXd f(w.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.normal();
  return (f.array() - f.dot(w)).matrix();
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::vector<Check> verify(const Problem& problem, std::uint64_t seed) {
  std::vector<Check> out;
  const SolvedProblem sp = solve(problem);
  const GibbsKernel& k = sp.kernel;
  const BridgeOperators& ops = sp.ops;
  const Eigen::VectorXd& w0 = ops.rho0_weights();
  const Eigen::VectorXd& w1 = ops.rho1_weights();
  const Eigen::Index m0 = ops.m0();
  const Eigen::Index m1 = ops.m1();

  // bridge
  out.push_back(at_most("sinkhorn: marginal residual", k.marginal_residual(), 1e-12));
  if (problem.name == "sym2") {
    const double e = std::exp(1.0);
    Eigen::MatrixXd closed(2, 2);
    closed << 2 * e / (1 + e), 2 / (1 + e), 2 / (1 + e), 2 * e / (1 + e);
    out.push_back(at_most("sinkhorn: closed-form xi", max_abs(k.xi - closed), 1e-12));
  }

  // operator axioms
  out.push_back(at_most("operators: A1 = 1",
                        max_abs(ops.apply_A(Eigen::VectorXd::Ones(m0)).array() - 1.0), 1e-10));
  out.push_back(at_most("operators: A*1 = 1",
                        max_abs(ops.apply_A_star(Eigen::VectorXd::Ones(m1)).array() - 1.0),
                        1e-10));
  out.push_back(at_most("operators: s0 = 1", std::fabs(ops.s()(0) - 1.0), 1e-10));
  out.push_back(at_most("operators: alpha0 = 1", max_abs(ops.alpha().col(0).array() - 1.0), 1e-10));
  out.push_back(at_most("operators: beta0 = 1", max_abs(ops.beta().col(0).array() - 1.0), 1e-10));
  out.push_back(at_most(
      "operators: alpha orthonormal",
      max_abs(ops.alpha().transpose() * w0.asDiagonal() * ops.alpha() -
              Eigen::MatrixXd::Identity(m0, m0)),
      1e-10));
  out.push_back(at_most(
      "operators: beta orthonormal",
      max_abs(ops.beta().transpose() * w1.asDiagonal() * ops.beta() -
              Eigen::MatrixXd::Identity(m1, m1)),
      1e-10));
  double sv = 0.0;
  for (Eigen::Index i = 0; i < std::min(m0, m1); ++i) {
    sv = std::max(sv, max_abs(ops.apply_A(ops.alpha().col(i)) - ops.s()(i) * ops.beta().col(i)));
    sv = std::max(sv,
                  max_abs(ops.apply_A_star(ops.beta().col(i)) - ops.s()(i) * ops.alpha().col(i)));
  }
  out.push_back(at_most("operators: A alpha_k = s_k beta_k", sv, 1e-10));
  if (problem.name == "sym2") {
    out.push_back(at_most("operators: s1 = tanh(1/2)", std::fabs(ops.s()(1) - std::tanh(0.5)),
                          1e-12));
  }

  // conditional-expectation and (I + B)^{-1} identities
  double cond_x = 0.0;
  double cond_y = 0.0;
  double ipb = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    Stream rng(seed, t, 1);
    const Eigen::VectorXd f = random_mean_zero(w0, rng);
    const Eigen::VectorXd g = random_mean_zero(w1, rng);
    const Eigen::VectorXd fx = ops.solve_resolvent_x(f - ops.apply_A_star(g));
    const Eigen::VectorXd gy = ops.solve_resolvent_y(g - ops.apply_A(f));
    cond_x = std::max(cond_x, max_abs(fx + ops.apply_A_star(gy) - f));
    cond_y = std::max(cond_y, max_abs(gy + ops.apply_A(fx) - g));
    ipb = std::max(ipb, max_abs(ops.solve_I_plus_B(direct_sum(f, g)) - direct_sum(fx, gy)));
  }
  out.push_back(at_most("identities: conditional expectation (x)", cond_x, 1e-10));
  out.push_back(at_most("identities: conditional expectation (y)", cond_y, 1e-10));
  out.push_back(at_most("identities: (I+B)^-1 of a direct sum", ipb, 1e-10));

  // second-order identities with eta = c
  const FirstOrderKernels fk = first_order_kernels(sp.cost, k, ops);
  const SecondOrderKernels sk = second_order_kernels(sp.cost, k, ops, fk);
  const KernelIdentityResiduals l8 = kernel_identity_residuals(sk, ops);
  out.push_back(at_most("second order: x identity", l8.x_identity, 1e-9));
  out.push_back(at_most("second order: y identity", l8.y_identity, 1e-9));
  out.push_back(at_most("second order: reconstruction", l8.reconstruction, 1e-9));

  // estimator equivalence
  double rel = 0.0;
  double stoch = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 6;
    Stream rng(seed, t, 2);
    const SampleBatch b = sample_product(problem.rho0, problem.rho1, n, rng);
    const Eigen::MatrixXd c = sample_matrix(sp.cost, b);
    const BridgeEstimate brute = t_n_brute(c, c, k.eps);
    const BridgeEstimate perm = t_n_permanent(c, c, k.eps);
    const double scale = std::max(std::fabs(brute.t_n), 1e-300);
    rel = std::max(rel, std::fabs(perm.t_n - brute.t_n) / scale);
    const Eigen::MatrixXd nm = static_cast<double>(n) * perm.coupling;
    stoch = std::max({stoch, max_abs(nm.rowwise().sum().array() - 1.0),
                      max_abs(nm.colwise().sum().array() - 1.0)});
  }
  out.push_back(at_most("estimator: permanent vs brute (relative)", rel, 1e-10));
  out.push_back(at_most("estimator: N * coupling doubly stochastic", stoch, 1e-8));

  // product identity on random 6 x 6 matrices
  double hoeff = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Stream rng(seed, t, 3);
    Eigen::MatrixXd x(6, 6);
    for (Eigen::Index i = 0; i < 36; ++i) x(i) = 0.2 + 1.8 * rng.uniform();
    std::vector<std::size_t> sigma(6);
    std::iota(sigma.begin(), sigma.end(), std::size_t{0});
    for (std::size_t i = 5; i > 0; --i) {
      std::swap(sigma[i], sigma[static_cast<std::size_t>(rng.next_u64() % (i + 1))]);
    }
    for (unsigned mask = 0; mask < 64; ++mask) {
      std::vector<double> factors;
      double direct = 1.0;
      for (std::size_t i = 0; i < 6; ++i) {
        if (mask >> i & 1u) {
          const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sigma[i]));
          factors.push_back(v);
          direct *= v;
        }
      }
      hoeff = std::max(hoeff, std::fabs(hoeffding_expansion(factors) - direct) / direct);
    }
  }
  out.push_back(at_most("hoeffding: product identity (relative)", hoeff, 1e-10));

  // U_N second moment, N = 3
  if (m0 * m1 <= 16) {
    const Eigen::MatrixXd h = sk.eta_tilde.cwiseProduct(k.xi);
    const double exact = u_n_variance_exact(h, k.xi, w0, w1, 3);
    const double direct = u_n_second_moment_direct(h, k.xi, w0, w1, 3);
    out.push_back(at_most("U_N variance: formula vs enumeration", std::fabs(exact - direct), 1e-10));
    const double bound = u_n_variance_bound(ops.s_at(1), ops.norm01((k.xi.array() - 1.0).matrix()),
                                            ops.norm01(h), 3);
    out.push_back({"U_N variance: below the cycle bound", exact, bound, exact <= bound * (1 + 1e-12)});
  }
  return out;
}

}  // namespace schro
