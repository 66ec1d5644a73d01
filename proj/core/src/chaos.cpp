#include "schro/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "schro/error.hpp"
#include "schro/parallel.hpp"
#include "schro/rng.hpp"

namespace schro {

namespace {

constexpr double kFirstOrderZeroTol = 1e-10;

Eigen::Index at(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_eta(const Eigen::MatrixXd& eta, const GibbsKernel& kernel) {
  if (eta.rows() != kernel.xi.rows() || eta.cols() != kernel.xi.cols()) {
    throw Error(ErrorKind::InvalidArgument, "eta must be m0 x m1");
  }
  if (!eta.allFinite()) throw Error(ErrorKind::InvalidArgument, "eta has non-finite entries");
}

void check_batch(const SampleBatch& batch, Eigen::Index m0, Eigen::Index m1) {
  if (batch.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty batch");
  if (batch.y_idx.size() != batch.x_idx.size()) {
    throw Error(ErrorKind::InvalidArgument, "batch x and y lengths differ");
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (at(batch.x_idx[i]) >= m0 || at(batch.y_idx[i]) >= m1) {
      throw Error(ErrorKind::InvalidArgument, "batch index out of range");
    }
  }
}

}  // namespace

FirstOrderKernels first_order_kernels(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                      const BridgeOperators& ops) {
  check_eta(eta, kernel);
  FirstOrderKernels fk;
  fk.theta = eta.cwiseProduct(kernel.mu).sum();
  const Eigen::MatrixXd centred = (eta.array() - fk.theta).matrix().cwiseProduct(kernel.xi);
  fk.kappa10 = centred * ops.rho1_weights();
  fk.kappa01 = centred.transpose() * ops.rho0_weights();
  fk.f_chaos = ops.solve_resolvent_x(fk.kappa10 - ops.apply_A_star(fk.kappa01));
  fk.g_chaos = ops.solve_resolvent_y(fk.kappa01 - ops.apply_A(fk.kappa10));
  const double nf = ops.norm0(fk.f_chaos);
  const double ng = ops.norm1(fk.g_chaos);
  fk.sigma2 = nf * nf + ng * ng;
  return fk;
}

double first_chaos_value(const SampleBatch& batch, const FirstOrderKernels& fk) {
  check_batch(batch, fk.f_chaos.size(), fk.g_chaos.size());
  double s = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    s += fk.f_chaos(at(batch.x_idx[i])) + fk.g_chaos(at(batch.y_idx[i]));
  }
  return s / static_cast<double>(batch.size());
}

double first_chaos_value_via_B(const SampleBatch& batch, const FirstOrderKernels& fk,
                               const BridgeOperators& ops) {
  check_batch(batch, ops.m0(), ops.m1());
  const Eigen::MatrixXd h = ops.solve_I_plus_B(direct_sum(fk.kappa10, fk.kappa01));
  double s = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) s += h(at(batch.x_idx[i]), at(batch.y_idx[i]));
  return s / static_cast<double>(batch.size());
}

double sigma2_via_B(const FirstOrderKernels& fk, const BridgeOperators& ops) {
  const double n = ops.norm01(ops.solve_I_plus_B(direct_sum(fk.kappa10, fk.kappa01)));
  return n * n;
}

Eigen::MatrixXd SecondOrderKernels::ell() const {
  return (direct_sum(ell_x, ell_y).array() + ell_const).matrix();
}

SecondOrderKernels second_order_kernels(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                        const BridgeOperators& ops, const FirstOrderKernels& fk) {
  check_eta(eta, kernel);
  SecondOrderKernels sk;
  sk.eta_tilde = (eta.array() - fk.theta).matrix() - direct_sum(fk.f_chaos, fk.g_chaos);
  const Eigen::MatrixXd h = sk.eta_tilde.cwiseProduct(kernel.xi);
  const Eigen::MatrixXd g = ops.solve_C(h);  // throws NotDegenerate

  sk.kappa20 = -g * ops.A_star().transpose();
  sk.kappa02 = -ops.A() * g;
  sk.kappa11p = g + ops.apply_B(g);
  sk.theta11p = sk.kappa11p.cwiseProduct(kernel.mu).sum();

  // Same centring that produced eta_tilde, now applied to kappa11p.
  const FirstOrderKernels corr = first_order_kernels(sk.kappa11p, kernel, ops);
  sk.ell_const = corr.theta;
  sk.ell_x = corr.f_chaos;
  sk.ell_y = corr.g_chaos;

  const Eigen::MatrixXd coeff = ops.coefficients(h);
  sk.gamma = coeff.bottomRightCorner(coeff.rows() - 1, coeff.cols() - 1);
  return sk;
}

double second_chaos_value(const SampleBatch& batch, const SecondOrderKernels& sk) {
  const std::size_t n = batch.size();
  if (n < 2) throw Error(ErrorKind::BatchTooSmall, "second chaos needs N >= 2");
  check_batch(batch, sk.kappa11p.rows(), sk.kappa11p.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index xi = at(batch.x_idx[i]);
    const Eigen::Index yi = at(batch.y_idx[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::Index xj = at(batch.x_idx[j]);
      const Eigen::Index yj = at(batch.y_idx[j]);
      if (i != j) s += sk.kappa20(xi, xj) + sk.kappa02(yi, yj);
      s += sk.kappa11p(xi, yj);
    }
    s -= sk.ell_const + sk.ell_x(xi) + sk.ell_y(yi);
  }
  return s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

Eigen::MatrixXd gamma_coefficients(const Eigen::MatrixXd& eta, const GibbsKernel& kernel,
                                   const BridgeOperators& ops) {
  const FirstOrderKernels fk = first_order_kernels(eta, kernel, ops);
  if (fk.sigma2 > kFirstOrderZeroTol) {
    throw Error(ErrorKind::NotDegenerateFirstOrder,
                "sigma^2 = " + std::to_string(fk.sigma2) + " is not zero");
  }
  const Eigen::MatrixXd h = (eta.array() - fk.theta).matrix().cwiseProduct(kernel.xi);
  const Eigen::MatrixXd coeff = ops.coefficients(h);
  return coeff.bottomRightCorner(coeff.rows() - 1, coeff.cols() - 1);
}

double second_order_limit_draw(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  auto sv = [&](Eigen::Index k) { return k < s.size() ? s(k) : 0.0; };
  double z = 0.0;
  for (Eigen::Index k = 0; k < gamma.rows(); ++k) {
    const double sk = sv(k);
    for (Eigen::Index l = 0; l < gamma.cols(); ++l) {
      const double g = gamma(k, l);
      if (g == 0.0) continue;
      const double sl = sv(l);
      const double delta = k == l ? 1.0 : 0.0;
      const double bracket = u(k) * v(l) + sk * sl * u(l) * v(k) - sl * (u(k) * u(l) - delta) -
                             sk * (v(k) * v(l) - delta);
      z += g / ((1.0 - sk * sk) * (1.0 - sl * sl)) * bracket;
    }
  }
  return z;
}

std::vector<double> simulate_second_order_limit(const Eigen::MatrixXd& gamma,
                                                const Eigen::VectorXd& s, std::size_t n_draws,
                                                std::uint64_t seed, std::size_t threads) {
  const Eigen::Index k_max = std::max(gamma.rows(), gamma.cols());
  std::vector<double> out(n_draws);
  parallel_for(
      n_draws,
      [&](std::size_t d) {
        Stream rng(seed, d);
        Eigen::VectorXd u(k_max);
        Eigen::VectorXd v(k_max);
        for (Eigen::Index k = 0; k < k_max; ++k) u(k) = rng.normal();
        for (Eigen::Index k = 0; k < k_max; ++k) v(k) = rng.normal();
        out[d] = second_order_limit_draw(gamma, s, u, v);
      },
      threads);
  return out;
}

double u_n_variance_exact(const Eigen::MatrixXd& h, const Eigen::MatrixXd& xi,
                          const Eigen::VectorXd& w0, const Eigen::VectorXd& w1, std::size_t n) {
  const Eigen::Index m0 = xi.rows();
  const Eigen::Index m1 = xi.cols();
  if (h.rows() != m0 || h.cols() != m1 || w0.size() != m0 || w1.size() != m1) {
    throw Error(ErrorKind::InvalidArgument, "u_n_variance_exact: shape mismatch");
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be >= 1");
  if (n > 4 || m0 * m1 > 16) {
    throw Error(ErrorKind::TooLargeForEnumeration, "needs N <= 4 and m0 * m1 <= 16");
  }
  const Eigen::MatrixXd xm1 = (xi.array() - 1.0).matrix();

  long double total = 0.0L;
  long double r_fact = 1.0L;
  for (std::size_t r = 1; r <= n; ++r) {
    r_fact *= static_cast<long double>(r);
    std::vector<std::vector<std::size_t>> perms;
    std::vector<std::size_t> p(r);
    std::iota(p.begin(), p.end(), std::size_t{0});
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));

    std::vector<Eigen::Index> x(r, 0);
    std::vector<Eigen::Index> y(r, 0);
    long double inner = 0.0L;
    for (;;) {
      double prob = 1.0;
      double first = h(x[0], y[0]);
      for (std::size_t j = 0; j < r; ++j) {
        prob *= w0(x[j]) * w1(y[j]);
        if (j > 0) first *= xm1(x[j], y[j]);
      }
      if (first != 0.0) {
        double second = 0.0;
        for (const auto& sigma : perms) {
          for (std::size_t i = 0; i < r; ++i) {
            double term = h(x[i], y[sigma[i]]);
            for (std::size_t j = 0; j < r; ++j) {
              if (j != i) term *= xm1(x[j], y[sigma[j]]);
            }
            second += term;
          }
        }
        inner += static_cast<long double>(prob * first * second);
      }
      // odometer over (x_1..x_r, y_1..y_r)
      std::size_t d = 0;
      for (; d < 2 * r; ++d) {
        Eigen::Index& digit = d < r ? x[d] : y[d - r];
        const Eigen::Index base = d < r ? m0 : m1;
        if (++digit < base) break;
        digit = 0;
      }
      if (d == 2 * r) break;
    }
    total += static_cast<long double>(r) / r_fact * inner;
  }
  const double nn = static_cast<double>(n);
  return static_cast<double>(total) / (nn * nn);
}

double u_n_variance_bound(double s1, double varsigma0, double varsigma, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be >= 1");
  // c[k] = number of permutations of S_r with k cycles (unsigned Stirling
  // numbers of the first kind), built row by row.
  std::vector<long double> c{1.0L};
  long double total = 0.0L;
  long double r_fact = 1.0L;
  for (std::size_t r = 1; r <= n; ++r) {
    std::vector<long double> next(r + 1, 0.0L);
    for (std::size_t k = 1; k <= r; ++k) {
      next[k] = (k - 1 < c.size() ? c[k - 1] : 0.0L) +
                (k < c.size() ? static_cast<long double>(r - 1) * c[k] : 0.0L);
    }
    c = std::move(next);
    r_fact *= static_cast<long double>(r);
    long double inner = 0.0L;
    for (std::size_t k = 1; k <= r; ++k) {
      inner += c[k] * std::pow(static_cast<long double>(s1), 2.0L * static_cast<long double>(r - k)) *
               std::pow(static_cast<long double>(varsigma0), 2.0L * static_cast<long double>(k - 1));
    }
    total += static_cast<long double>(r * r) / r_fact * inner;
  }
  const double nn = static_cast<double>(n);
  return static_cast<double>(total) * varsigma * varsigma / (nn * nn);
}

double cycle_mgf(std::size_t r, double u) {
  if (r == 0) throw Error(ErrorKind::InvalidArgument, "r must be >= 1");
  double p = 1.0;
  for (std::size_t i = 1; i <= r; ++i) {
    const double di = static_cast<double>(i);
    p *= 1.0 - 1.0 / di + u / di;
  }
  return p;
}

double hoeffding_expansion(const std::vector<double>& factors) {
  const std::size_t n = factors.size();
  if (n > 30) throw Error(ErrorKind::TooLargeForEnumeration, "at most 30 factors");
  long double s = 0.0L;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    long double term = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) term *= static_cast<long double>(factors[i]) - 1.0L;
    }
    s += term;
  }
  return static_cast<double>(s);
}

double KernelIdentityResiduals::max() const {
  return std::max({x_identity, y_identity, reconstruction});
}

KernelIdentityResiduals kernel_identity_residuals(const SecondOrderKernels& sk, const BridgeOperators& ops) {
  const Eigen::MatrixXd& a = ops.A();
  const Eigen::MatrixXd& as = ops.A_star();
  KernelIdentityResiduals r;
  const Eigen::MatrixXd x = sk.kappa20 + as * sk.kappa02 * as.transpose() +
                            sk.kappa11p * as.transpose();
  r.x_identity = (x + x.transpose()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd y = a * sk.kappa20 * a.transpose() + sk.kappa02 + a * sk.kappa11p;
  r.y_identity = (y + y.transpose()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd lhs = (sk.kappa20 + sk.kappa20.transpose()) * a.transpose() +
                              as * (sk.kappa02 + sk.kappa02.transpose()) + sk.kappa11p +
                              ops.apply_B(sk.kappa11p);
  r.reconstruction = (lhs - sk.eta_tilde.cwiseProduct(ops.xi())).cwiseAbs().maxCoeff();
  return r;
}


double u_n_second_moment_direct(const Eigen::MatrixXd& h, const Eigen::MatrixXd& xi,
                                const Eigen::VectorXd& w0, const Eigen::VectorXd& w1,
                                std::size_t n) {
  const Eigen::Index m0 = xi.rows();
  const Eigen::Index m1 = xi.cols();
  if (h.rows() != m0 || h.cols() != m1 || w0.size() != m0 || w1.size() != m1) {
    throw Error(ErrorKind::InvalidArgument, "u_n_second_moment_direct: shape mismatch");
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be >= 1");
  if (n > 4 || m0 * m1 > 16) {
    throw Error(ErrorKind::TooLargeForEnumeration, "needs N <= 4 and m0 * m1 <= 16");
  }
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  const double norm = static_cast<double>(n) * static_cast<double>(perms.size());

  std::vector<Eigen::Index> x(n, 0);
  std::vector<Eigen::Index> y(n, 0);
  long double total = 0.0L;
  for (;;) {
    double prob = 1.0;
    for (std::size_t j = 0; j < n; ++j) prob *= w0(x[j]) * w1(y[j]);
    double u = 0.0;
    for (const auto& sigma : perms) {
      for (std::size_t i = 0; i < n; ++i) {
        double term = h(x[i], y[sigma[i]]);
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) term *= xi(x[j], y[sigma[j]]);
        }
        u += term;
      }
    }
    u /= norm;
    total += static_cast<long double>(prob * u * u);
    std::size_t d = 0;
    for (; d < 2 * n; ++d) {
      Eigen::Index& digit = d < n ? x[d] : y[d - n];
      if (++digit < (d < n ? m0 : m1)) break;
      digit = 0;
    }
    if (d == 2 * n) break;
  }
  return static_cast<double>(total);
}

}  // namespace schro
