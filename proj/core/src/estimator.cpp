#include "schro/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "schro/error.hpp"
#include "schro/permanent.hpp"

namespace schro {

namespace {

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be a nonempty square matrix");
  }
}

void require_at_most(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit) {
    throw Error(ErrorKind::TooLargeForEnumeration, std::string(what) + ": N = " +
                                                       std::to_string(n) + " exceeds " +
                                                       std::to_string(limit));
  }
}

double log_weight(const Eigen::MatrixXd& cost, double eps, const std::vector<std::size_t>& sigma) {
  double s = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    s += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sigma[i]));
  }
  return -s / eps;
}

}  // namespace

std::string_view to_string(EstimatorMethod method) noexcept {
  switch (method) {
    case EstimatorMethod::Auto: return "auto";
    case EstimatorMethod::Brute: return "brute";
    case EstimatorMethod::Permanent: return "permanent";
  }
  return "unknown";
}

std::vector<std::vector<std::size_t>> enumerate_permutations(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::vector<double> q_star_distribution(const Eigen::MatrixXd& cost_sample, double eps) {
  require_square(cost_sample, "cost sample");
  const auto n = static_cast<std::size_t>(cost_sample.rows());
  require_at_most(n, kMaxQStarN, "q_star");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");

  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<double> lw;
  do {
    lw.push_back(log_weight(cost_sample, eps, p));
  } while (std::next_permutation(p.begin(), p.end()));
  const double top = *std::max_element(lw.begin(), lw.end());
  long double z = 0.0L;
  for (double& v : lw) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : lw) v = static_cast<double>(v / z);
  return lw;
}

double q_star(const Eigen::MatrixXd& cost_sample, double eps,
              const std::vector<std::size_t>& sigma) {
  require_square(cost_sample, "cost sample");
  const auto n = static_cast<std::size_t>(cost_sample.rows());
  if (sigma.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "permutation length differs from N");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t v : sigma) {
    if (v >= n || seen[v]) throw Error(ErrorKind::InvalidArgument, "not a permutation");
    seen[v] = true;
  }
  const std::vector<double> q = q_star_distribution(cost_sample, eps);
  // rank of sigma in lexicographic order
  std::size_t rank = 0;
  std::vector<std::size_t> rest(n);
  std::iota(rest.begin(), rest.end(), std::size_t{0});
  std::size_t block = 1;
  for (std::size_t k = 2; k < n; ++k) block *= k;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = std::find(rest.begin(), rest.end(), sigma[i]);
    rank += static_cast<std::size_t>(it - rest.begin()) * block;
    rest.erase(it);
    if (n - i - 1 > 0) block /= (n - i - 1);
  }
  return q[rank];
}

BridgeEstimate t_n_brute(const Eigen::MatrixXd& eta_sample, const Eigen::MatrixXd& cost_sample,
                         double eps) {
  require_square(cost_sample, "cost sample");
  const auto n = static_cast<std::size_t>(cost_sample.rows());
  require_at_most(n, kMaxBruteN, "t_n_brute");
  if (eta_sample.rows() != cost_sample.rows() || eta_sample.cols() != cost_sample.cols()) {
    throw Error(ErrorKind::InvalidArgument, "eta and cost samples differ in shape");
  }
  const std::vector<double> q = q_star_distribution(cost_sample, eps);

  BridgeEstimate out;
  out.method = EstimatorMethod::Brute;
  out.coupling = Eigen::MatrixXd::Zero(cost_sample.rows(), cost_sample.cols());
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::size_t k = 0;
  do {
    for (std::size_t i = 0; i < n; ++i) {
      out.coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i])) += q[k];
    }
    ++k;
  } while (std::next_permutation(p.begin(), p.end()));
  out.coupling /= static_cast<double>(n);
  out.t_n = eta_sample.cwiseProduct(out.coupling).sum();
  return out;
}

BridgeEstimate t_n_permanent(const Eigen::MatrixXd& eta_sample,
                             const Eigen::MatrixXd& cost_sample, double eps,
                             const std::optional<SamplePotentials>& potentials) {
  require_square(cost_sample, "cost sample");
  const Eigen::Index n = cost_sample.rows();
  require_at_most(static_cast<std::size_t>(n), kMaxPermanentN, "t_n_permanent");
  if (eta_sample.rows() != n || eta_sample.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "eta and cost samples differ in shape");
  }
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");

  Eigen::VectorXd a;
  Eigen::VectorXd b;
  if (potentials) {
    if (potentials->a.size() != n || potentials->b.size() != n) {
      throw Error(ErrorKind::InvalidArgument, "potentials do not match the sample size");
    }
    a = potentials->a;
    b = potentials->b;
  } else {
    // Row minima first so the scaling starts in range; the empirical
    // potentials then only have to fix O(1) factors. Any a, b leave T_N
    // unchanged, so a loose tolerance is enough.
    a = cost_sample.rowwise().minCoeff();
    const Eigen::MatrixXd shifted = cost_sample.colwise() - a;
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const ScaledPotentials pot =
        scale_potentials(shifted, uniform, uniform, eps, SinkhornOptions{1e-9, 2000});
    if (pot.f.allFinite() && pot.g.allFinite()) {
      a += eps * pot.f;
      b = eps * pot.g;
    } else {
      b = Eigen::VectorXd::Zero(n);
    }
  }
  const Eigen::MatrixXd w =
      ((((-cost_sample).colwise() + a).rowwise() + b.transpose()) / eps).array().exp().matrix();

  const ScaledValue full = permanent(w);
  // Row scaling of the minors is inherited from the full matrix so that the
  // scale factors cancel in each ratio.
  Eigen::VectorXd row_max = w.rowwise().maxCoeff();
  const Eigen::MatrixXd ws = row_max.cwiseInverse().asDiagonal() * w;
  const long double per_full = ryser(ws);

  BridgeEstimate out;
  out.method = EstimatorMethod::Permanent;
  out.coupling.resize(n, n);
  Eigen::MatrixXd minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (n == 1) {
        out.coupling(i, j) = 1.0;
        continue;
      }
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = ws(r, c);
        }
        ++rr;
      }
      const long double pm = ryser(minor);
      out.coupling(i, j) = static_cast<double>(ws(i, j) * pm / per_full);
    }
  }
  if (!out.coupling.allFinite()) {
    throw Error(ErrorKind::Overflow, "coupling ratios are not finite");
  }
  out.coupling /= static_cast<double>(n);
  out.t_n = eta_sample.cwiseProduct(out.coupling).sum();
  if (potentials) {
    const double log_l = full.log() - std::lgamma(static_cast<double>(n) + 1.0);
    out.l_n = std::exp(log_l);
  }
  return out;
}

BridgeEstimate estimate(const Eigen::MatrixXd& eta_sample, const Eigen::MatrixXd& cost_sample,
                        double eps, EstimatorMethod method,
                        const std::optional<SamplePotentials>& potentials) {
  const auto n = static_cast<std::size_t>(cost_sample.rows());
  if (method == EstimatorMethod::Auto) {
    method = n < kAutoSwitchN ? EstimatorMethod::Brute : EstimatorMethod::Permanent;
  }
  if (method == EstimatorMethod::Brute) {
    BridgeEstimate est = t_n_brute(eta_sample, cost_sample, eps);
    if (potentials) {
      const Eigen::MatrixXd w = ((((-cost_sample).colwise() + potentials->a).rowwise() +
                                  potentials->b.transpose()) /
                                 eps)
                                    .array()
                                    .exp()
                                    .matrix();
      est.l_n = std::exp(permanent(w).log() - std::lgamma(static_cast<double>(n) + 1.0));
    }
    return est;
  }
  return t_n_permanent(eta_sample, cost_sample, eps, potentials);
}

SamplePotentials sample_potentials(const GibbsKernel& kernel, const SampleBatch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  SamplePotentials p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.a(i) = kernel.a_eps(static_cast<Eigen::Index>(batch.x_idx[static_cast<std::size_t>(i)]));
    p.b(i) = kernel.b_eps(static_cast<Eigen::Index>(batch.y_idx[static_cast<std::size_t>(i)]));
  }
  return p;
}

double likelihood_ratio(const SampleBatch& batch, const GibbsKernel& kernel) {
  const std::size_t n = batch.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty batch");
  require_at_most(n, kMaxPermanentN, "likelihood_ratio");
  const Eigen::MatrixXd xi = sample_matrix(kernel.xi, batch);
  const double log_l = permanent(xi).log() - std::lgamma(static_cast<double>(n) + 1.0);
  const double l = std::exp(log_l);
  if (!std::isfinite(l)) throw Error(ErrorKind::Overflow, "L_N is not finite");
  return l;
}

double gibbs_objective_check(const std::vector<double>& q, const Eigen::MatrixXd& cost_sample,
                             double eps) {
  require_square(cost_sample, "cost sample");
  const auto n = static_cast<std::size_t>(cost_sample.rows());
  require_at_most(n, 6, "gibbs_objective_check");
  std::size_t n_fact = 1;
  for (std::size_t k = 2; k <= n; ++k) n_fact *= k;
  if (q.size() != n_fact) {
    throw Error(ErrorKind::NotADistribution,
                "expected " + std::to_string(n_fact) + " probabilities, got " +
                    std::to_string(q.size()));
  }
  long double total = 0.0L;
  for (double v : q) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::NotADistribution, "probabilities must be finite and >= 0");
    }
    total += v;
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > 1e-10) {
    throw Error(ErrorKind::NotADistribution, "probabilities sum to " +
                                                 std::to_string(static_cast<double>(total)));
  }
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  double transport = 0.0;
  double ent = 0.0;
  std::size_t k = 0;
  do {
    const double qk = q[k++];
    if (qk == 0.0) continue;
    transport += qk * (-eps * log_weight(cost_sample, eps, p)) / static_cast<double>(n);
    ent += qk * std::log(qk);
  } while (std::next_permutation(p.begin(), p.end()));
  return transport + eps / static_cast<double>(n) * ent;
}

}  // namespace schro
