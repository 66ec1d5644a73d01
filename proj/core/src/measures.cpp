#include "schro/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "schro/error.hpp"

namespace schro {

namespace {

// Neumaier-compensated sum in extended precision.
long double compensated_sum(const std::vector<double>& values) {
  long double sum = 0.0L;
  long double carry = 0.0L;
  for (double v : values) {
    const long double x = v;
    const long double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

double distance(const Point& x, const Point& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

DiscreteMeasure DiscreteMeasure::make(std::vector<Point> atoms, std::vector<double> weights) {
  if (atoms.empty()) {
    throw Error(ErrorKind::EmptySupport, "measure needs at least one atom");
  }
  if (atoms.size() != weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "atoms and weights differ in length (" +
                                                std::to_string(atoms.size()) + " vs " +
                                                std::to_string(weights.size()) + ")");
  }
  const std::size_t d = atoms.front().size();
  if (d == 0) {
    throw Error(ErrorKind::InvalidArgument, "atoms must have dimension >= 1");
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) {
      throw Error(ErrorKind::InvalidArgument, "atom " + std::to_string(i) + " has dimension " +
                                                  std::to_string(atoms[i].size()) +
                                                  ", expected " + std::to_string(d));
    }
    for (double c : atoms[i]) {
      if (!std::isfinite(c)) {
        throw Error(ErrorKind::InvalidArgument, "atom " + std::to_string(i) + " is not finite");
      }
    }
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw Error(ErrorKind::NonpositiveWeight, "weight " + std::to_string(i) + " = " +
                                                    std::to_string(weights[i]));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (atoms[j] == atoms[i]) {
        throw Error(ErrorKind::DuplicateAtom,
                    "atoms " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
      }
    }
  }

  const long double total = compensated_sum(weights);
  // Already-normalized input is kept bit for bit so that normalizing twice
  // (e.g. a dumped and reloaded config) is a no-op.
  const bool keep = std::fabs(total - 1.0L) <= 1e-15L;
  Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = keep ? weights[i] : static_cast<double>(weights[i] / total);
  }
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

DiscreteMeasure uniform_measure(std::vector<Point> atoms) {
  std::vector<double> w(atoms.size(), 1.0);
  return DiscreteMeasure::make(std::move(atoms), std::move(w));
}

std::string_view to_string(CostKind kind) noexcept {
  switch (kind) {
    case CostKind::SquaredEuclidean: return "squared-euclidean";
    case CostKind::EuclideanPower: return "euclidean-power";
    case CostKind::ExplicitMatrix: return "explicit-matrix";
  }
  return "unknown";
}

std::string_view to_string(SampleSource source) noexcept {
  return source == SampleSource::Product ? "product" : "bridge";
}

Eigen::MatrixXd cost_matrix(const CostSpec& spec, const DiscreteMeasure& rho0,
                            const DiscreteMeasure& rho1) {
  const auto m0 = static_cast<Eigen::Index>(rho0.size());
  const auto m1 = static_cast<Eigen::Index>(rho1.size());
  if (spec.kind == CostKind::ExplicitMatrix) {
    if (spec.matrix.rows() != m0 || spec.matrix.cols() != m1) {
      throw Error(ErrorKind::InvalidArgument, "explicit cost matrix is " +
                                                  std::to_string(spec.matrix.rows()) + "x" +
                                                  std::to_string(spec.matrix.cols()) +
                                                  ", measures need " + std::to_string(m0) + "x" +
                                                  std::to_string(m1));
    }
    for (Eigen::Index i = 0; i < m0; ++i) {
      for (Eigen::Index j = 0; j < m1; ++j) {
        const double c = spec.matrix(i, j);
        if (!(c >= 0.0) || !std::isfinite(c)) {
          throw Error(ErrorKind::NegativeCost, "entry (" + std::to_string(i) + "," +
                                                   std::to_string(j) + ") = " + std::to_string(c));
        }
      }
    }
    return spec.matrix;
  }
  if (rho0.dim() != rho1.dim()) {
    throw Error(ErrorKind::InvalidArgument, "measures live in different dimensions");
  }
  if (spec.kind == CostKind::EuclideanPower && !(spec.growth_exponent >= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "euclidean-power needs p >= 1");
  }
  Eigen::MatrixXd c(m0, m1);
  for (Eigen::Index i = 0; i < m0; ++i) {
    for (Eigen::Index j = 0; j < m1; ++j) {
      const double r = distance(rho0.atoms()[static_cast<std::size_t>(i)],
                                rho1.atoms()[static_cast<std::size_t>(j)]);
      c(i, j) = spec.kind == CostKind::SquaredEuclidean ? r * r
                                                        : std::pow(r, spec.growth_exponent);
    }
  }
  return c;
}

IndexSampler::IndexSampler(const Eigen::VectorXd& weights) {
  cdf_.reserve(static_cast<std::size_t>(weights.size()));
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    cdf_.push_back(static_cast<double>(acc));
  }
  if (cdf_.empty() || !(cdf_.back() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sampler needs positive total weight");
  }
  const double total = cdf_.back();
  for (double& v : cdf_) v /= total;
}

std::size_t IndexSampler::operator()(Stream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return cdf_.size() - 1;
  return static_cast<std::size_t>(it - cdf_.begin());
}

std::vector<std::size_t> sample(const DiscreteMeasure& measure, std::size_t n, Stream& rng) {
  if (n == 0) {
    throw Error(ErrorKind::InvalidArgument, "sample size must be >= 1");
  }
  const IndexSampler draw(measure.weights());
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = draw(rng);
  return out;
}

SampleBatch sample_product(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1,
                           std::size_t n, Stream& rng) {
  SampleBatch batch;
  batch.source = SampleSource::Product;
  batch.x_idx = sample(rho0, n, rng);
  batch.y_idx = sample(rho1, n, rng);
  return batch;
}

Eigen::MatrixXd sample_matrix(const Eigen::MatrixXd& table, const SampleBatch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = table(static_cast<Eigen::Index>(batch.x_idx[static_cast<std::size_t>(i)]),
                        static_cast<Eigen::Index>(batch.y_idx[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

}  // namespace schro
