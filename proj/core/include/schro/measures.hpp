#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "schro/rng.hpp"

namespace schro {

using Point = std::vector<double>;

/// Finitely supported probability measure on R^d.
///
/// Atoms keep their insertion order; that order defines the index space used
/// by every matrix in the library and by inverse-CDF sampling.
class DiscreteMeasure {
 public:
  /// Validates and normalizes. Throws EmptySupport, DuplicateAtom,
  /// NonpositiveWeight, or InvalidArgument (length/dimension mismatch).
  static DiscreteMeasure make(std::vector<Point> atoms, std::vector<double> weights);

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t dim() const noexcept { return atoms_.front().size(); }
  const std::vector<Point>& atoms() const noexcept { return atoms_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return a.atoms_ == b.atoms_ && a.weights_ == b.weights_;
  }

 private:
  DiscreteMeasure(std::vector<Point> atoms, Eigen::VectorXd weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  std::vector<Point> atoms_;
  Eigen::VectorXd weights_;
};

/// Uniform measure on the given atoms (atoms must be distinct).
DiscreteMeasure uniform_measure(std::vector<Point> atoms);

enum class CostKind { SquaredEuclidean, EuclideanPower, ExplicitMatrix };

std::string_view to_string(CostKind kind) noexcept;

/// How the ground cost is produced. `growth_exponent` is the p of the
/// polynomial growth bound; for EuclideanPower it is also the power used.
struct CostSpec {
  CostKind kind = CostKind::SquaredEuclidean;
  double growth_exponent = 2.0;
  Eigen::MatrixXd matrix;  // ExplicitMatrix only

  static CostSpec squared_euclidean() { return {CostKind::SquaredEuclidean, 2.0, {}}; }
  static CostSpec euclidean_power(double p) { return {CostKind::EuclideanPower, p, {}}; }
  static CostSpec explicit_matrix(Eigen::MatrixXd m, double p = 1.0) {
    return {CostKind::ExplicitMatrix, p, std::move(m)};
  }

  friend bool operator==(const CostSpec& a, const CostSpec& b) {
    return a.kind == b.kind && a.growth_exponent == b.growth_exponent &&
           a.matrix.rows() == b.matrix.rows() && a.matrix.cols() == b.matrix.cols() &&
           a.matrix == b.matrix;
  }
};

/// Dense m0 x m1 matrix c(x_i, y_j). Throws NegativeCost for explicit
/// matrices with negative or non-finite entries, InvalidArgument on shape
/// mismatch.
Eigen::MatrixXd cost_matrix(const CostSpec& spec, const DiscreteMeasure& rho0,
                            const DiscreteMeasure& rho1);

/// n i.i.d. atom indices by inverse CDF over the atom order.
std::vector<std::size_t> sample(const DiscreteMeasure& measure, std::size_t n, Stream& rng);

/// Inverse-CDF sampler over an arbitrary nonnegative weight vector.
class IndexSampler {
 public:
  explicit IndexSampler(const Eigen::VectorXd& weights);
  std::size_t operator()(Stream& rng) const;
  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

enum class SampleSource { Product, Bridge };

std::string_view to_string(SampleSource source) noexcept;

/// N paired atom indices together with their provenance.
struct SampleBatch {
  std::vector<std::size_t> x_idx;
  std::vector<std::size_t> y_idx;
  SampleSource source = SampleSource::Product;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return x_idx.size(); }
};

/// Independent X and Y streams from rho0 and rho1.
SampleBatch sample_product(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1,
                           std::size_t n, Stream& rng);

/// Gathers c(X_i, Y_j) (or any m0 x m1 table) into the N x N sample matrix.
Eigen::MatrixXd sample_matrix(const Eigen::MatrixXd& table, const SampleBatch& batch);

}  // namespace schro
