#include "schro/sampling.hpp"

#include "schro/error.hpp"

namespace schro {

SampleBatch sample_bridge(const GibbsKernel& kernel, std::size_t n, Stream& rng) {
  if (n == 0) {
    throw Error(ErrorKind::InvalidArgument, "sample size must be >= 1");
  }
  const auto m0 = kernel.mu.rows();
  const auto m1 = kernel.mu.cols();
  Eigen::VectorXd flat(m0 * m1);
  for (Eigen::Index i = 0; i < m0; ++i) {
    for (Eigen::Index j = 0; j < m1; ++j) flat(i * m1 + j) = kernel.mu(i, j);
  }
  const IndexSampler draw(flat);
  SampleBatch batch;
  batch.source = SampleSource::Bridge;
  batch.x_idx.resize(n);
  batch.y_idx.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t cell = draw(rng);
    batch.x_idx[k] = cell / static_cast<std::size_t>(m1);
    batch.y_idx[k] = cell % static_cast<std::size_t>(m1);
  }
  return batch;
}

}  // namespace schro
