#pragma once

#include <cstddef>

#include "schro/measures.hpp"
#include "schro/sinkhorn.hpp"

namespace schro {

/// n i.i.d. pairs from the bridge coupling mu_ij = xi_ij rho0_i rho1_j,
/// drawn by inverse CDF over the row-major flattening of mu.
SampleBatch sample_bridge(const GibbsKernel& kernel, std::size_t n, Stream& rng);

}  // namespace schro
