#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "schro/measures.hpp"
#include "schro/operators.hpp"
#include "schro/sinkhorn.hpp"

namespace schro {

/// Marginals, cost and temperature: everything needed to build a bridge.
struct Problem {
  std::string name;
  DiscreteMeasure rho0;
  DiscreteMeasure rho1;
  CostSpec cost;
  double eps = 1.0;
};

/// Atoms {0, 1}, uniform marginals, squared distance, eps = 1.
Problem sym2();
/// As sym2 but rho1 = (0.3, 0.7).
Problem asym23();

std::vector<std::string> fixture_names();
/// Throws InvalidArgument for unknown names.
Problem fixture(const std::string& name);

/// Problem with its cost matrix, bridge and operators.
struct SolvedProblem {
  Problem problem;
  Eigen::MatrixXd cost;
  GibbsKernel kernel;
  SinkhornReport report;
  BridgeOperators ops;
};

SolvedProblem solve(const Problem& problem, const SinkhornOptions& options = {});

}  // namespace schro
