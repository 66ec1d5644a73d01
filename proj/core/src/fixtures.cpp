#include "schro/fixtures.hpp"

#include "schro/error.hpp"

namespace schro {

Problem sym2() {
  return {"sym2", DiscreteMeasure::make({{0.0}, {1.0}}, {0.5, 0.5}),
          DiscreteMeasure::make({{0.0}, {1.0}}, {0.5, 0.5}), CostSpec::squared_euclidean(), 1.0};
}

Problem asym23() {
  return {"asym23", DiscreteMeasure::make({{0.0}, {1.0}}, {0.5, 0.5}),
          DiscreteMeasure::make({{0.0}, {1.0}}, {0.3, 0.7}), CostSpec::squared_euclidean(), 1.0};
}

std::vector<std::string> fixture_names() { return {"sym2", "asym23"}; }

Problem fixture(const std::string& name) {
  if (name == "sym2") return sym2();
  if (name == "asym23") return asym23();
  throw Error(ErrorKind::InvalidArgument, "unknown fixture '" + name + "'");
}

SolvedProblem solve(const Problem& problem, const SinkhornOptions& options) {
  Eigen::MatrixXd cost = cost_matrix(problem.cost, problem.rho0, problem.rho1);
  auto [kernel, report] = solve_bridge(problem.rho0, problem.rho1, cost, problem.eps, options);
  BridgeOperators ops = BridgeOperators::build(kernel);
  return {problem, std::move(cost), std::move(kernel), report, std::move(ops)};
}

}  // namespace schro
