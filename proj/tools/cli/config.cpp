#include "config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "schro/error.hpp"

namespace schro::cli {

namespace {

using json = nlohmann::json;

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw SchemaViolation(path.empty() ? "." : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw SchemaViolation(path + "." + key, "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaViolation(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaViolation(path, "must be finite");
  return d;
}

std::uint64_t unsigned_int(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw SchemaViolation(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<Point> parse_atoms(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw SchemaViolation(path, "expected a nonempty array");
  std::vector<Point> atoms;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (v[i].is_number()) {
      atoms.push_back({number(v[i], p)});
    } else if (v[i].is_array() && !v[i].empty()) {
      Point pt;
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        pt.push_back(number(v[i][k], p + "[" + std::to_string(k) + "]"));
      }
      atoms.push_back(std::move(pt));
    } else {
      throw SchemaViolation(p, "atom must be a number or a nonempty array of numbers");
    }
  }
  return atoms;
}

Eigen::MatrixXd parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
    throw SchemaViolation(path, "expected a nonempty array of rows");
  }
  const std::size_t cols = v[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols) throw SchemaViolation(p, "ragged row");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number(v[i][j], p + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

DiscreteMeasure parse_measure(const json& v, const std::string& path) {
  only_keys(v, path, {"atoms", "weights"});
  if (!v.contains("atoms")) throw SchemaViolation(path + ".atoms", "required");
  std::vector<Point> atoms = parse_atoms(v["atoms"], path + ".atoms");
  std::vector<double> weights;
  if (v.contains("weights")) {
    const json& w = v["weights"];
    if (!w.is_array()) throw SchemaViolation(path + ".weights", "expected an array");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string p = path + ".weights[" + std::to_string(i) + "]";
      const double x = number(w[i], p);
      if (!(x > 0.0)) throw SchemaViolation(p, "weight must be positive");
      weights.push_back(x);
    }
  } else {
    weights.assign(atoms.size(), 1.0);
  }
  try {
    return DiscreteMeasure::make(std::move(atoms), std::move(weights));
  } catch (const Error& e) {
    throw SchemaViolation(path, e.what());
  }
}

CostSpec parse_cost(const json& v, const std::string& path) {
  only_keys(v, path, {"kind", "p", "matrix"});
  if (!v.contains("kind") || !v["kind"].is_string()) {
    throw SchemaViolation(path + ".kind", "required string");
  }
  const std::string kind = v["kind"];
  const double p = v.contains("p") ? number(v["p"], path + ".p") : (kind == "squared-euclidean" ? 2.0 : 1.0);
  if (p < 1.0) throw SchemaViolation(path + ".p", "must be >= 1");
  if (kind == "squared-euclidean") {
    if (v.contains("matrix")) throw SchemaViolation(path + ".matrix", "only for explicit-matrix");
    CostSpec c = CostSpec::squared_euclidean();
    c.growth_exponent = p;
    return c;
  }
  if (kind == "euclidean-power") {
    if (v.contains("matrix")) throw SchemaViolation(path + ".matrix", "only for explicit-matrix");
    return CostSpec::euclidean_power(p);
  }
  if (kind == "explicit-matrix") {
    if (!v.contains("matrix")) throw SchemaViolation(path + ".matrix", "required");
    const Eigen::MatrixXd m = parse_matrix(v["matrix"], path + ".matrix");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m(i) < 0.0) throw SchemaViolation(path + ".matrix", "costs must be >= 0");
    }
    return CostSpec::explicit_matrix(m, p);
  }
  throw SchemaViolation(path + ".kind", "unknown cost kind '" + kind + "'");
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::ordered_json measure_json(const DiscreteMeasure& m) {
  nlohmann::ordered_json j;
  j["atoms"] = m.atoms();
  std::vector<double> w(m.weights().data(), m.weights().data() + m.weights().size());
  j["weights"] = w;
  return j;
}

bool is_builtin(const Problem& p) {
  for (const std::string& name : fixture_names()) {
    if (p.name != name) continue;
    const Problem f = fixture(name);
    return f.rho0 == p.rho0 && f.rho1 == p.rho1 && f.cost == p.cost;
  }
  return false;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  only_keys(doc, "", {"fixture", "name", "rho0", "rho1", "cost", "eps", "tol", "eta", "n",
                      "replicates", "seed", "method", "source", "reference_draws",
                      "output_dir", "strict", "threads"});
  ExperimentConfig c;
  const bool explicit_problem = doc.contains("rho0") || doc.contains("rho1") || doc.contains("cost");
  if (doc.contains("fixture")) {
    if (explicit_problem) {
      throw SchemaViolation(".fixture", "give either a fixture or rho0/rho1/cost, not both");
    }
    if (!doc["fixture"].is_string()) throw SchemaViolation(".fixture", "expected a string");
    const std::string name = doc["fixture"];
    if (name != "sym2" && name != "asym23") {
      throw SchemaViolation(".fixture", "unknown fixture '" + name + "'");
    }
    c.problem = fixture(name);
    if (doc.contains("name")) throw SchemaViolation(".name", "fixtures carry their own name");
  } else {
    for (const char* key : {"rho0", "rho1", "cost"}) {
      if (!doc.contains(key)) throw SchemaViolation(std::string(".") + key, "required without a fixture");
    }
    c.problem.rho0 = parse_measure(doc["rho0"], ".rho0");
    c.problem.rho1 = parse_measure(doc["rho1"], ".rho1");
    c.problem.cost = parse_cost(doc["cost"], ".cost");
    c.problem.name = "custom";
    if (doc.contains("name")) {
      if (!doc["name"].is_string() || doc["name"].get<std::string>().empty()) {
        throw SchemaViolation(".name", "expected a nonempty string");
      }
      c.problem.name = doc["name"];
    }
    const auto& r0 = c.problem.rho0;
    const auto& r1 = c.problem.rho1;
    if (c.problem.cost.kind == CostKind::ExplicitMatrix) {
      if (c.problem.cost.matrix.rows() != static_cast<Eigen::Index>(r0.size()) ||
          c.problem.cost.matrix.cols() != static_cast<Eigen::Index>(r1.size())) {
        throw SchemaViolation(".cost.matrix", "shape must be |rho0| x |rho1|");
      }
    } else if (r0.dim() != r1.dim()) {
      throw SchemaViolation(".rho1.atoms", "dimension differs from rho0");
    }
  }
  if (doc.contains("eps")) {
    c.problem.eps = number(doc["eps"], ".eps");
    if (!(c.problem.eps > 0.0)) throw SchemaViolation(".eps", "must be > 0");
  }
  if (doc.contains("tol")) {
    c.tol = number(doc["tol"], ".tol");
    if (!(c.tol > 0.0) || c.tol > 1e-6) throw SchemaViolation(".tol", "must lie in (0, 1e-6]");
  }
  if (doc.contains("eta")) {
    const json& e = doc["eta"];
    if (e.is_string()) {
      if (e.get<std::string>() != "cost") throw SchemaViolation(".eta", "expected \"cost\" or an object");
      c.eta = EtaChoice::Cost;
    } else {
      only_keys(e, ".eta", {"matrix"});
      if (!e.contains("matrix")) throw SchemaViolation(".eta.matrix", "required");
      c.eta = EtaChoice::CustomMatrix;
      c.eta_matrix = parse_matrix(e["matrix"], ".eta.matrix");
      if (c.eta_matrix.rows() != static_cast<Eigen::Index>(c.problem.rho0.size()) ||
          c.eta_matrix.cols() != static_cast<Eigen::Index>(c.problem.rho1.size())) {
        throw SchemaViolation(".eta.matrix", "shape must be |rho0| x |rho1|");
      }
    }
  }
  if (doc.contains("method")) {
    const json& m = doc["method"];
    const std::string s = m.is_string() ? m.get<std::string>() : "";
    if (s == "auto") c.method = EstimatorMethod::Auto;
    else if (s == "brute") c.method = EstimatorMethod::Brute;
    else if (s == "permanent") c.method = EstimatorMethod::Permanent;
    else throw SchemaViolation(".method", "expected auto, brute or permanent");
  }
  if (doc.contains("n")) {
    const json& n = doc["n"];
    if (!n.is_array() || n.empty()) throw SchemaViolation(".n", "expected a nonempty array");
    c.n_values.clear();
    const std::size_t limit = c.method == EstimatorMethod::Brute ? kMaxBruteN : kMaxPermanentN;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = ".n[" + std::to_string(i) + "]";
      const std::uint64_t v = unsigned_int(n[i], p);
      if (v < 1 || v > limit) {
        throw SchemaViolation(p, "N must lie in [1, " + std::to_string(limit) + "]");
      }
      c.n_values.push_back(static_cast<std::size_t>(v));
    }
  }
  if (doc.contains("replicates")) {
    c.replicates = unsigned_int(doc["replicates"], ".replicates");
    if (c.replicates < 100) throw SchemaViolation(".replicates", "must be >= 100");
  }
  if (doc.contains("seed")) c.seed = unsigned_int(doc["seed"], ".seed");
  if (doc.contains("source")) {
    const json& s = doc["source"];
    const std::string v = s.is_string() ? s.get<std::string>() : "";
    if (v == "product") c.source = SampleSource::Product;
    else if (v == "bridge") c.source = SampleSource::Bridge;
    else throw SchemaViolation(".source", "expected product or bridge");
  }
  if (doc.contains("reference_draws")) {
    c.reference_draws = unsigned_int(doc["reference_draws"], ".reference_draws");
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw SchemaViolation(".output_dir", "expected a string");
    c.output_dir = doc["output_dir"];
  }
  if (doc.contains("strict")) {
    if (!doc["strict"].is_boolean()) throw SchemaViolation(".strict", "expected a boolean");
    c.strict = doc["strict"];
  }
  if (doc.contains("threads")) c.threads = unsigned_int(doc["threads"], ".threads");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw FileNotFound(path);
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaViolation(".", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json dump_config(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  if (is_builtin(c.problem)) {
    j["fixture"] = c.problem.name;
  } else {
    j["name"] = c.problem.name;
    j["rho0"] = measure_json(c.problem.rho0);
    j["rho1"] = measure_json(c.problem.rho1);
    nlohmann::ordered_json cost;
    cost["kind"] = std::string(to_string(c.problem.cost.kind));
    cost["p"] = c.problem.cost.growth_exponent;
    if (c.problem.cost.kind == CostKind::ExplicitMatrix) cost["matrix"] = matrix_json(c.problem.cost.matrix);
    j["cost"] = cost;
  }
  j["eps"] = c.problem.eps;
  j["tol"] = c.tol;
  if (c.eta == EtaChoice::Cost) {
    j["eta"] = "cost";
  } else {
    j["eta"] = {{"matrix", matrix_json(c.eta_matrix)}};
  }
  j["n"] = c.n_values;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["method"] = std::string(to_string(c.method));
  if (c.source) j["source"] = std::string(to_string(*c.source));
  j["reference_draws"] = c.reference_draws;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["strict"] = c.strict;
  j["threads"] = c.threads;
  return j;
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto same_matrix = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return a.problem.name == b.problem.name && a.problem.rho0 == b.problem.rho0 &&
         a.problem.rho1 == b.problem.rho1 && a.problem.cost == b.problem.cost &&
         a.problem.eps == b.problem.eps && a.eta == b.eta &&
         same_matrix(a.eta_matrix, b.eta_matrix) && a.n_values == b.n_values &&
         a.replicates == b.replicates && a.seed == b.seed && a.method == b.method &&
         a.tol == b.tol && a.source == b.source && a.reference_draws == b.reference_draws &&
         a.output_dir == b.output_dir && a.strict == b.strict && a.threads == b.threads;
}

}  // namespace schro::cli
