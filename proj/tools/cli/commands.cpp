#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "schro/error.hpp"
#include "schro/harness.hpp"
#include "schro/sampling.hpp"

namespace schro::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::string fixture;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string method;
  bool strict = true;
  std::size_t threads = 0;
  std::vector<std::size_t> n;
  std::size_t replicates = 0;
  std::size_t reference_draws = 0;
  std::size_t draws = 100000;
  std::string source;
};

// Usage-level problems found after CLI11 parsing.
struct BadArguments : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ojson matrix_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ojson vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ExperimentConfig resolve(const Options& o, bool need_problem) {
  ExperimentConfig c;
  bool have_problem = false;
  if (!o.config_path.empty()) {
    c = load_config(o.config_path);
    have_problem = true;
  }
  if (!o.fixture.empty()) {
    if (o.fixture != "sym2" && o.fixture != "asym23") {
      throw BadArguments("unknown fixture '" + o.fixture + "' (known: sym2, asym23)");
    }
    const double eps = have_problem ? c.problem.eps : 1.0;
    c.problem = fixture(o.fixture);
    c.problem.eps = eps;
    have_problem = true;
  }
  if (need_problem && !have_problem) throw BadArguments("give --fixture or --config");
  if (o.seed_set) c.seed = o.seed;
  if (!o.method.empty() && o.method != "both") {
    if (o.method == "auto") c.method = EstimatorMethod::Auto;
    else if (o.method == "brute") c.method = EstimatorMethod::Brute;
    else if (o.method == "permanent") c.method = EstimatorMethod::Permanent;
    else throw BadArguments("unknown method '" + o.method + "'");
  }
  if (!o.source.empty()) {
    if (o.source == "product") c.source = SampleSource::Product;
    else if (o.source == "bridge") c.source = SampleSource::Bridge;
    else throw BadArguments("unknown source '" + o.source + "'");
  }
  if (!o.n.empty()) c.n_values = o.n;
  if (o.replicates != 0) c.replicates = o.replicates;
  if (o.reference_draws != 0) c.reference_draws = o.reference_draws;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.threads != 0) c.threads = o.threads;
  c.strict = o.strict;
  return c;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config_path, "JSON config file");
  app->add_option("--fixture", o.fixture, "Built-in fixture: sym2 or asym23");
  app->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_set = true; }, "Master seed");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--method", o.method, "auto, brute or permanent");
  app->add_flag("--strict,!--no-strict", o.strict, "Exit 1 when a check fails (default on)");
  app->add_option("--threads", o.threads, "Worker threads (0: SCHRO_CHAOS_THREADS or all cores)");
}

int cmd_bridge(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o, true);
  const SolvedProblem sp = solve(c.problem, SinkhornOptions{c.tol, 100000});
  ojson j = {{"fixture", c.problem.name},
             {"eps", c.problem.eps},
             {"cost", matrix_json(sp.cost)},
             {"xi", matrix_json(sp.kernel.xi)},
             {"a_eps", vector_json(sp.kernel.a_eps)},
             {"b_eps", vector_json(sp.kernel.b_eps)},
             {"mu", matrix_json(sp.kernel.mu)},
             {"markov_kernel", matrix_json(markov_kernel(sp.cost, sp.problem.rho1.weights(),
                                                         c.problem.eps))},
             {"report",
              {{"iterations", sp.report.iterations},
               {"residual", sp.report.residual},
               {"converged", sp.report.converged}}}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_operators(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o, true);
  const SolvedProblem sp = solve(c.problem, SinkhornOptions{c.tol, 100000});
  const std::vector<Check> checks = verify(c.problem, c.seed == 0 ? 1 : c.seed);
  ojson residuals = ojson::object();
  for (const Check& ch : checks) {
    if (ch.name.rfind("operators:", 0) == 0 || ch.name.rfind("identities:", 0) == 0) {
      residuals[ch.name] = ch.value;
    }
  }
  ojson j = {{"fixture", c.problem.name},
             {"s", vector_json(sp.ops.s())},
             {"gap", sp.ops.gap()},
             {"alpha", matrix_json(sp.ops.alpha())},
             {"beta", matrix_json(sp.ops.beta())},
             {"residuals", residuals}};
  out << j.dump(2) << '\n';
  return kOk;
}

ojson estimate_json(const BridgeEstimate& e) {
  ojson j = {{"method", std::string(to_string(e.method))}, {"t_n", e.t_n}};
  j["l_n"] = e.l_n ? ojson(*e.l_n) : ojson(nullptr);
  j["coupling"] = matrix_json(e.coupling);
  return j;
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o, true);
  if (o.n.size() > 1) throw BadArguments("estimate takes a single --n");
  const std::size_t n = o.n.empty() ? c.n_values.front() : o.n.front();
  const SolvedProblem sp = solve(c.problem, SinkhornOptions{c.tol, 100000});
  const SampleSource source = c.source.value_or(SampleSource::Product);
  Stream rng(c.seed, 0, n);
  SampleBatch b = source == SampleSource::Bridge
                      ? sample_bridge(sp.kernel, n, rng)
                      : sample_product(c.problem.rho0, c.problem.rho1, n, rng);
  b.seed = c.seed;
  const Eigen::MatrixXd cost_s = sample_matrix(sp.cost, b);
  const Eigen::MatrixXd eta_s =
      sample_matrix(c.eta == EtaChoice::Cost ? sp.cost : c.eta_matrix, b);
  const SamplePotentials pot = sample_potentials(sp.kernel, b);

  ojson j = {{"fixture", c.problem.name},
             {"n", n},
             {"seed", c.seed},
             {"source", std::string(to_string(source))},
             {"x_idx", b.x_idx},
             {"y_idx", b.y_idx},
             {"theta", first_order_kernels(c.eta == EtaChoice::Cost ? sp.cost : c.eta_matrix,
                                           sp.kernel, sp.ops)
                           .theta}};
  if (o.method == "both") {
    const BridgeEstimate brute = estimate(eta_s, cost_s, c.problem.eps, EstimatorMethod::Brute, pot);
    const BridgeEstimate perm =
        estimate(eta_s, cost_s, c.problem.eps, EstimatorMethod::Permanent, pot);
    j["brute"] = estimate_json(brute);
    j["permanent"] = estimate_json(perm);
    j["abs_diff"] = std::fabs(brute.t_n - perm.t_n);
  } else {
    j["estimate"] = estimate_json(estimate(eta_s, cost_s, c.problem.eps, c.method, pot));
  }
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_chaos_kernels(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o, true);
  const SolvedProblem sp = solve(c.problem, SinkhornOptions{c.tol, 100000});
  const Eigen::MatrixXd eta = c.eta == EtaChoice::Cost ? sp.cost : c.eta_matrix;
  const FirstOrderKernels fk = first_order_kernels(eta, sp.kernel, sp.ops);
  const SecondOrderKernels sk = second_order_kernels(eta, sp.kernel, sp.ops, fk);
  ojson j = {{"fixture", c.problem.name},
             {"theta", fk.theta},
             {"sigma2", fk.sigma2},
             {"kappa10", vector_json(fk.kappa10)},
             {"kappa01", vector_json(fk.kappa01)},
             {"f_chaos", vector_json(fk.f_chaos)},
             {"g_chaos", vector_json(fk.g_chaos)},
             {"eta_tilde", matrix_json(sk.eta_tilde)},
             {"kappa20", matrix_json(sk.kappa20)},
             {"kappa02", matrix_json(sk.kappa02)},
             {"kappa11p", matrix_json(sk.kappa11p)},
             {"theta11p", sk.theta11p},
             {"ell11p",
              {{"constant", sk.ell_const},
               {"x", vector_json(sk.ell_x)},
               {"y", vector_json(sk.ell_y)}}},
             {"gamma", matrix_json(sk.gamma)},
             {"s", vector_json(sp.ops.s())}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_simulate_limit(const Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve(o, true);
  const SolvedProblem sp = solve(c.problem, SinkhornOptions{c.tol, 100000});
  const Eigen::MatrixXd eta = c.eta == EtaChoice::Cost ? sp.cost : c.eta_matrix;
  const Eigen::MatrixXd gamma = gamma_coefficients(eta, sp.kernel, sp.ops);
  const Eigen::VectorXd s = sp.ops.s().tail(sp.ops.s().size() - 1);
  const std::vector<double> z = simulate_second_order_limit(gamma, s, o.draws, c.seed, c.threads);
  std::ostringstream csv;
  csv << "draw,z\n";
  for (std::size_t d = 0; d < z.size(); ++d) csv << d << ',' << fmt(z[d]) << '\n';
  if (c.output_dir.empty()) {
    out << csv.str();
  } else {
    std::filesystem::create_directories(c.output_dir);
    const std::string path = (std::filesystem::path(c.output_dir) /
                              ("limit_" + c.problem.name + "_" + std::to_string(c.seed) + ".csv"))
                                 .string();
    std::ofstream(path) << csv.str();
    out << "wrote " << path << '\n';
  }
  return kOk;
}

std::vector<std::size_t> default_n(const std::string& experiment) {
  if (experiment == "remainder") return {4, 6, 8, 10, 12};
  if (experiment == "unbiased") return {6};
  if (experiment == "compare-cuturi") return {10};
  return {12};
}

int cmd_mc(const std::string& experiment, const Options& o, std::ostream& out) {
  Options opts = o;
  if (opts.n.empty() && opts.config_path.empty()) opts.n = default_n(experiment);
  ExperimentConfig c = resolve(opts, true);
  if (c.output_dir.empty()) c.output_dir = "results";
  ExperimentResult r;
  if (experiment == "clt") r = run_clt(c);
  else if (experiment == "second-order") r = run_second_order(c);
  else if (experiment == "remainder") r = run_remainder_decay(c);
  else if (experiment == "unbiased") r = run_unbiasedness(c);
  else r = run_compare_with_cuturi(c);
  const std::vector<std::string> files = write_result(r, c.output_dir);
  out << experiment << " " << r.fixture << " seed=" << r.seed << " replicates=" << c.replicates
      << '\n';
  for (const Check& ch : r.checks) {
    out << (ch.passed ? "PASS  " : "FAIL  ") << ch.name << "  value=" << fmt(ch.value)
        << "  threshold=" << fmt(ch.threshold) << '\n';
  }
  out << "wrote " << files.size() << " files to " << c.output_dir << '\n';
  return c.strict && !r.passed() ? kCheckFailed : kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  std::vector<Problem> problems;
  if (o.fixture.empty() && o.config_path.empty()) {
    problems = {sym2(), asym23()};
  } else {
    problems = {resolve(o, true).problem};
  }
  bool ok = true;
  for (const Problem& p : problems) {
    out << "== " << p.name << '\n';
    for (const Check& ch : verify(p, o.seed_set ? o.seed : 1)) {
      ok = ok && ch.passed;
      out << (ch.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(48) << ch.name
          << std::right << std::setw(26) << fmt(ch.value) << "  <= " << fmt(ch.threshold) << '\n';
    }
  }
  out << (ok ? "all checks passed" : "some checks failed") << '\n';
  return o.strict && !ok ? kCheckFailed : kOk;
}

int cmd_config_dump(const Options& o, std::ostream& out) {
  out << dump_config(resolve(o, true)).dump(2) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact Schrodinger-bridge statistics and chaos limits on finite spaces",
               "schro-chaos"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto* bridge = app.add_subcommand("bridge", "Static Schrodinger bridge");
  bridge->require_subcommand(1);
  auto* bridge_solve = bridge->add_subcommand("solve", "Solve the bridge, print xi, potentials, mu");
  add_common(bridge_solve, o);
  bridge_solve->callback([&] { action = [&] { return cmd_bridge(o, out); }; });

  auto* operators = app.add_subcommand("operators", "Singular system, gap and identity residuals");
  add_common(operators, o);
  operators->callback([&] { action = [&] { return cmd_operators(o, out); }; });

  auto* est = app.add_subcommand("estimate", "Exact T_N, L_N and coupling on one sample");
  add_common(est, o);
  est->add_option("--n", o.n, "Sample size");
  est->add_option("--source", o.source, "product or bridge");
  est->callback([&] { action = [&] { return cmd_estimate(o, out); }; });

  auto* chaos = app.add_subcommand("chaos", "Chaos kernels and limit laws");
  chaos->require_subcommand(1);
  auto* kernels = chaos->add_subcommand("kernels", "Dump first- and second-order kernels");
  add_common(kernels, o);
  kernels->callback([&] { action = [&] { return cmd_chaos_kernels(o, out); }; });
  auto* limit = chaos->add_subcommand("simulate-limit", "Draws of the second-order limit (CSV)");
  add_common(limit, o);
  limit->add_option("--draws", o.draws, "Number of draws");
  limit->callback([&] { action = [&] { return cmd_simulate_limit(o, out); }; });

  auto* mc = app.add_subcommand("mc", "Monte Carlo experiments");
  mc->require_subcommand(1);
  for (const char* name : {"clt", "second-order", "remainder", "unbiased", "compare-cuturi"}) {
    auto* sub = mc->add_subcommand(name, std::string("Run the ") + name + " experiment");
    add_common(sub, o);
    sub->add_option("--n", o.n, "Sample sizes")->delimiter(',');
    sub->add_option("--replicates", o.replicates, "Replicates per N (>= 100)");
    sub->add_option("--reference-draws", o.reference_draws, "Limit draws (second-order)");
    sub->add_option("--source", o.source, "product or bridge");
    const std::string experiment = name;
    sub->callback([&, experiment] { action = [&, experiment] { return cmd_mc(experiment, o, out); }; });
  }

  auto* ver = app.add_subcommand("verify", "Identity and property suite with a pass/fail table");
  add_common(ver, o);
  ver->callback([&] { action = [&] { return cmd_verify(o, out); }; });

  auto* config = app.add_subcommand("config", "Config utilities");
  config->require_subcommand(1);
  auto* dump = config->add_subcommand("dump", "Print the validated config with defaults filled");
  add_common(dump, o);
  dump->callback([&] { action = [&] { return cmd_config_dump(o, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kBadArguments;
  }

  try {
    return action ? action() : kBadArguments;
  } catch (const BadArguments& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  } catch (const FileNotFound& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  } catch (const SchemaViolation& e) {
    err << "schema violation at " << e.what() << '\n';
    return kSchemaViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRefused;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRefused;
  }
}

}  // namespace schro::cli
