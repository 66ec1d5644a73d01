#include "schro/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "schro/error.hpp"
#include "schro/parallel.hpp"
#include "schro/sampling.hpp"
#include "schro/stats.hpp"

namespace schro {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZeroVariance = 1e-10;

struct Context {
  SolvedProblem solved;
  Eigen::MatrixXd eta;
  FirstOrderKernels fk;
  SecondOrderKernels sk;
  LimitParameters limits;
};

Context make_context(const ExperimentConfig& config) {
  validate(config);
  SolvedProblem solved = solve(config.problem, SinkhornOptions{config.tol, 100000});
  Eigen::MatrixXd eta = config.eta == EtaChoice::Cost ? solved.cost : config.eta_matrix;
  FirstOrderKernels fk = first_order_kernels(eta, solved.kernel, solved.ops);
  SecondOrderKernels sk = second_order_kernels(eta, solved.kernel, solved.ops, fk);
  LimitParameters limits;
  limits.theta = fk.theta;
  limits.sigma2 = fk.sigma2;
  limits.theta11p = sk.theta11p;
  limits.gamma = sk.gamma;
  limits.s = solved.ops.s().tail(solved.ops.s().size() - 1);
  return {std::move(solved), std::move(eta), std::move(fk), std::move(sk), std::move(limits)};
}

struct Evaluated {
  double t_n = 0.0;
  double l_n = 0.0;
  double transport = 0.0;  // <C, M>
  double cuturi = kNaN;    // <C, P> for the Sinkhorn coupling of the empirical marginals
};

using Key = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;

Key canonical(const SampleBatch& b) {
  Key k{b.x_idx, b.y_idx};
  std::sort(k.first.begin(), k.first.end());
  std::sort(k.second.begin(), k.second.end());
  return k;
}

Evaluated evaluate(const Context& ctx, const Key& key, EstimatorMethod method, bool with_cuturi) {
  SampleBatch b;
  b.x_idx = key.first;
  b.y_idx = key.second;
  const GibbsKernel& kernel = ctx.solved.kernel;
  const Eigen::MatrixXd cost_s = sample_matrix(ctx.solved.cost, b);
  const Eigen::MatrixXd eta_s = sample_matrix(ctx.eta, b);
  const BridgeEstimate est =
      estimate(eta_s, cost_s, kernel.eps, method, sample_potentials(kernel, b));
  Evaluated e;
  e.t_n = est.t_n;
  e.l_n = est.l_n.value_or(kNaN);
  e.transport = cost_s.cwiseProduct(est.coupling).sum();
  if (with_cuturi) {
    const auto n = cost_s.rows();
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const ScaledPotentials pot =
        scale_potentials(cost_s, u, u, kernel.eps, SinkhornOptions{1e-12, 100000});
    const Eigen::MatrixXd p =
        ((((-cost_s / kernel.eps).colwise() + pot.f).rowwise() + pot.g.transpose())
             .array()
             .exp() /
         static_cast<double>(n * n))
            .matrix();
    e.cuturi = cost_s.cwiseProduct(p).sum();
  }
  return e;
}

struct Drawn {
  std::vector<SampleBatch> batches;
  std::vector<Evaluated> values;
};

// Draws every replicate, evaluates each distinct pair of empirical count
// vectors once and maps the values back. T_N only depends on those counts.
Drawn draw_and_evaluate(const ExperimentConfig& config, const Context& ctx, std::size_t n,
                        SampleSource source, bool with_cuturi) {
  Drawn d;
  d.batches.resize(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    Stream rng(config.seed, r, n);
    SampleBatch b = source == SampleSource::Bridge
                        ? sample_bridge(ctx.solved.kernel, n, rng)
                        : sample_product(ctx.solved.problem.rho0, ctx.solved.problem.rho1, n, rng);
    b.seed = config.seed;
    d.batches[r] = std::move(b);
  }
  std::map<Key, std::size_t> slot;
  std::vector<const Key*> keys;
  std::vector<std::size_t> which(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    auto [it, inserted] = slot.emplace(canonical(d.batches[r]), keys.size());
    if (inserted) keys.push_back(&it->first);
    which[r] = it->second;
  }
  std::vector<Evaluated> unique(keys.size());
  parallel_for(
      keys.size(),
      [&](std::size_t k) { unique[k] = evaluate(ctx, *keys[k], config.method, with_cuturi); },
      config.threads);
  d.values.resize(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) d.values[r] = unique[which[r]];
  return d;
}

PerN collect(const ExperimentConfig& config, const Context& ctx, std::size_t n,
             SampleSource source, bool with_cuturi = false) {
  const Drawn d = draw_and_evaluate(config, ctx, n, source, with_cuturi);
  PerN p;
  p.n = n;
  const std::size_t reps = config.replicates;
  p.t_n.resize(reps);
  p.l_n.resize(reps);
  p.first_chaos.resize(reps);
  p.second_chaos.resize(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    p.t_n[r] = d.values[r].t_n;
    p.l_n[r] = d.values[r].l_n;
    p.first_chaos[r] = first_chaos_value(d.batches[r], ctx.fk);
    p.second_chaos[r] = n >= 2 ? second_chaos_value(d.batches[r], ctx.sk) : kNaN;
  }
  if (with_cuturi) {
    std::vector<double> perm(reps);
    std::vector<double> cut(reps);
    std::vector<double> diff(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      perm[r] = d.values[r].transport;
      cut[r] = d.values[r].cuturi;
      diff[r] = perm[r] - cut[r];
    }
    p.extra = {{"permanent_cost", perm}, {"cuturi_cost", cut}, {"difference", diff}};
  }
  return p;
}

nlohmann::ordered_json moments_json(const Moments& m) {
  return {{"mean", m.mean}, {"variance", m.variance}, {"std_error", m.std_error}};
}

nlohmann::ordered_json quantiles_json(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  return {{"min", x.front()}, {"q05", q(0.05)}, {"q25", q(0.25)}, {"median", q(0.5)},
          {"q75", q(0.75)},   {"q95", q(0.95)}, {"max", x.back()}};
}

ExperimentResult start(const char* name, const ExperimentConfig& config, const Context& ctx,
                       SampleSource source) {
  ExperimentResult res;
  res.experiment = name;
  res.fixture = config.problem.name;
  res.seed = config.seed;
  res.source = source;
  res.limits = ctx.limits;
  return res;
}

std::string label(const char* what, std::size_t n) {
  return std::string(what) + " (N=" + std::to_string(n) + ")";
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(EtaChoice eta) noexcept {
  return eta == EtaChoice::Cost ? "cost" : "custom-matrix";
}

void validate(const ExperimentConfig& config) {
  if (config.n_values.empty()) throw Error(ErrorKind::InvalidArgument, "N list is empty");
  std::size_t limit = kMaxPermanentN;
  if (config.method == EstimatorMethod::Brute) limit = kMaxBruteN;
  for (std::size_t n : config.n_values) {
    if (n == 0 || n > limit) {
      throw Error(ErrorKind::InvalidArgument, "N = " + std::to_string(n) + " outside [1, " +
                                                  std::to_string(limit) + "] for method " +
                                                  std::string(to_string(config.method)));
    }
  }
  if (config.replicates < 100) {
    throw Error(ErrorKind::InvalidArgument, "replicates must be >= 100");
  }
  if (config.eta == EtaChoice::CustomMatrix &&
      (config.eta_matrix.rows() != static_cast<Eigen::Index>(config.problem.rho0.size()) ||
       config.eta_matrix.cols() != static_cast<Eigen::Index>(config.problem.rho1.size()))) {
    throw Error(ErrorKind::InvalidArgument, "custom eta must be m0 x m1");
  }
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

LimitParameters limit_parameters(const SolvedProblem& solved, const Eigen::MatrixXd& eta) {
  const FirstOrderKernels fk = first_order_kernels(eta, solved.kernel, solved.ops);
  const SecondOrderKernels sk = second_order_kernels(eta, solved.kernel, solved.ops, fk);
  LimitParameters l;
  l.theta = fk.theta;
  l.sigma2 = fk.sigma2;
  l.theta11p = sk.theta11p;
  l.gamma = sk.gamma;
  l.s = solved.ops.s().tail(solved.ops.s().size() - 1);
  return l;
}

ExperimentResult run_clt(const ExperimentConfig& config) {
  const Context ctx = make_context(config);
  if (ctx.fk.sigma2 <= kZeroVariance) {
    throw Error(ErrorKind::DegenerateVariance,
                "sigma^2 = " + fmt(ctx.fk.sigma2) + "; use the second-order experiment");
  }
  const SampleSource source = config.source.value_or(SampleSource::Product);
  ExperimentResult res = start("clt", config, ctx, source);
  const double theta = ctx.fk.theta;
  const double sd = std::sqrt(ctx.fk.sigma2);
  for (std::size_t n : config.n_values) {
    PerN p = collect(config, ctx, n, source);
    const double rn = std::sqrt(static_cast<double>(n));
    p.statistic.resize(p.t_n.size());
    p.remainder.resize(p.t_n.size());
    for (std::size_t r = 0; r < p.t_n.size(); ++r) {
      p.statistic[r] = rn * (p.t_n[r] - theta);
      p.remainder[r] = p.t_n[r] - theta - p.first_chaos[r];
    }
    p.stat_moments = moments(p.statistic);
    const double ratio = p.stat_moments.variance / ctx.fk.sigma2;
    const double ks = ks_distance(p.statistic, [sd](double x) { return normal_cdf(x, 0.0, sd); });
    p.summary = {{"statistic", "sqrt(N)(T_N - theta)"},
                 {"moments", moments_json(p.stat_moments)},
                 {"variance_ratio", ratio},
                 {"ks_normal", ks}};
    res.checks.push_back({label("variance within 15% of sigma^2", n), std::fabs(ratio - 1.0),
                          0.15, std::fabs(ratio - 1.0) <= 0.15});
    res.checks.push_back({label("KS to Normal(0, sigma^2)", n), ks, 0.05, ks <= 0.05});
    res.per_n.push_back(std::move(p));
  }
  return res;
}

ExperimentResult run_second_order(const ExperimentConfig& config) {
  const Context ctx = make_context(config);
  if (ctx.fk.sigma2 > kZeroVariance) {
    throw Error(ErrorKind::NotDegenerateFirstOrder,
                "sigma^2 = " + fmt(ctx.fk.sigma2) + "; use the CLT experiment");
  }
  const SampleSource source = config.source.value_or(SampleSource::Product);
  ExperimentResult res = start("second-order", config, ctx, source);
  const std::size_t draws =
      config.reference_draws == 0 ? 10 * config.replicates : config.reference_draws;
  const std::vector<double> reference = simulate_second_order_limit(
      ctx.limits.gamma, ctx.limits.s, draws, mix64(config.seed ^ 0x2d358dccaa6c78a5ULL),
      config.threads);
  const Moments ref_m = moments(reference);
  res.summary["reference_draws"] = draws;
  res.summary["reference_moments"] = moments_json(ref_m);

  const double theta = ctx.fk.theta;
  for (std::size_t n : config.n_values) {
    PerN p = collect(config, ctx, n, source);
    const double dn = static_cast<double>(n);
    p.statistic.resize(p.t_n.size());
    p.remainder.resize(p.t_n.size());
    for (std::size_t r = 0; r < p.t_n.size(); ++r) {
      p.statistic[r] = dn * (p.t_n[r] - theta) + ctx.sk.theta11p;
      p.remainder[r] = dn * (p.t_n[r] - theta - p.second_chaos[r]);
    }
    p.stat_moments = moments(p.statistic);
    const double ks = ks_two_sample(p.statistic, reference);
    const double z = p.stat_moments.std_error > 0.0
                         ? std::fabs(p.stat_moments.mean) / p.stat_moments.std_error
                         : (p.stat_moments.mean == 0.0 ? 0.0 : kNaN);
    p.summary = {{"statistic", "N(T_N - theta) + theta11p"},
                 {"moments", moments_json(p.stat_moments)},
                 {"ks_two_sample", ks},
                 {"mean_in_std_errors", z},
                 {"remainder_moments", moments_json(moments(p.remainder))}};
    res.checks.push_back({label("two-sample KS to limit draws", n), ks, 0.08, ks <= 0.08});
    res.checks.push_back({label("mean within 4 SE of 0", n), z, 4.0, z <= 4.0});
    res.per_n.push_back(std::move(p));
  }
  return res;
}

ExperimentResult run_remainder_decay(const ExperimentConfig& config) {
  for (std::size_t n : config.n_values) {
    if (n < 4 || n > 14) throw Error(ErrorKind::InvalidArgument, "remainder needs N in [4, 14]");
  }
  const Context ctx = make_context(config);
  const SampleSource source = config.source.value_or(SampleSource::Bridge);
  ExperimentResult res = start("remainder", config, ctx, source);
  const double theta = ctx.fk.theta;
  std::vector<double> log_n;
  std::vector<double> log_var;
  bool all_zero = true;
  for (std::size_t n : config.n_values) {
    PerN p = collect(config, ctx, n, source);
    p.remainder.resize(p.t_n.size());
    for (std::size_t r = 0; r < p.t_n.size(); ++r) {
      p.remainder[r] = p.t_n[r] - theta - p.first_chaos[r];
    }
    p.statistic = p.remainder;
    p.stat_moments = moments(p.statistic);
    const double var = p.stat_moments.variance;
    // rounding noise from a constant eta is not a remainder
    const bool zero = var <= 1e-24;
    if (!zero) all_zero = false;
    log_n.push_back(std::log(static_cast<double>(n)));
    log_var.push_back(zero ? kNaN : std::log(var));
    p.summary = {{"statistic", "T_N - theta - L1"}, {"moments", moments_json(p.stat_moments)}};
    res.per_n.push_back(std::move(p));
  }
  const double slope = all_zero ? kNaN : ls_slope(log_n, log_var);
  res.summary["slope"] = slope;
  res.summary["slope_defined"] = !std::isnan(slope);
  if (!std::isnan(slope)) {
    res.checks.push_back({"log-log slope of Var(T_N - theta - L1)", slope, -1.7, slope <= -1.7});
  }
  return res;
}

ExperimentResult run_unbiasedness(const ExperimentConfig& config) {
  const Context ctx = make_context(config);
  const SampleSource source = config.source.value_or(SampleSource::Bridge);
  ExperimentResult res = start("unbiased", config, ctx, source);
  const double theta = ctx.fk.theta;
  for (std::size_t n : config.n_values) {
    PerN p = collect(config, ctx, n, source);
    p.statistic = p.t_n;
    p.remainder.resize(p.t_n.size());
    for (std::size_t r = 0; r < p.t_n.size(); ++r) {
      p.remainder[r] = p.t_n[r] - theta - p.first_chaos[r];
    }
    p.stat_moments = moments(p.statistic);
    const double bias = p.stat_moments.mean - theta;
    const double se = p.stat_moments.std_error;
    const double z = se > 0.0 ? std::fabs(bias) / se : (bias == 0.0 ? 0.0 : kNaN);
    p.summary = {{"statistic", "T_N"},
                 {"moments", moments_json(p.stat_moments)},
                 {"bias", bias},
                 {"bias_in_std_errors", z}};
    if (source == SampleSource::Bridge) {
      res.checks.push_back({label("|mean(T_N) - theta| within 3 SE", n), z, 3.0, z <= 3.0});
    }
    res.per_n.push_back(std::move(p));
  }
  return res;
}

ExperimentResult run_compare_with_cuturi(const ExperimentConfig& config) {
  for (std::size_t n : config.n_values) {
    if (n > 14) throw Error(ErrorKind::InvalidArgument, "compare-cuturi needs N <= 14");
  }
  const Context ctx = make_context(config);
  const SampleSource source = config.source.value_or(SampleSource::Product);
  ExperimentResult res = start("compare-cuturi", config, ctx, source);
  for (std::size_t n : config.n_values) {
    PerN p = collect(config, ctx, n, source, true);
    p.statistic = p.extra[2].second;
    p.remainder.assign(p.t_n.size(), kNaN);
    p.stat_moments = moments(p.statistic);
    p.summary = {{"statistic", "<C, M_perm> - <C, M_cuturi>"},
                 {"permanent_cost", moments_json(moments(p.extra[0].second))},
                 {"cuturi_cost", moments_json(moments(p.extra[1].second))},
                 {"difference", moments_json(p.stat_moments)},
                 {"difference_quantiles", quantiles_json(p.statistic)}};
    res.per_n.push_back(std::move(p));
  }
  return res;
}

nlohmann::ordered_json to_json(const LimitParameters& limits) {
  nlohmann::ordered_json gamma = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < limits.gamma.rows(); ++k) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index l = 0; l < limits.gamma.cols(); ++l) row.push_back(limits.gamma(k, l));
    gamma.push_back(row);
  }
  std::vector<double> s(limits.s.data(), limits.s.data() + limits.s.size());
  return {{"theta", limits.theta},
          {"sigma2", limits.sigma2},
          {"theta11p", limits.theta11p},
          {"gamma", gamma},
          {"s", s}};
}

nlohmann::ordered_json to_json(const Check& check) {
  return {{"name", check.name},
          {"value", check.value},
          {"threshold", check.threshold},
          {"passed", check.passed}};
}

std::vector<std::string> write_result(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  const std::string stem = result.experiment + "_" + result.fixture + "_";
  const std::string seed = std::to_string(result.seed);
  const nlohmann::ordered_json limits = to_json(result.limits);

  for (const PerN& p : result.per_n) {
    const std::string base = (fs::path(dir) / (stem + std::to_string(p.n) + "_" + seed)).string();
    nlohmann::ordered_json j = {{"experiment", result.experiment},
                                {"fixture", result.fixture},
                                {"seed", result.seed},
                                {"n", p.n},
                                {"replicates", p.t_n.size()},
                                {"source", std::string(to_string(result.source))},
                                {"limits", limits},
                                {"summary", p.summary}};
    std::ofstream js(base + ".json");
    js << j.dump(2) << '\n';
    written.push_back(base + ".json");

    std::ofstream csv(base + ".csv");
    csv << "replicate,t_n,l_n,statistic,first_chaos,second_chaos,remainder";
    for (const auto& [name, col] : p.extra) csv << ',' << name;
    csv << '\n';
    for (std::size_t r = 0; r < p.t_n.size(); ++r) {
      csv << r << ',' << fmt(p.t_n[r]) << ',' << fmt(p.l_n[r]) << ','
          << fmt(r < p.statistic.size() ? p.statistic[r] : kNaN) << ',' << fmt(p.first_chaos[r])
          << ',' << fmt(p.second_chaos[r]) << ','
          << fmt(r < p.remainder.size() ? p.remainder[r] : kNaN);
      for (const auto& [name, col] : p.extra) csv << ',' << fmt(col[r]);
      csv << '\n';
    }
    written.push_back(base + ".csv");
  }

  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const Check& c : result.checks) checks.push_back(to_json(c));
  std::vector<std::size_t> ns;
  for (const PerN& p : result.per_n) ns.push_back(p.n);
  nlohmann::ordered_json summary = {{"experiment", result.experiment},
                                    {"fixture", result.fixture},
                                    {"seed", result.seed},
                                    {"source", std::string(to_string(result.source))},
                                    {"n_values", ns},
                                    {"limits", limits},
                                    {"summary", result.summary},
                                    {"checks", checks},
                                    {"passed", result.passed()}};
  const std::string path = (fs::path(dir) / (stem + "summary_" + seed + ".json")).string();
  std::ofstream out(path);
  out << summary.dump(2) << '\n';
  written.push_back(path);
  return written;
}

}  // namespace schro
