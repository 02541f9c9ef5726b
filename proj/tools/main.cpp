// smalldev: small-deviation probabilities for random walks and Brownian
// motion, critically-scaled weighted series, integral tests, and a
// reproducible parallel Monte Carlo engine.  Every emitted record carries
// its full parameter set, seed and version so it can be re-run verbatim.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smalldev/analytic.hpp"
#include "smalldev/distributions.hpp"
#include "smalldev/errors.hpp"
#include "smalldev/montecarlo.hpp"
#include "smalldev/version.hpp"
#include "smalldev/weights.hpp"

namespace an = smalldev::analytic;
namespace w = smalldev::weights;
namespace mc = smalldev::mc;
using nlohmann::json;

namespace {

// Shortest decimal that round-trips the double, so records re-parse
// bit-exactly.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

// RFC-4180 quoting for cells carrying commas (grid parameters).
std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string quoted = "\"";
  for (const char ch : cell) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  quoted += '"';
  return quoted;
}

struct Row {
  std::vector<std::string> param_values;
  std::string metric;
  std::string value;
  std::string stderr_col;
  std::string reference;
  std::string deviation;
};

struct Record {
  std::string command;
  std::vector<std::string> param_names;
  std::vector<Row> rows;
  std::string seed;  // empty for analytic commands

  void add(std::vector<std::string> params, std::string metric, std::string value,
           std::string se = "", std::string ref = "", std::string dev = "") {
    rows.push_back({std::move(params), std::move(metric), std::move(value),
                    std::move(se), std::move(ref), std::move(dev)});
  }
};

void emit_csv(const Record& rec, std::ostream& os) {
  os << "command";
  for (const auto& name : rec.param_names) os << ",param." << name;
  os << ",metric,value,stderr,reference,deviation,seed,version\n";
  for (const auto& row : rec.rows) {
    os << rec.command;
    for (const auto& v : row.param_values) os << ',' << csv_escape(v);
    os << ',' << row.metric << ',' << row.value << ',' << row.stderr_col << ','
       << row.reference << ',' << row.deviation << ',' << rec.seed << ','
       << smalldev::kVersion << '\n';
  }
}

void emit_json(const Record& rec, std::ostream& os) {
  json j;
  j["command"] = rec.command;
  j["seed"] = rec.seed;
  j["version"] = smalldev::kVersion;
  j["rows"] = json::array();
  for (const auto& row : rec.rows) {
    json r;
    json params = json::object();
    for (std::size_t i = 0; i < rec.param_names.size(); ++i) {
      params[rec.param_names[i]] = row.param_values[i];
    }
    r["params"] = params;
    r["metric"] = row.metric;
    r["value"] = row.value;
    r["stderr"] = row.stderr_col;
    r["reference"] = row.reference;
    r["deviation"] = row.deviation;
    j["rows"].push_back(r);
  }
  os << j.dump(2) << '\n';
}

// JSON config file support: top-level keys are global options, nested
// objects are subcommand sections.  Command-line flags win because CLI11
// applies config values only to options not already set.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    input >> j;
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void flatten(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        flatten(value, deeper, out);
      } else {
        CLI::ConfigItem item;
        item.parents = parents;
        item.name = key;
        if (value.is_array()) {
          for (const auto& e : value) item.inputs.push_back(scalar(e));
        } else {
          item.inputs.push_back(scalar(value));
        }
        out.push_back(item);
      }
    }
  }
};

std::uint64_t parse_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    const std::uint64_t value = std::stoull(text, &used, 0);  // decimal or 0x-hex
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("seed must be a decimal or 0x-hex 64-bit value, got '" +
                                text + "'");
  }
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SMALLDEV_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<long long> parse_count_grid(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const double v = std::stod(item);  // accepts 1e3 style
    if (!(v >= 1.0)) throw std::invalid_argument("grid entries must be >= 1: " + item);
    out.push_back(std::llround(v));
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

std::vector<double> parse_double_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

// "5..30" or "5,7,9"
std::vector<int> parse_int_range(const std::string& text) {
  const auto dots = text.find("..");
  std::vector<int> out;
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("range must be ascending: " + text);
    for (int k = lo; k <= hi; ++k) out.push_back(k);
  } else {
    for (const double v : parse_double_grid(text)) out.push_back(static_cast<int>(v));
  }
  return out;
}

struct DistOptions {
  std::string dist = "rademacher";
  double half_width = 1.7320508075688772;  // sigma^2 = 1
  double v = 10.0;
  double prob = -1.0;  // < 0: choose 1/(1+v^2) so sigma^2 = 1
  double c = 1.0;
  int kmax = 6;

  mc::DistributionSpec make() const {
    if (dist == "rademacher") return mc::DistributionSpec::rademacher();
    if (dist == "normal") return mc::DistributionSpec::std_normal();
    if (dist == "uniform") return mc::DistributionSpec::centered_uniform(half_width);
    if (dist == "twopoint") {
      const double p = prob > 0.0 ? prob : 1.0 / (1.0 + v * v);
      return mc::DistributionSpec::two_point(v, p);
    }
    if (dist == "atoms") return mc::DistributionSpec::atoms_doubly_exp(c, kmax);
    throw std::invalid_argument("unknown --dist '" + dist +
                                "' (rademacher|normal|uniform|twopoint|atoms)");
  }

  void add_params(std::vector<std::string>& names, std::vector<std::string>& values) const {
    names.push_back("dist");
    values.push_back(dist);
    if (dist == "uniform") {
      names.push_back("w");
      values.push_back(fmt(half_width));
    } else if (dist == "twopoint") {
      names.push_back("v");
      values.push_back(fmt(v));
      names.push_back("prob");
      values.push_back(fmt(prob > 0.0 ? prob : 1.0 / (1.0 + v * v)));
    } else if (dist == "atoms") {
      names.push_back("c");
      values.push_back(fmt(c));
      names.push_back("kmax");
      values.push_back(fmt(kmax));
    }
  }
};

void add_dist_options(CLI::App* cmd, DistOptions& o) {
  cmd->add_option("--dist", o.dist, "step law: rademacher|normal|uniform|twopoint|atoms");
  cmd->add_option("--w", o.half_width, "uniform half-width (default sqrt(3))");
  cmd->add_option("--v", o.v, "twopoint large atom");
  cmd->add_option("--prob", o.prob, "twopoint P(X = v); default 1/(1+v^2) for unit variance");
  cmd->add_option("--c", o.c, "atoms scale c");
  cmd->add_option("--kmax", o.kmax, "atoms count (sampling needs <= 6)");
}

// ---------------------------------------------------------------------------
// command runners

Record run_smallball(double x, double tol) {
  const auto r = an::small_ball_sup(x, tol);
  const double asym = an::small_ball_asymptotic(x);
  const auto bounds = an::small_ball_bounds(x);
  Record rec;
  rec.command = "smallball";
  rec.param_names = {"x", "tol"};
  const std::vector<std::string> p{fmt(x), fmt(tol)};
  rec.add(p, "probability", fmt(r.value), "", fmt(asym), fmt(r.value - asym));
  rec.add(p, "representation", an::to_string(r.representation));
  rec.add(p, "terms_used", fmt(r.terms_used));
  rec.add(p, "error_bound", fmt(r.error_bound));
  rec.add(p, "asymptotic", fmt(asym));
  rec.add(p, "lower_bound", fmt(bounds.lower));
  rec.add(p, "upper_bound", fmt(bounds.upper));
  return rec;
}

Record run_constants(int theorem, double a, double b, double tau) {
  an::LimitConstant constant;
  if (theorem == 1) {
    constant = an::LimitConstant::t1(a, b, tau);
  } else if (theorem == 2) {
    constant = an::LimitConstant::t2(b);
  } else {
    throw std::invalid_argument("--theorem must be 1 or 2");
  }
  Record rec;
  rec.command = "constants";
  rec.param_names = {"theorem", "a", "b", "tau"};
  const std::vector<std::string> p{fmt(theorem), fmt(a), fmt(b), fmt(tau)};
  rec.add(p, "constant", fmt(constant.value));
  rec.add(p, "family", an::to_string(constant.theorem));
  return rec;
}

Record run_series(double a, double b, const std::string& eps_text, long long nmax,
                  const std::string& mode, double tau) {
  const auto eps_grid = parse_double_grid(eps_text);
  const w::WeightParams params{a, b};
  Record rec;
  rec.command = "series";
  rec.param_names = {"a", "b", "eps", "nmax", "mode", "tau"};
  const double tau_factor = std::exp(2.0 * std::pow(1.0 + a, 1.5) * tau);
  const double limit = an::theorem1_constant(a, b, tau);
  if (mode == "direct") {
    for (const double eps : eps_grid) {
      const auto r = w::kernel_sum_direct(params, eps, nmax);
      const std::vector<std::string> p{fmt(a), fmt(b), fmt(eps), fmt(nmax), mode, fmt(tau)};
      rec.add(p, "partial_sum", fmt(r.partial_sum));
      rec.add(p, "tail_bound", fmt(r.tail_bound));
      const double scaled = r.scaled_value * tau_factor;
      rec.add(p, "scaled_value", fmt(scaled), "", fmt(limit), fmt(scaled / limit - 1.0));
    }
  } else if (mode == "integral") {
    const auto points = w::scaled_limit_check(params, tau, eps_grid);
    for (const auto& pt : points) {
      const std::vector<std::string> p{fmt(a), fmt(b), fmt(pt.eps), fmt(nmax), mode, fmt(tau)};
      rec.add(p, "integral_value", fmt(w::kernel_sum_integral(params, pt.eps)));
      rec.add(p, "scaled_value", fmt(pt.scaled_value), "", fmt(limit), fmt(pt.deviation));
    }
  } else {
    throw std::invalid_argument("--mode must be direct or integral");
  }
  return rec;
}

Record run_mc(const DistOptions& dopt, long long n, double eps, double tau, long long reps,
              std::uint64_t seed, int threads) {
  const auto dist = dopt.make();
  const auto est = mc::estimate_small_dev(dist, n, eps, w::EpsilonSchedule::constant_tau(tau),
                                          reps, seed, threads);
  const double x_eff = est.threshold / (dist.sigma() * std::sqrt(static_cast<double>(n)));
  const double reference = x_eff > 0.0 ? an::small_ball_sup(x_eff).value : 0.0;
  Record rec;
  rec.command = "mc";
  rec.seed = fmt(seed);
  std::vector<std::string> values;
  dopt.add_params(rec.param_names, values);
  rec.param_names.insert(rec.param_names.end(), {"n", "eps", "tau", "reps", "threads"});
  values.insert(values.end(), {fmt(n), fmt(eps), fmt(tau), fmt(reps), fmt(threads)});
  rec.add(values, "p_hat", fmt(est.p_hat), fmt(est.stderr_value), fmt(reference),
          fmt(est.p_hat - reference));
  rec.add(values, "threshold", fmt(est.threshold));
  rec.add(values, "analytic_reference", fmt(reference));
  return rec;
}

Record run_sweep(const DistOptions& dopt, double eps, const std::string& grid_text,
                 long long reps, std::uint64_t seed, int threads) {
  const auto dist = dopt.make();
  const auto grid = parse_count_grid(grid_text);
  const auto reg = mc::rate_regression(dist, eps, grid, reps, seed, threads);
  Record rec;
  rec.command = "sweep";
  rec.seed = fmt(seed);
  std::vector<std::string> base;
  dopt.add_params(rec.param_names, base);
  rec.param_names.insert(rec.param_names.end(), {"eps", "ngrid", "reps", "n"});
  base.insert(base.end(), {fmt(eps), grid_text, fmt(reps)});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto p = base;
    p.push_back(fmt(grid[i]));
    const double x = eps * std::sqrt(an::kPi * an::kPi /
                                     (8.0 * w::guarded_loglog(static_cast<double>(grid[i]))));
    const double reference = an::small_ball_sup(x).value;
    const double se = std::sqrt(reg.p_hats[i] * (1.0 - reg.p_hats[i]) /
                                static_cast<double>(reps));
    rec.add(p, "p_hat", fmt(reg.p_hats[i]), fmt(se), fmt(reference),
            fmt(reg.p_hats[i] - reference));
  }
  auto p = base;
  p.push_back("");
  rec.add(p, "slope", fmt(reg.slope), "", fmt(reg.expected_slope),
          fmt(reg.slope - reg.expected_slope));
  rec.add(p, "intercept", fmt(reg.intercept));
  rec.add(p, "expected_slope", fmt(reg.expected_slope));
  return rec;
}

Record run_truncate(const DistOptions& dopt, long long n, double p_exp, long long reps,
                    std::uint64_t seed, int threads) {
  const auto dist = dopt.make();
  const auto st = mc::truncation_stats(dist, n, p_exp, reps, seed, threads);
  Record rec;
  rec.command = "truncate";
  rec.seed = fmt(seed);
  std::vector<std::string> values;
  dopt.add_params(rec.param_names, values);
  rec.param_names.insert(rec.param_names.end(), {"n", "p", "reps"});
  values.insert(values.end(), {fmt(n), fmt(p_exp), fmt(reps)});
  rec.add(values, "threshold", fmt(st.threshold));
  rec.add(values, "b_n", fmt(st.b_n));
  rec.add(values, "b_n_over_nsigma2", fmt(st.b_n_over_nsigma2), "", fmt(1.0),
          fmt(st.b_n_over_nsigma2 - 1.0));
  rec.add(values, "b_n_empirical", fmt(st.b_n_empirical), "", fmt(st.b_n),
          fmt(st.b_n_empirical - st.b_n));
  for (const auto& [q, v] : st.delta_quantiles) {
    rec.add(values, "delta_q" + fmt(static_cast<long long>(std::llround(q * 100))), fmt(v));
  }
  return rec;
}

Record run_integral_test(const std::string& family, double c, double a, double b,
                         long long nmax) {
  if (family != "c-loglog") {
    throw std::invalid_argument("--family must be c-loglog");
  }
  const w::WeightParams params{a, b};
  const auto verdict = w::classify_psi_family(c, params);
  const auto psi = w::PsiSpec::c_over_sqrt_loglog(c);
  const auto jab = w::j_ab_partial(psi, params, nmax);
  const auto jch = w::j_chung_partial(psi, nmax);
  const bool boundary = std::fabs(c - w::critical_epsilon(params)) <= 1e-12;
  Record rec;
  rec.command = "integral-test";
  rec.param_names = {"family", "c", "a", "b", "nmax"};
  const std::vector<std::string> p{family, fmt(c), fmt(a), fmt(b), fmt(nmax)};
  rec.add(p, "verdict", w::to_string(verdict));
  rec.add(p, "boundary_case", boundary ? "true" : "false");
  rec.add(p, "j_ab_partial", fmt(jab.partial_sum));
  rec.add(p, "j_chung_partial", fmt(jch.partial_sum));
  return rec;
}

Record run_condition(const DistOptions& dopt, const std::string& tgrid,
                     const std::string& kgrid) {
  const auto dist = dopt.make();
  std::vector<double> log_ts;
  std::string grid_text;
  if (!tgrid.empty() && !kgrid.empty()) {
    throw std::invalid_argument("pass exactly one of --tgrid / --kgrid");
  }
  if (!tgrid.empty()) {
    grid_text = tgrid;
    for (const double t : parse_double_grid(tgrid)) {
      if (!(t >= 1.0)) throw std::invalid_argument("--tgrid values must be >= 1");
      log_ts.push_back(std::log(t));
    }
  } else if (!kgrid.empty()) {
    grid_text = kgrid;
    for (const int k : parse_int_range(kgrid)) {
      log_ts.push_back(std::exp(static_cast<double>(k)));  // ln x_k = e^k
    }
  } else {
    throw std::invalid_argument("pass one of --tgrid / --kgrid");
  }
  const auto rows = mc::condition_profile(dist, log_ts);
  Record rec;
  rec.command = "condition";
  std::vector<std::string> base;
  dopt.add_params(rec.param_names, base);
  rec.param_names.insert(rec.param_names.end(), {"grid", "log_t"});
  base.push_back(grid_text);
  for (const auto& [log_t, value] : rows) {
    auto p = base;
    p.push_back(fmt(log_t));
    rec.add(p, "profile", fmt(value));
  }
  return rec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-deviation asymptotics toolkit"};
  app.set_version_flag("--version", smalldev::kVersion);
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.config_formatter(std::make_shared<JsonConfig>());

  std::string format = "csv";
  std::string out_path;
  app.add_option("--format", format, "output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", out_path, "output file (default stdout)");

  Record record;

  // smallball
  double sb_x = 1.0;
  double sb_tol = 1e-12;
  auto* smallball = app.add_subcommand("smallball", "P(sup |W| <= x) with bounds");
  smallball->add_option("--x", sb_x, "band half-width x > 0");
  smallball->add_option("--tol", sb_tol, "series tolerance in (0, 1e-6]");
  smallball->callback([&] { record = run_smallball(sb_x, sb_tol); });

  // constants
  int ct_theorem = 1;
  double ct_a = 0.0, ct_b = 0.0, ct_tau = 0.0;
  auto* constants = app.add_subcommand("constants", "closed-form limit constants");
  constants->add_option("--theorem", ct_theorem, "1 or 2");
  constants->add_option("--a", ct_a, "log-weight exponent a > -1");
  constants->add_option("--b", ct_b, "loglog-weight exponent b > -1");
  constants->add_option("--tau", ct_tau, "boundary shift tau");
  constants->callback([&] { record = run_constants(ct_theorem, ct_a, ct_b, ct_tau); });

  // series
  double se_a = 0.0, se_b = 0.0, se_tau = 0.0;
  std::string se_eps = "0.5";
  std::string se_mode = "integral";
  long long se_nmax = 10000000;
  auto* series = app.add_subcommand("series", "critically-scaled kernel sums");
  series->add_option("--a", se_a, "exponent a > -1");
  series->add_option("--b", se_b, "exponent b > -1");
  series->add_option("--eps", se_eps, "comma-separated eps grid");
  series->add_option("--nmax", se_nmax, "direct-mode summation cutoff");
  series->add_option("--mode", se_mode, "direct|integral");
  series->add_option("--tau", se_tau, "boundary shift tau");
  series->callback([&] { record = run_series(se_a, se_b, se_eps, se_nmax, se_mode, se_tau); });

  // mc
  DistOptions mc_dist;
  long long mc_n = 10000, mc_reps = 100000;
  double mc_eps = 1.0, mc_tau = 0.0;
  std::string mc_seed = "42";
  int mc_threads = 0;
  auto* cmd_mc = app.add_subcommand("mc", "estimate P(M_n <= sigma phi(n) (eps + a_n))");
  add_dist_options(cmd_mc, mc_dist);
  cmd_mc->add_option("--n", mc_n, "walk length");
  cmd_mc->add_option("--eps", mc_eps, "band multiplier eps");
  cmd_mc->add_option("--tau", mc_tau, "boundary shift tau (a_n = tau/loglog n)");
  cmd_mc->add_option("--reps", mc_reps, "replications (>= 100)");
  cmd_mc->add_option("--seed", mc_seed, "seed, decimal or 0x-hex");
  cmd_mc->add_option("--threads", mc_threads, "worker threads (default: SMALLDEV_THREADS or hardware)");
  cmd_mc->callback([&] {
    record = run_mc(mc_dist, mc_n, mc_eps, mc_tau, mc_reps, parse_seed(mc_seed),
                    resolve_threads(mc_threads));
  });

  // sweep
  DistOptions sw_dist;
  double sw_eps = 1.0;
  std::string sw_grid = "1e3,1e4,1e5,1e6";
  long long sw_reps = 100000;
  std::string sw_seed = "42";
  int sw_threads = 0;
  auto* sweep = app.add_subcommand("sweep", "rate regression over an n grid");
  add_dist_options(sweep, sw_dist);
  sweep->add_option("--eps", sw_eps, "band multiplier eps");
  sweep->add_option("--ngrid", sw_grid, "comma-separated n grid (>= 4 points)");
  sweep->add_option("--reps", sw_reps, "replications per n");
  sweep->add_option("--seed", sw_seed, "seed, decimal or 0x-hex");
  sweep->add_option("--threads", sw_threads, "worker threads");
  sweep->callback([&] {
    record = run_sweep(sw_dist, sw_eps, sw_grid, sw_reps, parse_seed(sw_seed),
                       resolve_threads(sw_threads));
  });

  // truncate
  DistOptions tr_dist;
  long long tr_n = 10000, tr_reps = 1000;
  double tr_p = 0.25;
  std::string tr_seed = "42";
  int tr_threads = 0;
  auto* truncate = app.add_subcommand("truncate", "truncation diagnostics B_n and Delta_n");
  add_dist_options(truncate, tr_dist);
  truncate->add_option("--n", tr_n, "walk length");
  truncate->add_option("--p", tr_p, "truncation exponent in (0, 1/2)");
  truncate->add_option("--reps", tr_reps, "replications for Delta_n quantiles");
  truncate->add_option("--seed", tr_seed, "seed, decimal or 0x-hex");
  truncate->add_option("--threads", tr_threads, "worker threads");
  truncate->callback([&] {
    record = run_truncate(tr_dist, tr_n, tr_p, tr_reps, parse_seed(tr_seed),
                          resolve_threads(tr_threads));
  });

  // integral-test
  std::string it_family = "c-loglog";
  double it_c = 1.0, it_a = 0.0, it_b = 0.0;
  long long it_nmax = 1000000;
  auto* integral_test = app.add_subcommand("integral-test", "J and J_ab verdict for psi_c");
  integral_test->add_option("--family", it_family, "boundary family (c-loglog)");
  integral_test->add_option("--c", it_c, "psi_c scale c > 0");
  integral_test->add_option("--a", it_a, "exponent a > -1");
  integral_test->add_option("--b", it_b, "exponent b > -1");
  integral_test->add_option("--nmax", it_nmax, "partial-sum cutoff");
  integral_test->callback([&] {
    record = run_integral_test(it_family, it_c, it_a, it_b, it_nmax);
  });

  // condition
  DistOptions cd_dist;
  std::string cd_tgrid, cd_kgrid;
  auto* condition = app.add_subcommand("condition", "loglog t * E[X^2 1{|X|>=t}] profile");
  add_dist_options(condition, cd_dist);
  condition->add_option("--tgrid", cd_tgrid, "comma-separated t values (>= 1)");
  condition->add_option("--kgrid", cd_kgrid, "atom indices, e.g. 5..30 (t = exp(e^k))");
  condition->callback([&] { record = run_condition(cd_dist, cd_tgrid, cd_kgrid); });

  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough(true);  // --format/--out work after the subcommand too
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // unknown flags / malformed values are parameter errors
  } catch (const smalldev::CapabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const smalldev::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot open " << out_path << '\n';
      return 1;
    }
    os = &file;
  }
  if (format == "json") {
    emit_json(record, *os);
  } else {
    emit_csv(record, *os);
  }
  return 0;
}
