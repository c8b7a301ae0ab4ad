#include "mlg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlg/mlmc.hpp"
#include "mlg/payoff.hpp"

namespace mlg {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::levels: return "levels";
    case Mode::mlmc: return "mlmc";
    case Mode::density: return "density";
    case Mode::compare: return "compare";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// parsing helpers

Mode parse_mode(const std::string& s) {
  if (s == "levels") return Mode::levels;
  if (s == "mlmc") return Mode::mlmc;
  if (s == "density") return Mode::density;
  if (s == "compare") return Mode::compare;
  throw std::invalid_argument("unknown mode: " + s);
}

Method parse_method(const std::string& s) {
  if (s == "pathwise") return Method::pathwise;
  if (s == "cond_exp") return Method::cond_exp;
  if (s == "split") return Method::split;
  if (s == "vibrato") return Method::vibrato;
  throw std::invalid_argument("unknown method: " + s);
}

PayoffKind parse_payoff(const std::string& s) {
  if (s == "call") return PayoffKind::call;
  if (s == "digital") return PayoffKind::digital;
  if (s == "lookback") return PayoffKind::lookback;
  if (s == "barrier") return PayoffKind::barrier;
  if (s == "barrier_smooth") return PayoffKind::barrier_smooth;
  throw std::invalid_argument("unknown payoff: " + s);
}

GridKind parse_grid(const std::string& s) {
  if (s == "uniform") return GridKind::uniform;
  if (s == "power") return GridKind::power;
  throw std::invalid_argument("unknown grid: " + s);
}

// "auto" or a positive integer.
void parse_d(const std::string& s, SplitCountRule& rule) {
  if (s == "auto") {
    rule.adaptive = true;
    return;
  }
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("--d expects an integer or 'auto': " + s);
  }
  if (pos != s.size() || v < 1)
    throw std::invalid_argument("--d expects a positive integer or 'auto': " + s);
  rule.adaptive = false;
  rule.d = v;
}

void parse_level_range(const std::string& s, int& lo, int& hi) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stoi(s);
    } else {
      lo = std::stoi(s.substr(0, colon));
      hi = std::stoi(s.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("--levels expects MIN:MAX: " + s);
  }
}

// ---------------------------------------------------------------------------
// output helpers

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json triple_json(const GreekTriple& g) {
  // NaN components serialize as null.
  return {{"value", g.value}, {"delta", g.delta}, {"vega", g.vega}};
}

ordered_json stats_json(const LevelStats& st) {
  return {{"level", st.level},
          {"h", st.h},
          {"n", st.n_samples},
          {"mean", triple_json(st.mean)},
          {"variance", triple_json(st.variance)},
          {"mean_fine", triple_json(st.mean_fine)},
          {"var_fine", triple_json(st.var_fine)},
          {"mean_coarse", triple_json(st.mean_coarse)},
          {"var_coarse", triple_json(st.var_coarse)},
          {"cost", st.cost},
          {"n_rejected", st.n_rejected},
          {"n_nonfinite", st.n_nonfinite},
          {"reject_flagged", st.reject_flagged}};
}

// Config echo restricted to fields that determine the numbers. Output path
// and thread count are deliberately excluded so reruns with different worker
// counts or destinations produce byte-identical files.
ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j{{"mode", to_string(c.mode)},
                 {"s0", c.market.s0},
                 {"strike", c.market.strike},
                 {"rate", c.market.rate},
                 {"sigma", c.market.sigma},
                 {"maturity", c.market.maturity},
                 {"barrier", c.market.barrier ? ordered_json(*c.market.barrier)
                                              : ordered_json(nullptr)},
                 {"method", to_string(c.method_spec.method)},
                 {"payoff", to_string(c.method_spec.payoff_kind)},
                 {"d", c.method_spec.split_rule.adaptive
                           ? ordered_json("auto")
                           : ordered_json(c.method_spec.split_rule.d)},
                 {"split_c", c.method_spec.split_rule.c},
                 {"hstar", c.method_spec.h_star ? ordered_json(*c.method_spec.h_star)
                                                : ordered_json(nullptr)},
                 {"grid", c.method_spec.grid == GridKind::power ? "power" : "uniform"},
                 {"gamma", c.method_spec.gamma},
                 {"level_min", c.level_min},
                 {"level_max", c.level_max},
                 {"samples", c.samples_per_level},
                 {"eps", c.epsilon},
                 {"seed", c.seed}};
  if (c.mode == Mode::mlmc) {
    j["pilot"] = c.pilot;
    j["min_samples"] = c.min_samples;
    j["max_level"] = c.max_level;
  }
  return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const std::string& base, const ordered_json& j) {
  write_atomic(base + ".json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// shared validation

void check_common(const ExperimentConfig& c) {
  validate(c.market);
  if (c.output_path.empty())
    throw std::invalid_argument("output path required (--out or config \"out\")");
  if (c.n_threads < 0)
    throw std::invalid_argument("threads must be >= 0");
}

// For the modes that sweep an explicit level range; the adaptive driver uses
// max_level as its own cap instead.
void check_level_range(const ExperimentConfig& c) {
  if (c.level_min < 0)
    throw std::invalid_argument("level_min must be >= 0");
  if (c.level_max < c.level_min)
    throw std::invalid_argument("level_max must be >= level_min");
  if (c.level_max > c.max_level)
    throw std::invalid_argument("level_max exceeds the cap of " +
                                std::to_string(c.max_level));
}

struct FitReport {
  ordered_json per_output = ordered_json::object();
  int fit_min = 0;
  int fit_max = 0;
};

// Variance-decay and weak-rate fits over correction levels in range; an
// output absent from a fit reports nulls rather than failing the command.
FitReport fit_report(const std::vector<LevelStats>& stats, int level_min,
                     int level_max) {
  FitReport rep;
  rep.fit_min = std::max(1, level_min);
  rep.fit_max = level_max;
  for (Output out : {Output::value, Output::delta, Output::vega}) {
    ordered_json f{{"beta_hat", nullptr},
                   {"c2_hat", nullptr},
                   {"alpha_hat", nullptr},
                   {"alpha_unreliable", nullptr}};
    try {
      const RateFit rf = fit_rate(stats, out, rep.fit_min, rep.fit_max);
      f["beta_hat"] = rf.beta_hat;
      f["c2_hat"] = rf.c2_hat;
    } catch (const std::invalid_argument&) {
    }
    try {
      const WeakRateFit wf = fit_weak_rate(stats, out);
      f["alpha_hat"] = wf.alpha_hat;  // NaN dumps as null
      f["alpha_unreliable"] = wf.unreliable;
    } catch (const std::invalid_argument&) {
    }
    rep.per_output[to_string(out)] = f;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// commands

int levels_impl(const ExperimentConfig& c) {
  check_common(c);
  check_level_range(c);
  if (c.samples_per_level < 100)
    throw std::invalid_argument("levels mode needs samples >= 100");
  validate(c.method_spec, c.market);

  std::vector<LevelStats> stats;
  for (int level = c.level_min; level <= c.level_max; ++level)
    stats.push_back(collect_level(c.method_spec, c.market, level,
                                  c.samples_per_level, c.seed, c.n_threads));

  std::string csv = "# schema=mlgreeks-levels-v1\n";
  csv +=
      "level,h,n,mean_value,var_value,mean_delta,var_delta,mean_vega,var_vega,"
      "cost\n";
  for (const LevelStats& st : stats) {
    const double per_sample_cost =
        st.n_samples > 0 ? st.cost / static_cast<double>(st.n_samples) : 0.0;
    csv += std::to_string(st.level) + "," + fmt(st.h) + "," +
           std::to_string(st.n_samples) + "," + fmt(st.mean.value) + "," +
           fmt(st.variance.value) + "," + fmt(st.mean.delta) + "," +
           fmt(st.variance.delta) + "," + fmt(st.mean.vega) + "," +
           fmt(st.variance.vega) + "," + fmt(per_sample_cost) + "\n";
  }
  write_atomic(c.output_path + ".csv", csv);

  const FitReport fits = fit_report(stats, c.level_min, c.level_max);
  std::int64_t rejected = 0, nonfinite = 0;
  double total_cost = 0.0;
  ordered_json jlevels = ordered_json::array();
  for (const LevelStats& st : stats) {
    rejected += st.n_rejected;
    nonfinite += st.n_nonfinite;
    total_cost += st.cost;
    jlevels.push_back(stats_json(st));
  }
  ordered_json j{{"schema", "mlgreeks-levels-v1"},
                 {"config", config_json(c)},
                 {"levels", jlevels},
                 {"fit_range", {fits.fit_min, fits.fit_max}},
                 {"fits", fits.per_output},
                 {"totals",
                  {{"cost", total_cost},
                   {"n_rejected", rejected},
                   {"n_nonfinite", nonfinite}}}};
  write_json(c.output_path, j);
  return nonfinite > 0 ? 4 : 0;
}

ordered_json complexity_json(const std::optional<Complexity>& c) {
  if (!c) return nullptr;
  return ordered_json{{"class", to_string(c->cls)}, {"exponent", c->exponent}};
}

int mlmc_impl(const ExperimentConfig& c) {
  check_common(c);
  if (!(c.epsilon > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (c.pilot < 2) throw std::invalid_argument("pilot must be >= 2");
  if (c.min_samples < 2) throw std::invalid_argument("min_samples must be >= 2");
  validate(c.method_spec, c.market);

  MlmcOptions opts;
  opts.pilot = c.pilot;
  opts.min_samples = c.min_samples;
  opts.max_level = c.max_level;
  opts.n_threads = c.n_threads;
  const MlmcReport rep = run_mlmc(c.method_spec, c.market, c.epsilon, c.seed, opts);

  ordered_json jlevels = ordered_json::array();
  for (const LevelStats& st : rep.levels) jlevels.push_back(stats_json(st));
  ordered_json j{{"schema", "mlgreeks-mlmc-v1"},
                 {"config", config_json(c)},
                 {"epsilon", rep.epsilon},
                 {"converged", rep.converged},
                 {"estimates", triple_json(rep.estimates)},
                 {"std_errors", triple_json(rep.std_errors)},
                 {"beta_hat", triple_json(rep.beta_hat)},
                 {"alpha_hat", triple_json(rep.alpha_hat)},
                 {"complexity",
                  {{"value", complexity_json(rep.complexity_value)},
                   {"delta", complexity_json(rep.complexity_delta)},
                   {"vega", complexity_json(rep.complexity_vega)}}},
                 {"levels", jlevels},
                 {"total_cost", rep.total_cost},
                 {"total_rejected", rep.total_rejected},
                 {"total_nonfinite", rep.total_nonfinite}};
  write_json(c.output_path, j);
  if (rep.total_nonfinite > 0) return 4;
  return rep.converged ? 0 : 3;
}

int density_impl(const ExperimentConfig& c) {
  check_common(c);
  check_level_range(c);
  if (!c.market.barrier)
    throw std::invalid_argument("density mode needs a barrier");
  if (c.samples_per_level < 1)
    throw std::invalid_argument("density mode needs samples >= 1");
  const double barrier = *c.market.barrier;
  const double maturity = c.market.maturity;
  const int level = c.level_max;

  const TimeGrid grid =
      (c.method_spec.grid == GridKind::power && c.method_spec.gamma != 1.0)
          ? power_grid(1 << level, c.method_spec.gamma, maturity)
          : uniform_grid(level, maturity);
  const std::size_t n_steps = grid.steps();

  // First-crossing times sampled step by step: step n crosses when an
  // independent bridge uniform falls below crossing_prob for that step.
  CoupledPath path;
  std::vector<double> uniforms(n_steps);
  std::vector<double> times;
  const std::int64_t n_paths = c.samples_per_level;
  for (std::int64_t i = 0; i < n_paths; ++i) {
    SampleKey key{c.seed, static_cast<std::uint32_t>(level),
                  static_cast<std::uint64_t>(i), StreamTag::path};
    simulate_coupled(c.market, grid, nullptr, key, false, path);
    key.tag = StreamTag::bridge;
    uniform_stream(key, uniforms);
    for (std::size_t n = 0; n < n_steps; ++n) {
      const double s_l = path.fine_states[n].s;
      const double s_r = path.fine_states[n + 1].s;
      const double p = crossing_prob(s_l, s_r, barrier, c.market.sigma * s_l,
                                     grid.widths[n]);
      if (uniforms[n] < p) {
        times.push_back(0.5 * (grid.boundaries[n] + grid.boundaries[n + 1]));
        break;
      }
    }
  }

  constexpr int kBins = 64;
  std::vector<std::int64_t> counts(kBins, 0);
  for (double t : times) {
    int bin = static_cast<int>(t / maturity * kBins);
    counts[std::clamp(bin, 0, kBins - 1)]++;
  }
  const std::int64_t n_cross = static_cast<std::int64_t>(times.size());
  const double bin_width = maturity / kBins;

  std::string csv = "# schema=mlgreeks-density-v1\n";
  csv += "bin,t_lo,t_hi,count,density\n";
  for (int b = 0; b < kBins; ++b) {
    const double density =
        n_cross > 0
            ? static_cast<double>(counts[b]) /
                  (static_cast<double>(n_cross) * bin_width)
            : 0.0;
    csv += std::to_string(b) + "," + fmt(b * bin_width) + "," +
           fmt((b + 1) * bin_width) + "," + std::to_string(counts[b]) + "," +
           fmt(density) + "\n";
  }
  write_atomic(c.output_path + ".csv", csv);

  const double lr = std::log(c.market.s0 / barrier) / c.market.sigma;
  const double tau = lr * lr;
  ordered_json j{{"schema", "mlgreeks-density-v1"},
                 {"config", config_json(c)},
                 {"level", level},
                 {"n_paths", n_paths},
                 {"n_crossings", n_cross},
                 {"fraction_crossed",
                  static_cast<double>(n_cross) / static_cast<double>(n_paths)},
                 {"tau", tau},
                 {"median_crossing_time", nullptr},
                 {"frac_before_2tau", nullptr},
                 {"note", nullptr}};
  if (n_cross > 0) {
    std::sort(times.begin(), times.end());
    j["median_crossing_time"] = times[times.size() / 2];
    std::int64_t before = 0;
    for (double t : times)
      if (t <= 2.0 * tau) ++before;
    j["frac_before_2tau"] =
        static_cast<double>(before) / static_cast<double>(n_cross);
  } else {
    j["note"] = "no paths crossed the barrier";
  }
  write_json(c.output_path, j);
  return 0;
}

int compare_impl(const ExperimentConfig& c) {
  check_common(c);
  check_level_range(c);
  if (c.samples_per_level < 100)
    throw std::invalid_argument("compare mode needs samples >= 100");
  if (!c.market.barrier)
    throw std::invalid_argument("compare mode needs a barrier");

  const double gamma =
      c.gamma_explicit
          ? c.method_spec.gamma
          : gamma_for_barrier(c.market.s0, *c.market.barrier, c.market.sigma);

  MethodSpec spec_u = c.method_spec;
  spec_u.grid = GridKind::uniform;
  spec_u.gamma = 1.0;
  MethodSpec spec_p = c.method_spec;
  spec_p.grid = GridKind::power;
  spec_p.gamma = gamma;
  validate(spec_u, c.market);
  validate(spec_p, c.market);
  if (gamma != 1.0 && !(gamma >= 1.0))
    throw std::invalid_argument("power grid needs gamma >= 1 (got " +
                                std::to_string(gamma) + ")");

  std::vector<LevelStats> su, sp;
  for (int level = c.level_min; level <= c.level_max; ++level) {
    su.push_back(collect_level(spec_u, c.market, level, c.samples_per_level,
                               c.seed, c.n_threads));
    sp.push_back(collect_level(spec_p, c.market, level, c.samples_per_level,
                               c.seed, c.n_threads));
  }

  ordered_json jlevels = ordered_json::array();
  for (std::size_t i = 0; i < su.size(); ++i)
    jlevels.push_back({{"level", su[i].level},
                       {"h", su[i].h},
                       {"n", su[i].n_samples},
                       {"var_uniform", triple_json(su[i].variance)},
                       {"var_power", triple_json(sp[i].variance)},
                       {"mean_uniform", triple_json(su[i].mean)},
                       {"mean_power", triple_json(sp[i].mean)},
                       {"cost_uniform", su[i].cost},
                       {"cost_power", sp[i].cost}});

  // Orderings the step-concentration argument predicts: lower power-grid
  // variance at the two finest levels, possibly higher at level 0.
  ordered_json orderings = ordered_json::object();
  for (Output out : {Output::value, Output::delta, Output::vega}) {
    ordered_json o{{"power_below_uniform_finest_two", nullptr},
                   {"power_at_least_uniform_level0", nullptr}};
    const std::size_t m = su.size();
    if (m >= 2) {
      bool below = true;
      for (std::size_t i = m - 2; i < m; ++i)
        below = below && component(sp[i].variance, out) <
                             component(su[i].variance, out);
      o["power_below_uniform_finest_two"] = below;
    }
    if (c.level_min == 0 && !su.empty())
      o["power_at_least_uniform_level0"] =
          component(sp[0].variance, out) >= component(su[0].variance, out);
    orderings[to_string(out)] = o;
  }

  std::int64_t nonfinite = 0;
  for (const auto& v : {su, sp})
    for (const LevelStats& st : v) nonfinite += st.n_nonfinite;

  ordered_json j{{"schema", "mlgreeks-compare-v1"},
                 {"config", config_json(c)},
                 {"gamma", gamma},
                 {"levels", jlevels},
                 {"orderings", orderings},
                 {"total_nonfinite", nonfinite}};
  write_json(c.output_path, j);
  return nonfinite > 0 ? 4 : 0;
}

int guarded(int (*impl)(const ExperimentConfig&), const ExperimentConfig& c) {
  try {
    return impl(c);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int cmd_levels(const ExperimentConfig& c) { return guarded(levels_impl, c); }
int cmd_mlmc(const ExperimentConfig& c) { return guarded(mlmc_impl, c); }
int cmd_density(const ExperimentConfig& c) { return guarded(density_impl, c); }
int cmd_compare(const ExperimentConfig& c) { return guarded(compare_impl, c); }

// ---------------------------------------------------------------------------
// config file

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

  static const std::set<std::string> known{
      "mode",      "s0",     "strike",    "rate",      "sigma",
      "maturity",  "barrier", "method",   "payoff",    "d",
      "split_c",   "hstar",  "grid",      "gamma",     "level_min",
      "level_max", "samples", "eps",      "seed",      "out",
      "threads",   "pilot",  "min_samples", "max_level"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw std::invalid_argument("unknown config key: " + item.key());

  ExperimentConfig c;
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("s0")) c.market.s0 = j.at("s0").get<double>();
  if (j.contains("strike")) c.market.strike = j.at("strike").get<double>();
  if (j.contains("rate")) c.market.rate = j.at("rate").get<double>();
  if (j.contains("sigma")) c.market.sigma = j.at("sigma").get<double>();
  if (j.contains("maturity")) c.market.maturity = j.at("maturity").get<double>();
  if (j.contains("barrier")) {
    const auto& b = j.at("barrier");
    if (b.is_null())
      c.market.barrier.reset();
    else
      c.market.barrier = b.get<double>();
  }
  if (j.contains("method"))
    c.method_spec.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("payoff"))
    c.method_spec.payoff_kind = parse_payoff(j.at("payoff").get<std::string>());
  if (j.contains("d")) {
    const auto& d = j.at("d");
    if (d.is_string())
      parse_d(d.get<std::string>(), c.method_spec.split_rule);
    else
      parse_d(std::to_string(d.get<std::int64_t>()), c.method_spec.split_rule);
  }
  if (j.contains("split_c"))
    c.method_spec.split_rule.c = j.at("split_c").get<double>();
  if (j.contains("hstar")) {
    const auto& h = j.at("hstar");
    if (h.is_null())
      c.method_spec.h_star.reset();
    else
      c.method_spec.h_star = h.get<double>();
  }
  if (j.contains("grid"))
    c.method_spec.grid = parse_grid(j.at("grid").get<std::string>());
  if (j.contains("gamma")) {
    c.method_spec.gamma = j.at("gamma").get<double>();
    c.gamma_explicit = true;
  }
  if (j.contains("level_min")) c.level_min = j.at("level_min").get<int>();
  if (j.contains("level_max")) c.level_max = j.at("level_max").get<int>();
  if (j.contains("samples"))
    c.samples_per_level = j.at("samples").get<std::int64_t>();
  if (j.contains("eps")) c.epsilon = j.at("eps").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) c.output_path = j.at("out").get<std::string>();
  if (j.contains("threads")) c.n_threads = j.at("threads").get<int>();
  if (j.contains("pilot")) c.pilot = j.at("pilot").get<std::int64_t>();
  if (j.contains("min_samples"))
    c.min_samples = j.at("min_samples").get<std::int64_t>();
  if (j.contains("max_level")) c.max_level = j.at("max_level").get<int>();
  return c;
}

// ---------------------------------------------------------------------------
// entry point

int run_cli(int argc, char** argv) {
  CLI::App app{"multilevel Monte Carlo Greeks for GBM options"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, method, payoff, d, grid, levels;
    std::uint64_t seed = 0;
    std::int64_t samples = 0;
    double eps = 0.0, hstar = 0.0;
    int threads = 0;
  } f;

  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--seed", f.seed, "RNG seed");
    sub->add_option("--out", f.out, "output base path (.csv/.json appended)");
    sub->add_option("--levels", f.levels, "level range MIN:MAX");
    sub->add_option("--samples", f.samples, "samples per level");
    sub->add_option("--eps", f.eps, "target RMS accuracy");
    sub->add_option("--method", f.method,
                    "pathwise | cond_exp | split | vibrato");
    sub->add_option("--payoff", f.payoff,
                    "call | digital | lookback | barrier | barrier_smooth");
    sub->add_option("--d", f.d, "split/vibrato resample count, or 'auto'");
    sub->add_option("--hstar", f.hstar, "barrier smoothing width");
    sub->add_option("--grid", f.grid, "uniform | power");
    sub->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  };

  CLI::App* sub_levels =
      app.add_subcommand("levels", "per-level correction statistics tables");
  CLI::App* sub_mlmc =
      app.add_subcommand("mlmc", "adaptive multilevel estimate to accuracy eps");
  CLI::App* sub_density =
      app.add_subcommand("density", "first barrier-crossing time histogram");
  CLI::App* sub_compare =
      app.add_subcommand("compare", "uniform vs power grid variance tables");
  for (CLI::App* sub : {sub_levels, sub_mlmc, sub_density, sub_compare})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig c;
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--config")) c = load_config(f.config);
    if (sub == sub_levels) c.mode = Mode::levels;
    if (sub == sub_mlmc) c.mode = Mode::mlmc;
    if (sub == sub_density) c.mode = Mode::density;
    if (sub == sub_compare) c.mode = Mode::compare;
    if (sub->count("--seed")) c.seed = f.seed;
    if (sub->count("--out")) c.output_path = f.out;
    if (sub->count("--levels"))
      parse_level_range(f.levels, c.level_min, c.level_max);
    if (sub->count("--samples")) c.samples_per_level = f.samples;
    if (sub->count("--eps")) c.epsilon = f.eps;
    if (sub->count("--method")) c.method_spec.method = parse_method(f.method);
    if (sub->count("--payoff"))
      c.method_spec.payoff_kind = parse_payoff(f.payoff);
    if (sub->count("--d")) parse_d(f.d, c.method_spec.split_rule);
    if (sub->count("--hstar")) c.method_spec.h_star = f.hstar;
    if (sub->count("--grid")) c.method_spec.grid = parse_grid(f.grid);
    if (sub->count("--threads")) c.n_threads = f.threads;

    switch (c.mode) {
      case Mode::levels: return cmd_levels(c);
      case Mode::mlmc: return cmd_mlmc(c);
      case Mode::density: return cmd_density(c);
      case Mode::compare: return cmd_compare(c);
    }
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace mlg
