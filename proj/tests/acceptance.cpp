// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Tolerances are pinned here, not configurable. Paper parameters
// S0=100, K=100, r=0.05, sigma=0.2, T=1 throughout; rate tables use levels
// 2..8 with 10^6 samples per level (10^5 for the d=500 splitting run).

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlg/cli.hpp"
#include "mlg/estimators.hpp"
#include "mlg/mlmc.hpp"
#include "mlg/oracle.hpp"
#include "mlg/payoff.hpp"
#include "mlg/rng.hpp"
#include "mlg/sde.hpp"

using namespace mlg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::int64_t kTableSamples = 1000000;
constexpr std::int64_t kTableSamplesHeavy = 100000;  // d=500 splitting
constexpr std::int64_t kTowerSamples = 1000000;
constexpr double kBetaTol = 0.3;
constexpr int kFitMin = 2, kFitMax = 8;

int failures = 0;

void report(int idx, bool pass, const std::string& what) {
  std::printf("[%2d] %s  %s\n", idx, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt3(const GreekTriple& g) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f/%.2f/%.2f", g.value, g.delta, g.vega);
  return buf;
}

MarketParams paper_params() { return {}; }

GreekTriple fitted_betas(const MethodSpec& spec, const MarketParams& params,
                         std::int64_t n, std::uint64_t seed) {
  std::vector<LevelStats> stats;
  for (int l = kFitMin; l <= kFitMax; ++l)
    stats.push_back(collect_level(spec, params, l, n, seed));
  GreekTriple b;
  b.value = fit_rate(stats, Output::value, kFitMin, kFitMax).beta_hat;
  b.delta = fit_rate(stats, Output::delta, kFitMin, kFitMax).beta_hat;
  b.vega = fit_rate(stats, Output::vega, kFitMin, kFitMax).beta_hat;
  return b;
}

bool near(const GreekTriple& got, double v, double d, double g) {
  return std::abs(got.value - v) <= kBetaTol &&
         std::abs(got.delta - d) <= kBetaTol && std::abs(got.vega - g) <= kBetaTol;
}

void rate_criterion(int idx, const char* label, const MethodSpec& spec,
                    const MarketParams& params, std::int64_t n,
                    std::uint64_t seed, double v, double d, double g) {
  const GreekTriple b = fitted_betas(spec, params, n, seed);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%s: beta value/delta/vega = %s (want %.1f/%.1f/%.1f +/- %.1f)",
                label, fmt3(b).c_str(), v, d, g, kBetaTol);
  report(idx, near(b, v, d, g), buf);
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "mlgreeks_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --------------------------------------------------------------------------
// criteria 10-16

void oracle_agreement() {
  const MarketParams p = paper_params();
  const double eps = 0.02;
  bool pass = true;
  std::string detail;

  {
    MethodSpec spec;
    spec.method = Method::cond_exp;
    spec.payoff_kind = PayoffKind::call;
    const MlmcReport r = run_mlmc(spec, p, eps, 1010);
    const Reference ref = bs_call(p);
    pass = pass && r.converged && std::abs(r.estimates.value - ref.value) <= 3 * eps &&
           std::abs(r.estimates.delta - ref.delta) <= 3 * r.std_errors.delta &&
           std::abs(r.estimates.vega - ref.vega) <= 3 * r.std_errors.vega;
    char buf[120];
    std::snprintf(buf, sizeof buf, "call err %.4f/%.4f/%.3f",
                  r.estimates.value - ref.value, r.estimates.delta - ref.delta,
                  r.estimates.vega - ref.vega);
    detail += buf;
  }
  {
    MethodSpec spec;
    spec.method = Method::vibrato;
    spec.payoff_kind = PayoffKind::digital;
    const MlmcReport r = run_mlmc(spec, p, eps, 1011);
    const Reference ref = bs_digital(p);
    pass = pass && r.converged && std::abs(r.estimates.value - ref.value) <= 3 * eps &&
           std::abs(r.estimates.delta - ref.delta) <= 3 * r.std_errors.delta &&
           std::abs(r.estimates.vega - ref.vega) <= 3 * r.std_errors.vega;
    char buf[120];
    std::snprintf(buf, sizeof buf, ", digital err %.4f/%.5f/%.4f",
                  r.estimates.value - ref.value, r.estimates.delta - ref.delta,
                  r.estimates.vega - ref.vega);
    detail += buf;
  }
  report(10, pass,
         "mlmc at eps=0.02 matches closed forms (value 3 eps, greeks 3 s.e.): " +
             detail);
}

void lookback_identity() {
  MethodSpec spec;
  spec.method = Method::pathwise;
  spec.payoff_kind = PayoffKind::lookback;
  const MarketParams p = paper_params();
  const MlmcReport r = run_mlmc(spec, p, 0.05, 1111);
  const double gap = std::abs(r.estimates.value - p.s0 * r.estimates.delta);
  const double combined = std::sqrt(r.std_errors.value * r.std_errors.value +
                                    p.s0 * p.s0 * r.std_errors.delta * r.std_errors.delta);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "lookback value - S0 delta = %.3e vs 3 x combined s.e. %.3e",
                gap, 3 * combined);
  report(11, r.converged && gap <= 3 * combined, buf);
}

void tower_property() {
  struct Combo {
    Method m;
    PayoffKind p;
  };
  const std::vector<Combo> combos = {
      {Method::pathwise, PayoffKind::call},
      {Method::pathwise, PayoffKind::lookback},
      {Method::pathwise, PayoffKind::barrier},
      {Method::pathwise, PayoffKind::barrier_smooth},
      {Method::cond_exp, PayoffKind::call},
      {Method::cond_exp, PayoffKind::digital},
      {Method::split, PayoffKind::call},
      {Method::split, PayoffKind::digital},
      {Method::split, PayoffKind::barrier_smooth},
      {Method::vibrato, PayoffKind::call},
      {Method::vibrato, PayoffKind::digital},
      {Method::vibrato, PayoffKind::barrier_smooth},
  };
  int tested = 0, ok = 0;
  std::string misses;
  for (const Combo& c : combos) {
    MarketParams p = paper_params();
    MethodSpec spec;
    spec.method = c.m;
    spec.payoff_kind = c.p;
    if (c.p == PayoffKind::barrier || c.p == PayoffKind::barrier_smooth) {
      p.barrier = 85.0;
      if (c.p == PayoffKind::barrier_smooth) spec.h_star = 1.0 / 64;
    }
    std::vector<LevelStats> st;
    for (int l = 0; l <= 5; ++l)
      st.push_back(collect_level(spec, p, l, kTowerSamples, 1200));
    for (int l = 1; l <= 5; ++l)
      for (Output out : {Output::value, Output::delta, Output::vega}) {
        const double diff = component(st[l].mean_coarse, out) -
                            component(st[l - 1].mean_fine, out);
        const double se =
            std::sqrt(component(st[l].var_coarse, out) / st[l].n_samples +
                      component(st[l - 1].var_fine, out) / st[l - 1].n_samples);
        ++tested;
        if (std::abs(diff) <= 3 * se) {
          ++ok;
        } else {
          char m[96];
          std::snprintf(m, sizeof m, " [%s/%s l=%d %s z=%.2f]", to_string(c.m),
                        to_string(c.p), l, to_string(out),
                        std::abs(diff) / se);
          misses += m;
        }
      }
  }
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "coarse-at-l vs fine-at-(l-1) means: %d/%d bands within 3 s.e. "
                "over %zu method x payoff combos%s",
                ok, tested, combos.size(), misses.c_str());
  report(12, ok == tested, buf);
}

void tangent_correctness() {
  const MarketParams p = paper_params();
  const TimeGrid grid = uniform_grid(3, p.maturity);
  double worst_path = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const SampleKey key{1313, 3, i, StreamTag::path};
    const CoupledPath base = simulate_coupled(p, grid, nullptr, key, false);
    const TangentState& end = base.fine_states.back();

    MarketParams up = p, dn = p;
    const double bs = 1e-5 * p.s0;
    up.s0 += bs;
    dn.s0 -= bs;
    const double fd_delta =
        (simulate_coupled(up, grid, nullptr, key, false).fine_states.back().s -
         simulate_coupled(dn, grid, nullptr, key, false).fine_states.back().s) /
        (2 * bs);
    up = p;
    dn = p;
    const double bv = 1e-5 * p.sigma;
    up.sigma += bv;
    dn.sigma -= bv;
    const double fd_vega =
        (simulate_coupled(up, grid, nullptr, key, false).fine_states.back().s -
         simulate_coupled(dn, grid, nullptr, key, false).fine_states.back().s) /
        (2 * bv);
    worst_path = std::max(
        worst_path, std::abs(fd_delta - end.ds_ds0) / std::max(std::abs(end.ds_ds0), 1e-3));
    worst_path = std::max(
        worst_path,
        std::abs(fd_vega - end.ds_dsigma) / std::max(std::abs(end.ds_dsigma), 1e-3));
  }

  // Analytic smoothed-payoff partials against central differences.
  double worst_ce = 0.0;
  const std::vector<double> u = uniform_stream({1414, 0, 0, StreamTag::path}, 80);
  // Central differences on values of order 10 with bumps of order 1e-6 cannot
  // resolve derivatives below ~1e-4, so the relative error floors there:
  // smaller analytic partials are numerically zero at this scale.
  auto fd_check = [&](auto&& f, double x, double scale, double analytic) {
    const double b = 1e-6 * scale;
    const double fd = (f(x + b) - f(x - b)) / (2 * b);
    worst_ce = std::max(worst_ce,
                        std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-4));
  };
  MarketParams bp = paper_params();
  bp.barrier = 85.0;
  for (int k = 0; k < 20; ++k) {
    const double alpha = 86.0 + 40.0 * u[4 * k];
    const double beta = 1.0 + 12.0 * u[4 * k + 1];
    const double strike = 100.0;
    const double s_prev = 86.0 + 30.0 * u[4 * k + 2];

    const SmoothedValue c = call_condexp(alpha, beta, strike);
    fd_check([&](double a) { return call_condexp(a, beta, strike).value; },
             alpha, alpha, c.dvalue_dalpha);
    fd_check([&](double b2) { return call_condexp(alpha, b2, strike).value; },
             beta, beta, c.dvalue_dbeta);

    const SmoothedValue dg = digital_condexp(alpha, beta, strike);
    fd_check([&](double a) { return digital_condexp(a, beta, strike).value; },
             alpha, alpha, dg.dvalue_dalpha);
    fd_check([&](double b2) { return digital_condexp(alpha, b2, strike).value; },
             beta, beta, dg.dvalue_dbeta);

    CondExpInputs in;
    in.alpha = alpha;
    in.beta = beta;
    const SmoothedValue bar = barrier_condexp_fine(in, bp, s_prev);
    fd_check(
        [&](double a) {
          CondExpInputs i2 = in;
          i2.alpha = a;
          return barrier_condexp_fine(i2, bp, s_prev).value;
        },
        alpha, alpha, bar.dvalue_dalpha);
    fd_check(
        [&](double b2) {
          CondExpInputs i2 = in;
          i2.beta = b2;
          return barrier_condexp_fine(i2, bp, s_prev).value;
        },
        beta, beta, bar.dvalue_dbeta);
  }

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "pathwise tangents worst rel err %.2e (tol 1e-4); smoothed "
                "partials worst %.2e (tol 1e-5)",
                worst_path, worst_ce);
  report(13, worst_path <= 1e-4 && worst_ce <= 1e-5, buf);
}

void vibrato_zero_score() {
  // A digital struck at 1e-6 pays 1 on every path, so the likelihood-ratio
  // weights must average to zero.
  MarketParams p = paper_params();
  p.strike = 1e-6;
  MethodSpec spec;
  spec.method = Method::vibrato;
  spec.payoff_kind = PayoffKind::digital;
  bool pass = true;
  double worst_z = 0.0;
  for (int level : {0, 3}) {
    const LevelStats st = collect_level(spec, p, level, 1000000, 1500);
    for (Output out : {Output::delta, Output::vega}) {
      const double se =
          std::sqrt(component(st.variance, out) / st.n_samples);
      const double z = std::abs(component(st.mean, out)) / se;
      worst_z = std::max(worst_z, z);
      pass = pass && z <= 3.0;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "constant payoff greek means at levels 0 and 3: worst |z| = "
                "%.2f (tol 3)",
                worst_z);
  report(14, pass, buf);
}

void barrier_dynamics() {
  ExperimentConfig den;
  den.mode = Mode::density;
  den.market.barrier = 95.0;
  den.level_max = 8;
  den.samples_per_level = 20000;
  den.seed = 1717;
  den.output_path = (scratch() / "den95").string();
  const int rc95 = cmd_density(den);
  den.market.barrier = 85.0;
  den.output_path = (scratch() / "den85").string();
  const int rc85 = cmd_density(den);

  const json j95 = read_json(scratch() / "den95.json");
  const json j85 = read_json(scratch() / "den85.json");
  const double frac95 = j95.at("frac_before_2tau").get<double>();
  const double med95 = j95.at("median_crossing_time").get<double>();
  const double med85 = j85.at("median_crossing_time").get<double>();
  const bool density_ok = rc95 == 0 && rc85 == 0 && frac95 >= 0.5 &&
                          med85 > 3.0 * med95;

  ExperimentConfig cmp;
  cmp.mode = Mode::compare;
  cmp.market.barrier = 95.0;
  cmp.method_spec.method = Method::pathwise;
  cmp.method_spec.payoff_kind = PayoffKind::barrier;
  cmp.level_min = 0;
  cmp.level_max = 6;
  // The raw barrier payoff's vega has heavy tails; the grid ordering at the
  // finest levels needs this many paths to rise above variance-estimate noise.
  cmp.samples_per_level = 1000000;
  cmp.seed = 1818;
  cmp.output_path = (scratch() / "cmp95").string();
  const int rcc = cmd_compare(cmp);
  const json jc = read_json(scratch() / "cmp95.json");
  const json& ord = jc.at("orderings").at("vega");
  const bool compare_ok = rcc == 0 &&
                          ord.at("power_below_uniform_finest_two") == true &&
                          ord.at("power_at_least_uniform_level0") == true;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "B=95 frac before 2 tau %.2f (>= 0.5), medians %.3f vs %.3f "
                "(diffuse > 3x); power-grid vega variance ordering %s",
                frac95, med85, med95, compare_ok ? "holds" : "violated");
  report(15, density_ok && compare_ok, buf);
}

void determinism() {
  MethodSpec spec;
  spec.method = Method::cond_exp;
  spec.payoff_kind = PayoffKind::call;
  const MarketParams p = paper_params();

  MlmcOptions o1, o3;
  o1.n_threads = 1;
  o3.n_threads = 3;
  const MlmcReport r1 = run_mlmc(spec, p, 0.1, 77, o1);
  const MlmcReport r3 = run_mlmc(spec, p, 0.1, 77, o3);
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
  };
  const double worst =
      std::max({rel(r1.estimates.value, r3.estimates.value),
                rel(r1.estimates.delta, r3.estimates.delta),
                rel(r1.estimates.vega, r3.estimates.vega)});

  ExperimentConfig lv;
  lv.mode = Mode::levels;
  lv.method_spec = spec;
  lv.level_min = 0;
  lv.level_max = 4;
  lv.samples_per_level = 20000;
  lv.seed = 21;
  lv.n_threads = 1;
  lv.output_path = (scratch() / "det_a").string();
  const int ra = cmd_levels(lv);
  lv.n_threads = 4;
  lv.output_path = (scratch() / "det_b").string();
  const int rb = cmd_levels(lv);
  const bool files_equal =
      slurp(scratch() / "det_a.csv") == slurp(scratch() / "det_b.csv") &&
      slurp(scratch() / "det_a.json") == slurp(scratch() / "det_b.json");

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "1 vs 3 threads: worst rel diff %.1e (tol 1e-12); output files "
                "across 1 vs 4 workers %s",
                worst, files_equal ? "identical" : "differ");
  report(16, worst <= 1e-12 && ra == 0 && rb == 0 && files_equal, buf);
}

}  // namespace

int main() {
  const MarketParams p = paper_params();
  MarketParams pb = p;
  pb.barrier = 85.0;

  MethodSpec s;
  s.method = Method::pathwise;
  s.payoff_kind = PayoffKind::call;
  rate_criterion(1, "pathwise call", s, p, kTableSamples, 101, 2.0, 0.8, 1.0);

  s.method = Method::cond_exp;
  rate_criterion(2, "conditional expectation call", s, p, kTableSamples, 102,
                 2.0, 1.5, 2.0);

  s.method = Method::split;
  s.split_rule = {false, 10, 1.0};
  {
    const GreekTriple b10 = fitted_betas(s, p, kTableSamples, 103);
    s.split_rule = {false, 500, 1.0};
    const GreekTriple b500 = fitted_betas(s, p, kTableSamplesHeavy, 113);
    char buf[220];
    std::snprintf(buf, sizeof buf,
                  "splitting call: d=10 beta = %s (want 2.0/1.0/1.6), d=500 "
                  "beta = %s (want 2.0/1.5/2.0), +/- %.1f",
                  fmt3(b10).c_str(), fmt3(b500).c_str(), kBetaTol);
    report(3, near(b10, 2.0, 1.0, 1.6) && near(b500, 2.0, 1.5, 2.0), buf);
  }

  s.method = Method::vibrato;
  s.split_rule = {false, 10, 1.0};
  rate_criterion(4, "vibrato call d=10", s, p, kTableSamples, 104, 2.0, 1.5,
                 2.0);

  s.method = Method::cond_exp;
  s.payoff_kind = PayoffKind::digital;
  rate_criterion(5, "conditional expectation digital", s, p, kTableSamples,
                 105, 1.4, 0.5, 0.6);

  s.method = Method::vibrato;
  rate_criterion(6, "vibrato digital d=10", s, p, kTableSamples, 106, 1.3, 0.3,
                 0.5);

  s.method = Method::pathwise;
  s.payoff_kind = PayoffKind::lookback;
  rate_criterion(7, "pathwise lookback", s, p, kTableSamples, 107, 1.9, 1.9,
                 1.3);

  s.payoff_kind = PayoffKind::barrier;
  rate_criterion(8, "pathwise barrier B=85", s, pb, kTableSamples, 108, 1.6,
                 0.6, 0.6);

  s.payoff_kind = PayoffKind::barrier_smooth;
  s.h_star = 1.0 / 64;
  rate_criterion(9, "smoothed barrier h*=1/64", s, pb, kTableSamples, 109, 1.7,
                 0.7, 0.7);

  oracle_agreement();
  lookback_identity();
  tower_property();
  tangent_correctness();
  vibrato_zero_score();
  barrier_dynamics();
  determinism();

  std::printf("acceptance: %d/16 criteria passed\n", 16 - failures);
  return failures;
}
