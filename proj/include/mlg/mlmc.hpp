#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlg/estimators.hpp"
#include "mlg/greeks.hpp"

// Multilevel driver: per-level statistics with a deterministic parallel
// reduction, variance/bias rate regressions, optimal sample allocation, and
// the adaptive telescoped estimator.

namespace mlg {

struct LevelStats {
  int level = 0;
  double h = 0.0;  // nominal fine step T / 2^level
  std::int64_t n_samples = 0;
  GreekTriple mean;      // of the correction Y_l
  GreekTriple variance;  // unbiased sample variance of Y_l
  GreekTriple mean_fine;  // fine contribution alone (the plain level-l payoff)
  GreekTriple var_fine;
  GreekTriple mean_coarse;  // coarse contribution alone (zero at level 0)
  GreekTriple var_coarse;
  double cost = 0.0;  // total fine-equivalent timesteps
  std::int64_t n_rejected = 0;
  std::int64_t n_nonfinite = 0;
  bool reject_flagged = false;  // rejections exceeded 1% of n
};

// Runs n samples with keys (seed, level, 0..n-1). Threads change nothing in
// the result: samples are accumulated in fixed-size chunks and chunk results
// merged in index order, so the reduction is bit-identical for any worker
// count. n_threads = 0 uses the hardware count.
LevelStats collect_level(const MethodSpec& spec, const MarketParams& params,
                         int level, std::int64_t n, std::uint64_t seed,
                         int n_threads = 0);

enum class Output { value, delta, vega };
const char* to_string(Output o);
double component(const GreekTriple& g, Output o);

// Least-squares fit of log2 variance vs level over fit_min <= level <=
// fit_max; beta_hat = -slope, c2_hat = 2^intercept (the level-0 extrapolated
// variance). Throws unless the range holds >= 3 levels, all with positive
// variance.
struct RateFit {
  double beta_hat = 0.0;
  double c2_hat = 0.0;
};
RateFit fit_rate(const std::vector<LevelStats>& levels, Output output,
                 int fit_min, int fit_max);

// Weak rate from the decay of |mean(Y_l)| over correction levels (level >=
// 1): alpha_hat = -slope of log2|mean| vs level. Requires >= 3 correction
// levels. The fit is flagged unreliable (alpha_hat NaN when unfittable) if
// the mean is within 3 standard errors of 0 on at least half the levels.
struct WeakRateFit {
  double alpha_hat = 0.0;
  bool unreliable = false;
};
WeakRateFit fit_weak_rate(const std::vector<LevelStats>& levels, Output output);

// N_l = ceil( (2/eps^2) * sqrt(V_l/c_l) * sum_m sqrt(V_m c_m) ), floored at
// 2: the cost-minimizing counts subject to sum V_l/N_l <= eps^2/2.
std::vector<std::int64_t> allocate_samples(const std::vector<double>& variances,
                                           const std::vector<double>& costs_per_sample,
                                           double epsilon);

enum class ComplexityClass { eps2, eps2log2, eps2plus };
const char* to_string(ComplexityClass c);

struct Complexity {
  ComplexityClass cls = ComplexityClass::eps2;
  double exponent = -2.0;  // complexity O(eps^exponent), log^2 factor for eps2log2
};

// beta > 1.1 -> O(eps^-2); beta in [0.9, 1.1] -> O(eps^-2 log^2 eps);
// beta < 0.9 -> O(eps^{-2-(1-beta)/alpha}). Requires alpha_hat >= 0.5.
Complexity classify_complexity(double beta_hat, double alpha_hat);

struct MlmcOptions {
  std::int64_t pilot = 10000;
  std::int64_t min_samples = 2;
  int max_level = 12;
  int n_threads = 0;
  int max_rounds = 50;
};

struct MlmcReport {
  GreekTriple estimates;   // sum of per-level means
  GreekTriple std_errors;  // sqrt(sum variance_l / n_l)
  std::vector<LevelStats> levels;
  GreekTriple beta_hat;   // per output; NaN when too few levels to fit
  GreekTriple alpha_hat;  // per output; NaN when unreliable
  std::optional<Complexity> complexity_value;
  std::optional<Complexity> complexity_delta;
  std::optional<Complexity> complexity_vega;
  double total_cost = 0.0;
  double epsilon = 0.0;
  bool converged = true;
  std::int64_t total_rejected = 0;
  std::int64_t total_nonfinite = 0;
};

// Adaptive driver: pilots levels 0..2, then alternates optimal allocation
// top-ups with bias checks on the finest level, extending L until
// |mean(Y_L)| / (2^alpha - 1) <= eps / sqrt(2) for the value output. Top-ups
// continue path indices, so the result is deterministic in (spec, params,
// epsilon, seed) for any thread count.
MlmcReport run_mlmc(const MethodSpec& spec, const MarketParams& params,
                    double epsilon, std::uint64_t seed,
                    const MlmcOptions& options = {});

}  // namespace mlg
