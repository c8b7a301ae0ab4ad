#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlg/greeks.hpp"
#include "mlg/payoff.hpp"
#include "mlg/rng.hpp"
#include "mlg/sde.hpp"

// Per-level correction samplers: each sample couples a fine and a coarse
// discretisation of the same Brownian path and returns the discounted
// fine-minus-coarse difference of (value, delta, vega), plus its cost in
// fine-equivalent timesteps.

namespace mlg {

enum class Method { pathwise, cond_exp, split, vibrato };
enum class PayoffKind { call, digital, lookback, barrier, barrier_smooth };

const char* to_string(Method m);
const char* to_string(PayoffKind p);

// Number of resampled final increments: a fixed d, or ceil(c * 2^(level/2))
// scaling with the final-step standard deviation.
struct SplitCountRule {
  bool adaptive = false;
  int d = 10;
  double c = 1.0;
};

int split_count(int level, const SplitCountRule& rule);

struct MethodSpec {
  Method method = Method::pathwise;
  PayoffKind payoff_kind = PayoffKind::call;
  SplitCountRule split_rule;
  std::optional<double> h_star;  // smoothing width for barrier_smooth
  GridKind grid = GridKind::uniform;
  double gamma = 1.0;  // exponent for the power grid
};

// Rejects unsupported method x payoff combinations and inconsistent
// parameters.  Supported: pathwise with call/lookback/barrier/barrier_smooth;
// cond_exp with call/digital; split and vibrato with
// call/digital/barrier_smooth.  The power grid is limited to the pathwise
// method, whose couplings handle unequal half-steps.
void validate(const MethodSpec& spec, const MarketParams& params);

struct LevelSample {
  GreekTriple y;       // fine - coarse (plain fine at level 0), discounted
  GreekTriple fine;    // discounted fine contribution
  GreekTriple coarse;  // discounted coarse contribution (zero at level 0)
  double cost = 0.0;   // fine-equivalent timesteps consumed
  bool rejected = false;   // degenerate sample, contributes zero
  bool nonfinite = false;  // NaN/inf produced, zeroed and counted
};

// Reusable sampler for one (spec, params, level) triple; owns the grids and
// scratch buffers so repeated samples allocate nothing.
class LevelEstimator {
 public:
  LevelEstimator(const MethodSpec& spec, const MarketParams& params, int level);

  LevelSample operator()(std::uint64_t seed, std::uint64_t path_index);

  const TimeGrid& fine_grid() const { return fine_; }
  int level() const { return level_; }

 private:
  LevelSample run_pathwise(const SampleKey& key);
  LevelSample run_condexp(const SampleKey& key);
  LevelSample run_split(const SampleKey& key);
  LevelSample run_vibrato(const SampleKey& key);
  void finish(LevelSample& s) const;

  MethodSpec spec_;
  MarketParams params_;
  int level_ = 0;
  int d_ = 0;  // split/vibrato resample count
  double discount_ = 1.0;
  TimeGrid fine_;
  TimeGrid coarse_;  // unused at level 0
  CoupledPath path_;
  std::vector<double> uniforms_;  // bridge stream scratch
  std::vector<double> draws_;     // split/vibrato normal draws
};

// One-shot sampling entry points; key.level must equal level.
LevelSample sample_pathwise(const MethodSpec& spec, const MarketParams& params,
                            int level, const SampleKey& key);
LevelSample sample_condexp(const MethodSpec& spec, const MarketParams& params,
                           int level, const SampleKey& key);
LevelSample sample_split(const MethodSpec& spec, const MarketParams& params,
                         int level, const SampleKey& key);
LevelSample sample_vibrato(const MethodSpec& spec, const MarketParams& params,
                           int level, const SampleKey& key);

}  // namespace mlg
