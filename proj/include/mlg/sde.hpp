#pragma once

// Milstein discretisation of GBM with tangent (pathwise derivative)
// propagation, time grids, and coupled fine/coarse path simulation.

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "mlg/rng.hpp"

namespace mlg {

struct MarketParams {
  double s0 = 100.0;
  double strike = 100.0;
  double rate = 0.05;
  double sigma = 0.2;
  double maturity = 1.0;
  std::optional<double> barrier{};
};

// Throws std::invalid_argument on bad fields. sigma = 0 is allowed (the
// degenerate branches of the payoff layer are defined for it).
void validate(const MarketParams& params);

struct TangentState {
  double s = 0.0;
  double ds_ds0 = 0.0;    // dS/dS0, dimensionless
  double ds_dsigma = 0.0; // dS/dsigma
};

enum class GridKind { uniform, power };

struct TimeGrid {
  GridKind kind = GridKind::uniform;
  std::vector<double> boundaries;  // 0 = t_0 < ... < t_n = T
  std::vector<double> widths;      // widths[i] = boundaries[i+1] - boundaries[i]
  std::size_t steps() const { return widths.size(); }
};

TimeGrid uniform_grid(int level, double maturity);
TimeGrid power_grid(int n_steps, double gamma, double maturity);

// gamma = (2/log 2) * (log sigma - log log(S0/B)); satisfies
// (1/2)^gamma = (log(S0/B)/sigma)^2. A result < 1 means barrier crossings are
// not concentrated near t=0 and power stepping is pointless; callers see that
// through the returned value (power_grid rejects gamma < 1).
double gamma_for_barrier(double s0, double barrier, double sigma);

// One Milstein step: S' = S * D with D = 1 + r h + sigma dW + sigma^2/2 (dW^2 - h).
// Tangents ride along per the differentiated scheme.
TangentState milstein_step(const TangentState& state, double dw, double h,
                           const MarketParams& params);

struct CoupledPath {
  int level = 0;
  // States at grid boundaries. With stop_at_penultimate, the fine sequence
  // ends at t_{N_f-1} and the coarse one at the penultimate coarse boundary.
  std::vector<TangentState> fine_states;
  std::vector<TangentState> coarse_states;  // empty at level 0
  std::vector<double> fine_increments;      // the increments consumed, in order
  double penultimate_fine_increment = std::numeric_limits<double>::quiet_NaN();
  const TimeGrid* fine_grid = nullptr;    // non-owning; grids outlive paths
  const TimeGrid* coarse_grid = nullptr;  // null at level 0
};

// Shares one Brownian stream between the fine path and a coarse path driven by
// pairwise-summed increments. With stop_at_penultimate the last fine increment
// drawn becomes penultimate_fine_increment and neither path takes its final
// step. coarse == nullptr runs level 0 (no coarse path). Throws if the grids
// do not refine 2:1.
void simulate_coupled(const MarketParams& params, const TimeGrid& fine,
                      const TimeGrid* coarse, const SampleKey& key,
                      bool stop_at_penultimate, CoupledPath& out);
CoupledPath simulate_coupled(const MarketParams& params, const TimeGrid& fine,
                             const TimeGrid* coarse, const SampleKey& key,
                             bool stop_at_penultimate);

}  // namespace mlg
