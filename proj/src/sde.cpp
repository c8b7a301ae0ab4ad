#include "mlg/sde.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace mlg {

void validate(const MarketParams& p) {
  if (!(p.s0 > 0.0)) throw std::invalid_argument("market: S0 must be > 0");
  if (!(p.strike > 0.0)) throw std::invalid_argument("market: strike must be > 0");
  if (!(p.sigma >= 0.0)) throw std::invalid_argument("market: sigma must be >= 0");
  if (!(p.maturity > 0.0)) throw std::invalid_argument("market: maturity must be > 0");
  if (!std::isfinite(p.rate)) throw std::invalid_argument("market: rate must be finite");
  if (p.barrier) {
    if (!(*p.barrier > 0.0) || !(*p.barrier < p.s0))
      throw std::invalid_argument("market: barrier must satisfy 0 < B < S0");
  }
}

namespace {

void finish_grid(TimeGrid& g) {
  g.widths.resize(g.boundaries.size() - 1);
  for (std::size_t i = 0; i + 1 < g.boundaries.size(); ++i) {
    g.widths[i] = g.boundaries[i + 1] - g.boundaries[i];
    if (!(g.widths[i] > 0.0))
      throw std::invalid_argument("time grid: boundaries not strictly increasing");
  }
}

}  // namespace

TimeGrid uniform_grid(int level, double maturity) {
  if (level < 0) throw std::invalid_argument("uniform_grid: level must be >= 0");
  if (!(maturity > 0.0)) throw std::invalid_argument("uniform_grid: T must be > 0");
  const int n = 1 << level;
  TimeGrid g;
  g.kind = GridKind::uniform;
  g.boundaries.resize(n + 1);
  for (int k = 0; k <= n; ++k)
    g.boundaries[k] = (static_cast<double>(k) / static_cast<double>(n)) * maturity;
  g.boundaries[n] = maturity;
  finish_grid(g);
  return g;
}

TimeGrid power_grid(int n_steps, double gamma, double maturity) {
  if (n_steps < 1) throw std::invalid_argument("power_grid: n_steps must be >= 1");
  if (!(gamma >= 1.0))
    throw std::invalid_argument("power_grid: gamma must be >= 1 (smaller values coarsen near 0)");
  if (!(maturity > 0.0)) throw std::invalid_argument("power_grid: T must be > 0");
  TimeGrid g;
  g.boundaries.resize(n_steps + 1);
  if (gamma == 1.0) {
    // Degenerate case; same expression as uniform_grid so the grids agree
    // bit-for-bit.
    g.kind = GridKind::uniform;
    for (int k = 0; k <= n_steps; ++k)
      g.boundaries[k] =
          (static_cast<double>(k) / static_cast<double>(n_steps)) * maturity;
  } else {
    g.kind = GridKind::power;
    const double root = std::pow(maturity, 1.0 / gamma);
    for (int k = 0; k <= n_steps; ++k) {
      const double u =
          (static_cast<double>(k) / static_cast<double>(n_steps)) * root;
      g.boundaries[k] = std::pow(u, gamma);
    }
  }
  g.boundaries[n_steps] = maturity;
  finish_grid(g);
  return g;
}

double gamma_for_barrier(double s0, double barrier, double sigma) {
  if (!(barrier > 0.0) || !(barrier < s0))
    throw std::invalid_argument("gamma_for_barrier: need 0 < B < S0");
  if (!(sigma > 0.0)) throw std::invalid_argument("gamma_for_barrier: need sigma > 0");
  const double l = std::log(s0 / barrier);
  return (2.0 / std::log(2.0)) * (std::log(sigma) - std::log(l));
}

TangentState milstein_step(const TangentState& st, double dw, double h,
                           const MarketParams& p) {
  const double sig = p.sigma;
  const double corr = dw * dw - h;
  const double d = 1.0 + p.rate * h + sig * dw + 0.5 * sig * sig * corr;
  TangentState out;
  out.s = st.s * d;
  out.ds_ds0 = st.ds_ds0 * d;
  out.ds_dsigma = st.ds_dsigma * d + st.s * (dw + sig * corr);
  return out;
}

namespace {

void check_refinement(const TimeGrid& fine, const TimeGrid* coarse) {
  if (!coarse) return;
  if (fine.steps() != 2 * coarse->steps())
    throw std::invalid_argument("simulate_coupled: fine grid must have twice the coarse steps");
  for (std::size_t j = 0; j < coarse->boundaries.size(); ++j)
    if (coarse->boundaries[j] != fine.boundaries[2 * j])
      throw std::invalid_argument("simulate_coupled: coarse boundary is not a fine boundary");
}

}  // namespace

void simulate_coupled(const MarketParams& params, const TimeGrid& fine,
                      const TimeGrid* coarse, const SampleKey& key,
                      bool stop_at_penultimate, CoupledPath& out) {
  const std::size_t nf = fine.steps();
  const std::size_t n_draw = stop_at_penultimate ? nf - 1 : nf;

  out.level = static_cast<int>(key.level);
  out.fine_grid = &fine;
  out.coarse_grid = coarse;
  out.fine_increments.resize(n_draw);
  SampleKey path_key = key;
  path_key.tag = StreamTag::path;
  brownian_increments(path_key,
                      std::span<const double>(fine.widths).first(n_draw),
                      std::span<double>(out.fine_increments));
  out.penultimate_fine_increment =
      n_draw > 0 ? out.fine_increments[n_draw - 1]
                 : std::numeric_limits<double>::quiet_NaN();

  const TangentState init{params.s0, 1.0, 0.0};

  out.fine_states.resize(n_draw + 1);
  out.fine_states[0] = init;
  for (std::size_t i = 0; i < n_draw; ++i)
    out.fine_states[i + 1] = milstein_step(out.fine_states[i],
                                           out.fine_increments[i],
                                           fine.widths[i], params);

  out.coarse_states.clear();
  if (coarse) {
    // The coarse path consumes pairwise sums. When stopping at the
    // penultimate step the final drawn increment is the first half of the
    // coarse path's final step and is withheld here.
    const std::size_t nc_steps = stop_at_penultimate ? coarse->steps() - 1
                                                     : coarse->steps();
    out.coarse_states.resize(nc_steps + 1);
    out.coarse_states[0] = init;
    for (std::size_t j = 0; j < nc_steps; ++j) {
      const double dw = out.fine_increments[2 * j] + out.fine_increments[2 * j + 1];
      out.coarse_states[j + 1] = milstein_step(out.coarse_states[j], dw,
                                               coarse->widths[j], params);
    }
  }
}

CoupledPath simulate_coupled(const MarketParams& params, const TimeGrid& fine,
                             const TimeGrid* coarse, const SampleKey& key,
                             bool stop_at_penultimate) {
  if (stop_at_penultimate && fine.steps() < 1)
    throw std::invalid_argument("simulate_coupled: empty grid");
  check_refinement(fine, coarse);
  CoupledPath out;
  simulate_coupled(params, fine, coarse, key, stop_at_penultimate, out);
  return out;
}

}  // namespace mlg
