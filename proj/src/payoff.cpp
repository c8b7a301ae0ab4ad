#include "mlg/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlg/normal.hpp"

namespace mlg {

// ---------------------------------------------------------------------------
// Terminal payoffs
// ---------------------------------------------------------------------------

PayoffWeight call_payoff(double s, double strike) {
  if (s > strike) return {s - strike, 1.0};
  return {0.0, 0.0};
}

double digital_payoff(double s, double strike) {
  return s > strike ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Final-step conditional expectation
// ---------------------------------------------------------------------------

CondExpInputs fine_condexp_inputs(const TangentState& penultimate, double h,
                                  const MarketParams& params) {
  const double g = 1.0 + params.rate * h;
  const double rooth = std::sqrt(h);
  CondExpInputs in;
  in.alpha = g * penultimate.s;
  in.beta = params.sigma * rooth * penultimate.s;
  in.dalpha_ds0 = g * penultimate.ds_ds0;
  in.dbeta_ds0 = params.sigma * rooth * penultimate.ds_ds0;
  in.dalpha_dsigma = g * penultimate.ds_dsigma;
  in.dbeta_dsigma = rooth * (penultimate.s + params.sigma * penultimate.ds_dsigma);
  return in;
}

CondExpInputs coarse_condexp_inputs(const TangentState& penultimate, double h_c,
                                    double dw_pen, const MarketParams& params) {
  const double g = 1.0 + params.rate * h_c + params.sigma * dw_pen;
  const double rooth = std::sqrt(h_c / 2.0);
  CondExpInputs in;
  in.alpha = g * penultimate.s;
  in.beta = params.sigma * rooth * penultimate.s;
  in.dalpha_ds0 = g * penultimate.ds_ds0;
  in.dbeta_ds0 = params.sigma * rooth * penultimate.ds_ds0;
  in.dalpha_dsigma = g * penultimate.ds_dsigma + dw_pen * penultimate.s;
  in.dbeta_dsigma = rooth * (penultimate.s + params.sigma * penultimate.ds_dsigma);
  return in;
}

SmoothedValue call_condexp(double alpha, double beta, double strike) {
  if (beta <= 0.0) {
    if (alpha > strike) return {alpha - strike, 1.0, 0.0};
    return {0.0, 0.0, 0.0};
  }
  const double z = (alpha - strike) / beta;
  const double pdf = norm_pdf(z);
  const double cdf = norm_cdf(z);
  SmoothedValue v;
  v.value = beta * pdf + (alpha - strike) * cdf;
  v.dvalue_dalpha = cdf;
  v.dvalue_dbeta = pdf;
  return v;
}

SmoothedValue call_condexp(const CondExpInputs& inputs, double strike) {
  return call_condexp(inputs.alpha, inputs.beta, strike);
}

SmoothedValue digital_condexp(double alpha, double beta, double strike) {
  if (beta <= 0.0) {
    return {alpha > strike ? 1.0 : 0.0, 0.0, 0.0};
  }
  const double z = (alpha - strike) / beta;
  const double pdf = norm_pdf(z);
  SmoothedValue v;
  v.value = norm_cdf(z);
  v.dvalue_dalpha = pdf / beta;
  v.dvalue_dbeta = -z * pdf / beta;
  return v;
}

SmoothedValue digital_condexp(const CondExpInputs& inputs, double strike) {
  return digital_condexp(inputs.alpha, inputs.beta, strike);
}

namespace {

// piece(a) = (a - K) Phi(z) + beta phi(z), z = (a - L) / beta, with its
// partials in a and beta.
struct Piece {
  double value;
  double da;
  double dbeta;
};

Piece barrier_piece(double a, double beta, double strike, double level) {
  const double z = (a - level) / beta;
  const double pdf = norm_pdf(z);
  const double cdf = norm_cdf(z);
  Piece p;
  p.value = (a - strike) * cdf + beta * pdf;
  p.da = cdf + (level - strike) * pdf / beta;
  p.dbeta = pdf * (1.0 + z * z) - (a - strike) * z * pdf / beta;
  return p;
}

}  // namespace

SmoothedValue barrier_condexp_fine(const CondExpInputs& inputs,
                                   const MarketParams& params, double s_prev) {
  if (!params.barrier) {
    throw std::invalid_argument("barrier_condexp_fine: params.barrier unset");
  }
  const double barrier = *params.barrier;
  if (s_prev <= barrier) return {0.0, 0.0, 0.0};
  if (inputs.beta <= 0.0) {
    throw std::invalid_argument("barrier_condexp_fine: beta must be positive");
  }
  const double level = std::max(params.strike, barrier);
  // alpha = (1 + r h) s_prev, so 2B + (-1 + r h) s_prev = 2B + alpha - 2 s_prev.
  const double alpha_tilde = 2.0 * barrier + inputs.alpha - 2.0 * s_prev;
  const double image_weight =
      std::exp(2.0 * params.rate * (barrier - s_prev) /
               (params.sigma * params.sigma * s_prev));
  const Piece direct = barrier_piece(inputs.alpha, inputs.beta, params.strike, level);
  const Piece image = barrier_piece(alpha_tilde, inputs.beta, params.strike, level);
  SmoothedValue v;
  v.value = direct.value - image_weight * image.value;
  // At fixed s_prev, alpha_tilde moves one-for-one with alpha; only the
  // image weight is independent of it.
  v.dvalue_dalpha = direct.da - image_weight * image.da;
  v.dvalue_dbeta = direct.dbeta - image_weight * image.dbeta;
  return v;
}

GreekTriple chain_condexp(const SmoothedValue& v, const CondExpInputs& inputs) {
  GreekTriple g;
  g.value = v.value;
  g.delta = v.dvalue_dalpha * inputs.dalpha_ds0 + v.dvalue_dbeta * inputs.dbeta_ds0;
  g.vega =
      v.dvalue_dalpha * inputs.dalpha_dsigma + v.dvalue_dbeta * inputs.dbeta_dsigma;
  return g;
}

// ---------------------------------------------------------------------------
// Brownian bridge minimum
// ---------------------------------------------------------------------------

double bridge_min(const BridgeSample& s) {
  const double diff = s.s_right - s.s_left;
  const double radicand = diff * diff - 2.0 * s.b * s.b * s.h * std::log(s.u);
  return 0.5 * (s.s_left + s.s_right - std::sqrt(radicand));
}

BridgeMinGrad bridge_min_grad(const BridgeSample& s) {
  const double diff = s.s_right - s.s_left;
  const double logu = std::log(s.u);
  const double radicand = diff * diff - 2.0 * s.b * s.b * s.h * logu;
  const double root = std::sqrt(radicand);
  BridgeMinGrad g;
  g.m = 0.5 * (s.s_left + s.s_right - root);
  if (root == 0.0) {
    g.dm_dsl = 0.5;
    g.dm_dsr = 0.5;
    g.dm_db = 0.0;
    return g;
  }
  g.dm_dsl = 0.5 * (1.0 + diff / root);
  g.dm_dsr = 0.5 * (1.0 - diff / root);
  g.dm_db = s.b * s.h * logu / root;
  return g;
}

double coarse_midpoint(double s_left, double s_right, double b,
                       double dw_second_minus_first) {
  return 0.5 * (s_left + s_right - b * dw_second_minus_first);
}

double coarse_bridge_min(double s_left, double s_mid, double s_right, double b,
                         double h_c, double u_first, double u_second) {
  const double half = h_c / 2.0;
  const double m1 = bridge_min({s_left, s_mid, b, half, u_first});
  const double m2 = bridge_min({s_mid, s_right, b, half, u_second});
  return std::min(m1, m2);
}

// ---------------------------------------------------------------------------
// Barrier crossing probability
// ---------------------------------------------------------------------------

double crossing_prob(double s_left, double s_right, double barrier, double b,
                     double h) {
  if (b == 0.0) {
    return std::min(s_left, s_right) <= barrier ? 1.0 : 0.0;
  }
  const double a = std::max(s_left - barrier, 0.0);
  const double c = std::max(s_right - barrier, 0.0);
  return std::exp(-2.0 * a * c / (b * b * h));
}

CrossingProbGrad crossing_prob_grad(double s_left, double s_right,
                                    double barrier, double b, double h) {
  CrossingProbGrad g;
  if (b == 0.0) {
    g.p = std::min(s_left, s_right) <= barrier ? 1.0 : 0.0;
    return g;
  }
  const double a = std::max(s_left - barrier, 0.0);
  const double c = std::max(s_right - barrier, 0.0);
  const double inv = 1.0 / (b * b * h);
  g.p = crossing_prob(s_left, s_right, barrier, b, h);
  if (s_left > barrier) g.dp_dsl = g.p * (-2.0 * c * inv);
  if (s_right > barrier) g.dp_dsr = g.p * (-2.0 * a * inv);
  g.dp_db = g.p * (4.0 * a * c * inv / b);
  return g;
}

// ---------------------------------------------------------------------------
// Whole-path evaluators
// ---------------------------------------------------------------------------

namespace {

// Tangent of one scalar quantity along the two Greek directions.
struct Dir {
  double d = 0.0;  // d/dS0 direction
  double v = 0.0;  // d/dsigma direction
};

// Running product with derivative, accumulated factor by factor.
struct Product {
  double p = 1.0;
  Dir dp;
  void mul(double f, const Dir& df) {
    dp.d = dp.d * f + p * df.d;
    dp.v = dp.v * f + p * df.v;
    p *= f;
  }
};

Dir diffusion_dir(const TangentState& left, const MarketParams& params) {
  // b = sigma * s_left along both directions.
  return {params.sigma * left.ds_ds0, left.s + params.sigma * left.ds_dsigma};
}

// Survival factor 1 - p for one sub-step, chained through the tangents of its
// endpoints and of b.
void mul_survival(Product& prod, double s_l, const Dir& dl, double s_r,
                  const Dir& dr, const Dir& db, double barrier, double b,
                  double h) {
  const CrossingProbGrad g = crossing_prob_grad(s_l, s_r, barrier, b, h);
  Dir dq;
  dq.d = -(g.dp_dsl * dl.d + g.dp_dsr * dr.d + g.dp_db * db.d);
  dq.v = -(g.dp_dsl * dl.v + g.dp_dsr * dr.v + g.dp_db * db.v);
  prod.mul(1.0 - g.p, dq);
}

Dir state_dir(const TangentState& s) { return {s.ds_ds0, s.ds_dsigma}; }

// Midpoint of coarse step j from the two fine increments, with tangents.
// Uniform halves use the symmetric formula; a power grid splits the step at
// weight w = h1 / h_c.
struct Midpoint {
  double m;
  Dir dm;
};

Midpoint coarse_step_midpoint(const CoupledPath& path, std::size_t j,
                              const TangentState& left,
                              const TangentState& right, double b,
                              const Dir& db) {
  const double d1 = path.fine_increments[2 * j];
  const double d2 = path.fine_increments[2 * j + 1];
  const Dir dl = state_dir(left);
  const Dir dr = state_dir(right);
  Midpoint out;
  if (path.fine_grid->kind == GridKind::uniform) {
    const double arg = d2 - d1;
    out.m = coarse_midpoint(left.s, right.s, b, arg);
    out.dm.d = 0.5 * (dl.d + dr.d - db.d * arg);
    out.dm.v = 0.5 * (dl.v + dr.v - db.v * arg);
  } else {
    const double h1 = path.fine_grid->widths[2 * j];
    const double hc = path.coarse_grid->widths[j];
    const double w = h1 / hc;
    const double arg = d1 - w * (d1 + d2);
    out.m = left.s + w * (right.s - left.s) + b * arg;
    out.dm.d = dl.d + w * (dr.d - dl.d) + db.d * arg;
    out.dm.v = dl.v + w * (dr.v - dl.v) + db.v * arg;
  }
  return out;
}

Product survival_product_fine(const CoupledPath& path,
                              const MarketParams& params,
                              std::size_t n_steps) {
  const double barrier = *params.barrier;
  Product prod;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const TangentState& left = path.fine_states[n];
    const TangentState& right = path.fine_states[n + 1];
    const double b = params.sigma * left.s;
    mul_survival(prod, left.s, state_dir(left), right.s, state_dir(right),
                 diffusion_dir(left, params), barrier, b,
                 path.fine_grid->widths[n]);
  }
  return prod;
}

Product survival_product_coarse(const CoupledPath& path,
                                const MarketParams& params,
                                std::size_t n_steps) {
  const double barrier = *params.barrier;
  Product prod;
  for (std::size_t j = 0; j < n_steps; ++j) {
    const TangentState& left = path.coarse_states[j];
    const TangentState& right = path.coarse_states[j + 1];
    const double b = params.sigma * left.s;
    const Dir db = diffusion_dir(left, params);
    const Midpoint mid = coarse_step_midpoint(path, j, left, right, b, db);
    mul_survival(prod, left.s, state_dir(left), mid.m, mid.dm, db, barrier, b,
                 path.fine_grid->widths[2 * j]);
    mul_survival(prod, mid.m, mid.dm, right.s, state_dir(right), db, barrier, b,
                 path.fine_grid->widths[2 * j + 1]);
  }
  return prod;
}

GreekTriple combine_with_survival(double value, const Dir& dvalue,
                                  const Product& surv) {
  GreekTriple g;
  g.value = value * surv.p;
  g.delta = dvalue.d * surv.p + value * surv.dp.d;
  g.vega = dvalue.v * surv.p + value * surv.dp.v;
  return g;
}

// Smoothed terminal call value over an artificial step of width h_star, with
// beta = sigma sqrt(h_star) s chained through the terminal tangents.
void smooth_terminal(const TangentState& terminal, const MarketParams& params,
                     double h_star, double& value, Dir& dvalue) {
  const double rooth = std::sqrt(h_star);
  const double beta = params.sigma * rooth * terminal.s;
  const SmoothedValue v = call_condexp(terminal.s, beta, params.strike);
  value = v.value;
  dvalue.d = v.dvalue_dalpha * terminal.ds_ds0 +
             v.dvalue_dbeta * params.sigma * rooth * terminal.ds_ds0;
  dvalue.v = v.dvalue_dalpha * terminal.ds_dsigma +
             v.dvalue_dbeta * rooth *
                 (terminal.s + params.sigma * terminal.ds_dsigma);
}

// Minimum candidate tracking for the lookback payoff.
struct MinTrack {
  double m = std::numeric_limits<double>::infinity();
  Dir dm;
  void offer(double cand, const Dir& dcand) {
    if (cand < m) {
      m = cand;
      dm = dcand;
    }
  }
};

// Bridge minimum of one sub-step with endpoint tangents chained in.
void offer_bridge(MinTrack& track, double s_l, const Dir& dl, double s_r,
                  const Dir& dr, double b, const Dir& db, double h, double u) {
  const BridgeMinGrad g = bridge_min_grad({s_l, s_r, b, h, u});
  Dir dm;
  dm.d = g.dm_dsl * dl.d + g.dm_dsr * dr.d + g.dm_db * db.d;
  dm.v = g.dm_dsl * dl.v + g.dm_dsr * dr.v + g.dm_db * db.v;
  track.offer(g.m, dm);
}

}  // namespace

GreekTriple barrier_survival_fine(const CoupledPath& path,
                                  const MarketParams& params) {
  const TangentState& terminal = path.fine_states.back();
  const PayoffWeight pay = call_payoff(terminal.s, params.strike);
  const Dir dpay{pay.weight * terminal.ds_ds0, pay.weight * terminal.ds_dsigma};
  return combine_with_survival(
      pay.value, dpay,
      survival_product_fine(path, params, path.fine_grid->steps()));
}

GreekTriple barrier_survival_coarse(const CoupledPath& path,
                                    const MarketParams& params) {
  const TangentState& terminal = path.coarse_states.back();
  const PayoffWeight pay = call_payoff(terminal.s, params.strike);
  const Dir dpay{pay.weight * terminal.ds_ds0, pay.weight * terminal.ds_dsigma};
  return combine_with_survival(
      pay.value, dpay,
      survival_product_coarse(path, params, path.coarse_grid->steps()));
}

GreekTriple barrier_smooth_fine(const CoupledPath& path,
                                const MarketParams& params, double h_star) {
  double value;
  Dir dvalue;
  smooth_terminal(path.fine_states.back(), params, h_star, value, dvalue);
  return combine_with_survival(
      value, dvalue, survival_product_fine(path, params, path.fine_grid->steps()));
}

GreekTriple barrier_smooth_coarse(const CoupledPath& path,
                                  const MarketParams& params, double h_star) {
  double value;
  Dir dvalue;
  smooth_terminal(path.coarse_states.back(), params, h_star, value, dvalue);
  return combine_with_survival(
      value, dvalue,
      survival_product_coarse(path, params, path.coarse_grid->steps()));
}

GreekTriple survival_prefix_fine(const CoupledPath& path,
                                 const MarketParams& params,
                                 std::size_t n_steps) {
  const Product prod = survival_product_fine(path, params, n_steps);
  return {prod.p, prod.dp.d, prod.dp.v};
}

GreekTriple survival_prefix_coarse(const CoupledPath& path,
                                   const MarketParams& params,
                                   std::size_t n_steps) {
  const Product prod = survival_product_coarse(path, params, n_steps);
  return {prod.p, prod.dp.d, prod.dp.v};
}

GreekTriple smoothed_terminal_call(const TangentState& terminal,
                                   const MarketParams& params, double h_star) {
  double value;
  Dir dvalue;
  smooth_terminal(terminal, params, h_star, value, dvalue);
  return {value, dvalue.d, dvalue.v};
}

GreekTriple lookback_payoff_fine(const CoupledPath& path,
                                 const MarketParams& params,
                                 std::span<const double> uniforms) {
  const std::size_t n_steps = path.fine_grid->steps();
  if (uniforms.size() < n_steps) {
    throw std::invalid_argument("lookback_payoff_fine: not enough uniforms");
  }
  MinTrack track;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const TangentState& left = path.fine_states[n];
    const TangentState& right = path.fine_states[n + 1];
    const double b = params.sigma * left.s;
    offer_bridge(track, left.s, state_dir(left), right.s, state_dir(right), b,
                 diffusion_dir(left, params), path.fine_grid->widths[n],
                 uniforms[n]);
  }
  const TangentState& terminal = path.fine_states.back();
  GreekTriple g;
  g.value = terminal.s - track.m;
  g.delta = terminal.ds_ds0 - track.dm.d;
  g.vega = terminal.ds_dsigma - track.dm.v;
  return g;
}

GreekTriple lookback_payoff_coarse(const CoupledPath& path,
                                   const MarketParams& params,
                                   std::span<const double> uniforms) {
  const std::size_t n_steps = path.coarse_grid->steps();
  if (uniforms.size() < 2 * n_steps) {
    throw std::invalid_argument("lookback_payoff_coarse: not enough uniforms");
  }
  MinTrack track;
  for (std::size_t j = 0; j < n_steps; ++j) {
    const TangentState& left = path.coarse_states[j];
    const TangentState& right = path.coarse_states[j + 1];
    const double b = params.sigma * left.s;
    const Dir db = diffusion_dir(left, params);
    const Midpoint mid = coarse_step_midpoint(path, j, left, right, b, db);
    offer_bridge(track, left.s, state_dir(left), mid.m, mid.dm, b, db,
                 path.fine_grid->widths[2 * j], uniforms[2 * j]);
    offer_bridge(track, mid.m, mid.dm, right.s, state_dir(right), b, db,
                 path.fine_grid->widths[2 * j + 1], uniforms[2 * j + 1]);
  }
  const TangentState& terminal = path.coarse_states.back();
  GreekTriple g;
  g.value = terminal.s - track.m;
  g.delta = terminal.ds_ds0 - track.dm.d;
  g.vega = terminal.ds_dsigma - track.dm.v;
  return g;
}

}  // namespace mlg
