#pragma once

#include <span>

#include "mlg/greeks.hpp"
#include "mlg/sde.hpp"

// Payoff smoothing toolbox: conditional-expectation closed forms for the
// final timestep, Brownian-bridge minimum sampling, and barrier crossing
// probabilities, each with the partial derivatives needed for pathwise
// sensitivities.

namespace mlg {

// ---------------------------------------------------------------------------
// Plain (kinked) terminal payoffs.
// ---------------------------------------------------------------------------

struct PayoffWeight {
  double value = 0.0;
  double weight = 0.0;  // d(value)/d(terminal); 0 on the kink itself
};

// (s - strike)^+ with its a.e. derivative.
PayoffWeight call_payoff(double s, double strike);

// 1{s > strike}; derivative is identically zero away from the kink.
double digital_payoff(double s, double strike);

// ---------------------------------------------------------------------------
// Conditional expectation over the final timestep.
//
// Conditional on the penultimate state, one Euler step makes the terminal
// value Gaussian with mean alpha and standard deviation beta.  The inputs
// carry (alpha, beta) together with their derivatives along the two tangent
// directions.
// ---------------------------------------------------------------------------

struct CondExpInputs {
  double alpha = 0.0;
  double beta = 0.0;
  double dalpha_ds0 = 0.0;
  double dbeta_ds0 = 0.0;
  double dalpha_dsigma = 0.0;
  double dbeta_dsigma = 0.0;
};

// Fine final step: alpha = (1 + r h) s, beta = sigma sqrt(h) s, evaluated at
// the penultimate tangent state.
CondExpInputs fine_condexp_inputs(const TangentState& penultimate, double h,
                                  const MarketParams& params);

// Coarse final step conditioned on the penultimate fine increment dw_pen:
// alpha = (1 + r h_c + sigma dw_pen) s, beta = sigma sqrt(h_c / 2) s.
CondExpInputs coarse_condexp_inputs(const TangentState& penultimate, double h_c,
                                    double dw_pen, const MarketParams& params);

// A smoothed payoff value with partials in (alpha, beta); callers chain these
// with the tangent entries of CondExpInputs.
struct SmoothedValue {
  double value = 0.0;
  double dvalue_dalpha = 0.0;
  double dvalue_dbeta = 0.0;
};

// E[(X - K)^+] for X ~ N(alpha, beta^2).  beta <= 0 degenerates to the plain
// call payoff at alpha.
SmoothedValue call_condexp(double alpha, double beta, double strike);
SmoothedValue call_condexp(const CondExpInputs& inputs, double strike);

// E[1{X > K}] for X ~ N(alpha, beta^2).  beta <= 0 degenerates to the
// indicator at alpha.
SmoothedValue digital_condexp(double alpha, double beta, double strike);
SmoothedValue digital_condexp(const CondExpInputs& inputs, double strike);

// Final-step conditional expectation of a down-and-out call given the
// penultimate spot s_prev (not yet crossed): the Gaussian density is tilted
// by the reflection image about the barrier,
//   value = piece(alpha) - D piece(alpha_tilde),
//   piece(a) = (a - K) Phi((a - L)/beta) + beta phi((a - L)/beta),
// with L = max(K, B), alpha_tilde = 2B + alpha - 2 s_prev (equal to
// 2B + (-1 + r h) s_prev) and D = exp(2 r (B - s_prev) / (sigma^2 s_prev)).
// Partials are with respect to alpha and beta at fixed s_prev.  Requires
// beta > 0 (throws) and returns zero if s_prev is at or below the barrier.
SmoothedValue barrier_condexp_fine(const CondExpInputs& inputs,
                                   const MarketParams& params, double s_prev);

// Chain a SmoothedValue through the tangents carried by CondExpInputs.
GreekTriple chain_condexp(const SmoothedValue& v, const CondExpInputs& inputs);

// ---------------------------------------------------------------------------
// Brownian bridge minimum.
// ---------------------------------------------------------------------------

// One timestep of width h from s_left to s_right with diffusion coefficient
// b, plus the uniform variate u that drives the sampled minimum.
struct BridgeSample {
  double s_left = 0.0;
  double s_right = 0.0;
  double b = 0.0;
  double h = 0.0;
  double u = 0.0;  // in (0, 1)
};

// Sampled conditional minimum
//   m = (s_l + s_r - sqrt((s_r - s_l)^2 - 2 b^2 h ln u)) / 2.
double bridge_min(const BridgeSample& s);

struct BridgeMinGrad {
  double m = 0.0;
  double dm_dsl = 0.0;
  double dm_dsr = 0.0;
  double dm_db = 0.0;
};

// bridge_min with partials in (s_left, s_right, b); u is held fixed.  At the
// degenerate point (s_left == s_right, u == 1) the symmetric subgradient
// (1/2, 1/2, 0) is used.
BridgeMinGrad bridge_min_grad(const BridgeSample& s);

// Midpoint of a coarse step reconstructed from the two fine increments:
//   m = (s_left + s_right - b (dw_second - dw_first)) / 2.
double coarse_midpoint(double s_left, double s_right, double b,
                       double dw_second_minus_first);

// Minimum over a coarse step: bridge minima of the two half-steps of width
// h_c / 2 through the reconstructed midpoint, reusing the fine uniforms.
double coarse_bridge_min(double s_left, double s_mid, double s_right, double b,
                         double h_c, double u_first, double u_second);

// ---------------------------------------------------------------------------
// Barrier crossing probability for one timestep.
// ---------------------------------------------------------------------------

// p = exp(-2 (s_left - B)^+ (s_right - B)^+ / (b^2 h)); for b == 0 the limit
// 1{min(s_left, s_right) <= B}.
double crossing_prob(double s_left, double s_right, double barrier, double b,
                     double h);

struct CrossingProbGrad {
  double p = 0.0;
  double dp_dsl = 0.0;
  double dp_dsr = 0.0;
  double dp_db = 0.0;
};

CrossingProbGrad crossing_prob_grad(double s_left, double s_right,
                                    double barrier, double b, double h);

// ---------------------------------------------------------------------------
// Whole-path payoff evaluators (undiscounted).
//
// Each walks a simulated path and returns the payoff with its two pathwise
// sensitivities.  The diffusion coefficient for bridge and crossing formulas
// within a step is frozen at the step's left endpoint, b = sigma * s_left.
// ---------------------------------------------------------------------------

// Down-and-out call, fine path: (s_N - K)^+ times the product of per-step
// survival probabilities 1 - p_n.
GreekTriple barrier_survival_fine(const CoupledPath& path,
                                  const MarketParams& params);

// Down-and-out call, coarse path: each coarse step contributes the survival
// factors of its two halves through the reconstructed midpoint.
GreekTriple barrier_survival_coarse(const CoupledPath& path,
                                    const MarketParams& params);

// Smoothed down-and-out call: conditional-expectation call value over an
// artificial final step of width h_star, times the survival product.
GreekTriple barrier_smooth_fine(const CoupledPath& path,
                                const MarketParams& params, double h_star);

GreekTriple barrier_smooth_coarse(const CoupledPath& path,
                                  const MarketParams& params, double h_star);

// Building blocks for estimators that rework the final timestep (splitting,
// vibrato): survival products over a leading run of steps, and the smoothed
// terminal factor on its own.  These triples carry a scalar in .value and its
// derivatives along the two Greek directions in .delta/.vega.

// Product of (1 - p_n) over the first n_steps fine steps.
GreekTriple survival_prefix_fine(const CoupledPath& path,
                                 const MarketParams& params,
                                 std::size_t n_steps);

// Same over the first n_steps coarse steps (two half-factors each, through
// the reconstructed midpoints).
GreekTriple survival_prefix_coarse(const CoupledPath& path,
                                   const MarketParams& params,
                                   std::size_t n_steps);

// Smoothed call factor at a terminal tangent state: call_condexp(s, beta_s)
// with beta_s = sigma sqrt(h_star) s, chained through the state's tangents.
GreekTriple smoothed_terminal_call(const TangentState& terminal,
                                   const MarketParams& params, double h_star);

// Floating-strike lookback s_N - min_t s_t with the minimum sampled per step
// from the Brownian bridge; uniforms supplies one variate per fine step.
GreekTriple lookback_payoff_fine(const CoupledPath& path,
                                 const MarketParams& params,
                                 std::span<const double> uniforms);

// Coarse lookback: half-step bridge minima through reconstructed midpoints,
// reusing the fine uniforms (two per coarse step).
GreekTriple lookback_payoff_coarse(const CoupledPath& path,
                                   const MarketParams& params,
                                   std::span<const double> uniforms);

}  // namespace mlg
