#include "mlg/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace mlg {

const char* to_string(Method m) {
  switch (m) {
    case Method::pathwise: return "pathwise";
    case Method::cond_exp: return "cond_exp";
    case Method::split: return "split";
    case Method::vibrato: return "vibrato";
  }
  return "?";
}

const char* to_string(PayoffKind p) {
  switch (p) {
    case PayoffKind::call: return "call";
    case PayoffKind::digital: return "digital";
    case PayoffKind::lookback: return "lookback";
    case PayoffKind::barrier: return "barrier";
    case PayoffKind::barrier_smooth: return "barrier_smooth";
  }
  return "?";
}

int split_count(int level, const SplitCountRule& rule) {
  if (level < 0) throw std::invalid_argument("split_count: level must be >= 0");
  if (!rule.adaptive) {
    if (rule.d < 1) throw std::invalid_argument("split_count: d must be >= 1");
    return rule.d;
  }
  if (!(rule.c > 0.0)) throw std::invalid_argument("split_count: c must be > 0");
  return static_cast<int>(std::ceil(rule.c * std::exp2(0.5 * level)));
}

void validate(const MethodSpec& spec, const MarketParams& params) {
  validate(params);
  const PayoffKind p = spec.payoff_kind;
  bool ok = false;
  switch (spec.method) {
    case Method::pathwise:
      // The digital indicator has no pathwise derivative.
      ok = p == PayoffKind::call || p == PayoffKind::lookback ||
           p == PayoffKind::barrier || p == PayoffKind::barrier_smooth;
      break;
    case Method::cond_exp:
      ok = p == PayoffKind::call || p == PayoffKind::digital;
      break;
    case Method::split:
    case Method::vibrato:
      ok = p == PayoffKind::call || p == PayoffKind::digital ||
           p == PayoffKind::barrier_smooth;
      break;
  }
  if (!ok) {
    throw std::invalid_argument(std::string("method ") + to_string(spec.method) +
                                " does not support payoff " + to_string(p));
  }
  if (p == PayoffKind::barrier || p == PayoffKind::barrier_smooth) {
    if (!params.barrier)
      throw std::invalid_argument("barrier payoffs need params.barrier");
  }
  if (p == PayoffKind::barrier_smooth) {
    if (!spec.h_star || !(*spec.h_star > 0.0))
      throw std::invalid_argument("barrier_smooth needs h_star > 0");
  }
  if (spec.method == Method::split || spec.method == Method::vibrato) {
    if (spec.split_rule.adaptive) {
      if (!(spec.split_rule.c > 0.0))
        throw std::invalid_argument("adaptive split rule needs c > 0");
    } else if (spec.split_rule.d < 1) {
      throw std::invalid_argument("split rule needs d >= 1");
    }
  }
  if (spec.grid == GridKind::power) {
    if (spec.method != Method::pathwise)
      throw std::invalid_argument(
          "power grid is supported for the pathwise method only");
    if (!(spec.gamma >= 1.0))
      throw std::invalid_argument("power grid needs gamma >= 1");
  }
}

namespace {

// GreekTriple doubles as (scalar, d/dS0-direction, d/dsigma-direction) for
// intermediate factors; mul_chain combines two such factors by the product
// rule.
GreekTriple mul_chain(const GreekTriple& a, const GreekTriple& b) {
  GreekTriple out;
  out.value = a.value * b.value;
  out.delta = a.delta * b.value + a.value * b.delta;
  out.vega = a.vega * b.value + a.value * b.vega;
  return out;
}

GreekTriple state_triple(const TangentState& st) {
  return {st.s, st.ds_ds0, st.ds_dsigma};
}

// Diffusion coefficient b = sigma * s at a state, with tangents.
GreekTriple b_triple(const TangentState& st, const MarketParams& params) {
  return {params.sigma * st.s, params.sigma * st.ds_ds0,
          st.s + params.sigma * st.ds_dsigma};
}

GreekTriple call_triple(const TangentState& st, double strike) {
  const PayoffWeight pay = call_payoff(st.s, strike);
  return {pay.value, pay.weight * st.ds_ds0, pay.weight * st.ds_dsigma};
}

// Survival factor 1 - p between two endpoint factors (value + tangents).
GreekTriple survival_factor(const GreekTriple& left, const GreekTriple& right,
                            const GreekTriple& b, double barrier, double h) {
  const CrossingProbGrad g =
      crossing_prob_grad(left.value, right.value, barrier, b.value, h);
  GreekTriple q;
  q.value = 1.0 - g.p;
  q.delta = -(g.dp_dsl * left.delta + g.dp_dsr * right.delta + g.dp_db * b.delta);
  q.vega = -(g.dp_dsl * left.vega + g.dp_dsr * right.vega + g.dp_db * b.vega);
  return q;
}

bool finite(const GreekTriple& g) {
  return std::isfinite(g.value) && std::isfinite(g.delta) && std::isfinite(g.vega);
}

}  // namespace

LevelEstimator::LevelEstimator(const MethodSpec& spec, const MarketParams& params,
                               int level)
    : spec_(spec), params_(params), level_(level) {
  validate(spec_, params_);
  if (level < 0) throw std::invalid_argument("LevelEstimator: level must be >= 0");
  if (level > 30) throw std::invalid_argument("LevelEstimator: level too large");
  discount_ = std::exp(-params_.rate * params_.maturity);
  const int n_fine = 1 << level;
  if (spec_.grid == GridKind::power && spec_.gamma != 1.0) {
    fine_ = power_grid(n_fine, spec_.gamma, params_.maturity);
    if (level > 0) coarse_ = power_grid(n_fine / 2, spec_.gamma, params_.maturity);
  } else {
    fine_ = uniform_grid(level, params_.maturity);
    if (level > 0) coarse_ = uniform_grid(level - 1, params_.maturity);
  }
  if (spec_.method == Method::split || spec_.method == Method::vibrato) {
    d_ = split_count(level, spec_.split_rule);
    draws_.resize(static_cast<std::size_t>(d_));
  }
  if (spec_.payoff_kind == PayoffKind::lookback)
    uniforms_.resize(fine_.steps());
}

LevelSample LevelEstimator::operator()(std::uint64_t seed,
                                       std::uint64_t path_index) {
  SampleKey key;
  key.seed = seed;
  key.level = static_cast<std::uint32_t>(level_);
  key.path_index = path_index;
  key.tag = StreamTag::path;
  switch (spec_.method) {
    case Method::pathwise: return run_pathwise(key);
    case Method::cond_exp: return run_condexp(key);
    case Method::split: return run_split(key);
    case Method::vibrato: return run_vibrato(key);
  }
  throw std::logic_error("unreachable");
}

void LevelEstimator::finish(LevelSample& s) const {
  s.fine *= discount_;
  s.coarse *= discount_;
  s.y = s.fine - s.coarse;
  if (!finite(s.y) || !finite(s.fine) || !finite(s.coarse)) {
    s.y = s.fine = s.coarse = GreekTriple{};
    s.nonfinite = true;
  }
}

LevelSample LevelEstimator::run_pathwise(const SampleKey& key) {
  const TimeGrid* coarse = level_ > 0 ? &coarse_ : nullptr;
  simulate_coupled(params_, fine_, coarse, key, false, path_);
  LevelSample s;
  switch (spec_.payoff_kind) {
    case PayoffKind::call:
      s.fine = call_triple(path_.fine_states.back(), params_.strike);
      if (level_ > 0)
        s.coarse = call_triple(path_.coarse_states.back(), params_.strike);
      break;
    case PayoffKind::lookback: {
      SampleKey ukey = key;
      ukey.tag = StreamTag::bridge;
      uniform_stream(ukey, std::span<double>(uniforms_));
      s.fine = lookback_payoff_fine(path_, params_, uniforms_);
      if (level_ > 0)
        s.coarse = lookback_payoff_coarse(path_, params_, uniforms_);
      break;
    }
    case PayoffKind::barrier:
      s.fine = barrier_survival_fine(path_, params_);
      if (level_ > 0) s.coarse = barrier_survival_coarse(path_, params_);
      break;
    case PayoffKind::barrier_smooth:
      s.fine = barrier_smooth_fine(path_, params_, *spec_.h_star);
      if (level_ > 0)
        s.coarse = barrier_smooth_coarse(path_, params_, *spec_.h_star);
      break;
    case PayoffKind::digital:
      throw std::logic_error("validated away");
  }
  s.cost = static_cast<double>(fine_.steps() + (level_ > 0 ? coarse_.steps() : 0));
  finish(s);
  return s;
}

LevelSample LevelEstimator::run_condexp(const SampleKey& key) {
  const TimeGrid* coarse = level_ > 0 ? &coarse_ : nullptr;
  simulate_coupled(params_, fine_, coarse, key, true, path_);
  const bool digital = spec_.payoff_kind == PayoffKind::digital;
  LevelSample s;
  const CondExpInputs in_f = fine_condexp_inputs(path_.fine_states.back(),
                                                 fine_.widths.back(), params_);
  const SmoothedValue v_f = digital ? digital_condexp(in_f, params_.strike)
                                    : call_condexp(in_f, params_.strike);
  s.fine = chain_condexp(v_f, in_f);
  if (level_ > 0) {
    const CondExpInputs in_c =
        coarse_condexp_inputs(path_.coarse_states.back(), coarse_.widths.back(),
                              path_.penultimate_fine_increment, params_);
    const SmoothedValue v_c = digital ? digital_condexp(in_c, params_.strike)
                                      : call_condexp(in_c, params_.strike);
    s.coarse = chain_condexp(v_c, in_c);
  }
  s.cost = level_ > 0
               ? static_cast<double>((fine_.steps() - 1) + (coarse_.steps() - 1) + 2)
               : 1.0;
  finish(s);
  return s;
}

LevelSample LevelEstimator::run_split(const SampleKey& key) {
  const TimeGrid* coarse = level_ > 0 ? &coarse_ : nullptr;
  simulate_coupled(params_, fine_, coarse, key, true, path_);
  SampleKey skey = key;
  skey.tag = StreamTag::split;
  normal_stream(skey, std::span<double>(draws_));

  const double h_fin = fine_.widths.back();
  const double rooth = std::sqrt(h_fin);
  const double inv_d = 1.0 / static_cast<double>(d_);
  const bool smooth = spec_.payoff_kind == PayoffKind::barrier_smooth;
  const double barrier = params_.barrier ? *params_.barrier : 0.0;

  LevelSample s;
  {
    const TangentState& pen = path_.fine_states.back();
    GreekTriple prefix{1.0, 0.0, 0.0};
    if (smooth)
      prefix = survival_prefix_fine(path_, params_, fine_.steps() - 1);
    const GreekTriple pen_t = state_triple(pen);
    const GreekTriple b = b_triple(pen, params_);
    GreekTriple sum{};
    for (int i = 0; i < d_; ++i) {
      const double dw = rooth * draws_[static_cast<std::size_t>(i)];
      const TangentState term = milstein_step(pen, dw, h_fin, params_);
      switch (spec_.payoff_kind) {
        case PayoffKind::call:
          sum += call_triple(term, params_.strike);
          break;
        case PayoffKind::digital:
          sum.value += digital_payoff(term.s, params_.strike);
          break;
        case PayoffKind::barrier_smooth: {
          const GreekTriple q =
              survival_factor(pen_t, state_triple(term), b, barrier, h_fin);
          const GreekTriple g =
              smoothed_terminal_call(term, params_, *spec_.h_star);
          sum += mul_chain(mul_chain(prefix, q), g);
          break;
        }
        default:
          throw std::logic_error("validated away");
      }
    }
    s.fine = sum * inv_d;
  }

  if (level_ > 0) {
    const TangentState& pen = path_.coarse_states.back();
    const double h_cfin = coarse_.widths.back();
    const double dw_pen = path_.penultimate_fine_increment;
    GreekTriple prefix{1.0, 0.0, 0.0};
    if (smooth)
      prefix = survival_prefix_coarse(path_, params_, coarse_.steps() - 1);
    const GreekTriple pen_t = state_triple(pen);
    const GreekTriple b = b_triple(pen, params_);
    const double h1 = fine_.widths[fine_.steps() - 2];
    const double h2 = fine_.widths[fine_.steps() - 1];
    GreekTriple sum{};
    for (int i = 0; i < d_; ++i) {
      const double dw_fine = rooth * draws_[static_cast<std::size_t>(i)];
      const double dw = dw_pen + dw_fine;
      const TangentState term = milstein_step(pen, dw, h_cfin, params_);
      switch (spec_.payoff_kind) {
        case PayoffKind::call:
          sum += call_triple(term, params_.strike);
          break;
        case PayoffKind::digital:
          sum.value += digital_payoff(term.s, params_.strike);
          break;
        case PayoffKind::barrier_smooth: {
          // Midpoint of the redrawn final coarse step from its two halves
          // (dw_pen, dw_fine).
          const GreekTriple term_t = state_triple(term);
          const double arg = dw_fine - dw_pen;
          GreekTriple mid;
          mid.value = coarse_midpoint(pen.s, term.s, b.value, arg);
          mid.delta = 0.5 * (pen_t.delta + term_t.delta - b.delta * arg);
          mid.vega = 0.5 * (pen_t.vega + term_t.vega - b.vega * arg);
          const GreekTriple q1 = survival_factor(pen_t, mid, b, barrier, h1);
          const GreekTriple q2 = survival_factor(mid, term_t, b, barrier, h2);
          const GreekTriple g =
              smoothed_terminal_call(term, params_, *spec_.h_star);
          sum += mul_chain(mul_chain(mul_chain(prefix, q1), q2), g);
          break;
        }
        default:
          throw std::logic_error("validated away");
      }
    }
    s.coarse = sum * inv_d;
  }

  s.cost = level_ > 0 ? static_cast<double>((fine_.steps() - 1) +
                                            (coarse_.steps() - 1) + 2 * d_)
                      : static_cast<double>(d_);
  finish(s);
  return s;
}

namespace {

// One side of the vibrato estimator: likelihood-ratio scores over the final
// Gaussian step plus the pathwise derivative of the payoff at fixed terminal
// value. The payoff at the conditional mean enters the score sums as a control
// variate (E[z] = E[z^2-1] = 0 keeps them unbiased); without it the score
// noise scales with the payoff itself and the level variance stops decaying.
struct VibratoAccum {
  double p_at_mean = 0.0;
  double sum_p = 0.0;
  double sum_pz = 0.0;
  double sum_pz2 = 0.0;  // (P - P(mean)) * (z^2 - 1)
  double sum_dp_d = 0.0;
  double sum_dp_v = 0.0;

  void add(const GreekTriple& payoff_at_x, double z) {
    const double centered = payoff_at_x.value - p_at_mean;
    sum_p += payoff_at_x.value;
    sum_pz += centered * z;
    sum_pz2 += centered * (z * z - 1.0);
    sum_dp_d += payoff_at_x.delta;
    sum_dp_v += payoff_at_x.vega;
  }

  GreekTriple reduce(const CondExpInputs& in, double inv_d) const {
    const double avg_pz_over_sigma = sum_pz * inv_d / in.beta;
    const double avg_pz2_over_sigma = sum_pz2 * inv_d / in.beta;
    GreekTriple g;
    g.value = sum_p * inv_d;
    g.delta = in.dalpha_ds0 * avg_pz_over_sigma +
              in.dbeta_ds0 * avg_pz2_over_sigma + sum_dp_d * inv_d;
    g.vega = in.dalpha_dsigma * avg_pz_over_sigma +
             in.dbeta_dsigma * avg_pz2_over_sigma + sum_dp_v * inv_d;
    return g;
  }
};

}  // namespace

LevelSample LevelEstimator::run_vibrato(const SampleKey& key) {
  const TimeGrid* coarse = level_ > 0 ? &coarse_ : nullptr;
  simulate_coupled(params_, fine_, coarse, key, true, path_);

  const double h_fin = fine_.widths.back();
  const double rooth = std::sqrt(h_fin);
  const double inv_d = 1.0 / static_cast<double>(d_);
  const bool smooth = spec_.payoff_kind == PayoffKind::barrier_smooth;
  const double barrier = params_.barrier ? *params_.barrier : 0.0;
  const double strike = params_.strike;

  LevelSample s;
  s.cost = level_ > 0 ? static_cast<double>((fine_.steps() - 1) +
                                            (coarse_.steps() - 1) + 2 * d_)
                      : static_cast<double>(d_);

  const TangentState& pen_f = path_.fine_states.back();
  const CondExpInputs in_f = fine_condexp_inputs(pen_f, h_fin, params_);
  CondExpInputs in_c;
  if (level_ > 0)
    in_c = coarse_condexp_inputs(path_.coarse_states.back(),
                                 coarse_.widths.back(),
                                 path_.penultimate_fine_increment, params_);
  if (in_f.beta <= 0.0 || (level_ > 0 && in_c.beta <= 0.0)) {
    s.rejected = true;
    return s;
  }

  SampleKey skey = key;
  skey.tag = StreamTag::split;
  normal_stream(skey, std::span<double>(draws_));

  // Payoff at a fixed terminal value x: value plus its derivative along each
  // Greek direction holding x fixed (the likelihood ratio handles the final
  // step's own dependence).
  const auto payoff_at = [&](double x, const GreekTriple& extra) -> GreekTriple {
    switch (spec_.payoff_kind) {
      case PayoffKind::call:
        return {x > strike ? x - strike : 0.0, 0.0, 0.0};
      case PayoffKind::digital:
        return {digital_payoff(x, strike), 0.0, 0.0};
      case PayoffKind::barrier_smooth: {
        // extra carries prefix * final survival factor(s) at fixed x; the
        // smoothing beta_s = sigma sqrt(h*) x keeps an explicit sigma term.
        const double root_hs = std::sqrt(*spec_.h_star);
        const SmoothedValue v =
            call_condexp(x, params_.sigma * root_hs * x, strike);
        const GreekTriple g{v.value, 0.0, v.dvalue_dbeta * root_hs * x};
        return mul_chain(extra, g);
      }
      default:
        throw std::logic_error("validated away");
    }
  };

  {
    GreekTriple prefix{1.0, 0.0, 0.0};
    if (smooth)
      prefix = survival_prefix_fine(path_, params_, fine_.steps() - 1);
    const GreekTriple pen_t = state_triple(pen_f);
    const GreekTriple b = b_triple(pen_f, params_);
    const auto eval_at = [&](double z) -> GreekTriple {
      const double x = in_f.alpha + in_f.beta * z;
      GreekTriple extra{1.0, 0.0, 0.0};
      if (smooth) {
        const GreekTriple q =
            survival_factor(pen_t, {x, 0.0, 0.0}, b, barrier, h_fin);
        extra = mul_chain(prefix, q);
      }
      return payoff_at(x, extra);
    };
    VibratoAccum acc;
    acc.p_at_mean = eval_at(0.0).value;
    for (int i = 0; i < d_; ++i) {
      const double z = draws_[static_cast<std::size_t>(i)];
      acc.add(eval_at(z), z);
    }
    s.fine = acc.reduce(in_f, inv_d);
  }

  if (level_ > 0) {
    const TangentState& pen = path_.coarse_states.back();
    const double dw_pen = path_.penultimate_fine_increment;
    GreekTriple prefix{1.0, 0.0, 0.0};
    if (smooth)
      prefix = survival_prefix_coarse(path_, params_, coarse_.steps() - 1);
    const GreekTriple pen_t = state_triple(pen);
    const GreekTriple b = b_triple(pen, params_);
    const double h1 = fine_.widths[fine_.steps() - 2];
    const double h2 = fine_.widths[fine_.steps() - 1];
    const auto eval_at = [&](double z) -> GreekTriple {
      const double x = in_c.alpha + in_c.beta * z;
      GreekTriple extra{1.0, 0.0, 0.0};
      if (smooth) {
        const double dw_fine = rooth * z;
        const double arg = dw_fine - dw_pen;
        GreekTriple mid;
        mid.value = coarse_midpoint(pen.s, x, b.value, arg);
        mid.delta = 0.5 * (pen_t.delta - b.delta * arg);
        mid.vega = 0.5 * (pen_t.vega - b.vega * arg);
        const GreekTriple q1 = survival_factor(pen_t, mid, b, barrier, h1);
        const GreekTriple q2 = survival_factor(mid, {x, 0.0, 0.0}, b, barrier, h2);
        extra = mul_chain(mul_chain(prefix, q1), q2);
      }
      return payoff_at(x, extra);
    };
    VibratoAccum acc;
    acc.p_at_mean = eval_at(0.0).value;
    for (int i = 0; i < d_; ++i) {
      const double z = draws_[static_cast<std::size_t>(i)];
      acc.add(eval_at(z), z);
    }
    s.coarse = acc.reduce(in_c, inv_d);
  }

  finish(s);
  return s;
}

namespace {

LevelSample run_checked(Method want, const MethodSpec& spec,
                        const MarketParams& params, int level,
                        const SampleKey& key) {
  if (spec.method != want)
    throw std::invalid_argument("sampler does not match spec.method");
  if (static_cast<int>(key.level) != level)
    throw std::invalid_argument("key.level does not match level");
  LevelEstimator est(spec, params, level);
  return est(key.seed, key.path_index);
}

}  // namespace

LevelSample sample_pathwise(const MethodSpec& spec, const MarketParams& params,
                            int level, const SampleKey& key) {
  return run_checked(Method::pathwise, spec, params, level, key);
}

LevelSample sample_condexp(const MethodSpec& spec, const MarketParams& params,
                           int level, const SampleKey& key) {
  return run_checked(Method::cond_exp, spec, params, level, key);
}

LevelSample sample_split(const MethodSpec& spec, const MarketParams& params,
                         int level, const SampleKey& key) {
  return run_checked(Method::split, spec, params, level, key);
}

LevelSample sample_vibrato(const MethodSpec& spec, const MarketParams& params,
                           int level, const SampleKey& key) {
  return run_checked(Method::vibrato, spec, params, level, key);
}

}  // namespace mlg
