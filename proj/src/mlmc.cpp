#include "mlg/mlmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mlg/stats.hpp"

namespace mlg {

const char* to_string(Output o) {
  switch (o) {
    case Output::value: return "value";
    case Output::delta: return "delta";
    case Output::vega: return "vega";
  }
  return "?";
}

double component(const GreekTriple& g, Output o) {
  switch (o) {
    case Output::value: return g.value;
    case Output::delta: return g.delta;
    case Output::vega: return g.vega;
  }
  return 0.0;
}

const char* to_string(ComplexityClass c) {
  switch (c) {
    case ComplexityClass::eps2: return "eps2";
    case ComplexityClass::eps2log2: return "eps2log2";
    case ComplexityClass::eps2plus: return "eps2plus";
  }
  return "?";
}

namespace {

constexpr std::int64_t kChunk = 8192;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Accumulated state of one level; path indices [0, next_index) consumed.
struct LevelAccum {
  TripleMoments y;
  TripleMoments fine;
  TripleMoments coarse;
  KahanSum cost;
  std::int64_t n_rejected = 0;
  std::int64_t n_nonfinite = 0;
  std::uint64_t next_index = 0;
};

struct ChunkAcc {
  TripleMoments y;
  TripleMoments fine;
  TripleMoments coarse;
  KahanSum cost;
  std::int64_t n_rejected = 0;
  std::int64_t n_nonfinite = 0;
};

void run_chunk(LevelEstimator& est, std::uint64_t seed, std::uint64_t first,
               std::uint64_t last, ChunkAcc& acc) {
  for (std::uint64_t i = first; i < last; ++i) {
    const LevelSample s = est(seed, i);
    acc.y.add(s.y);
    acc.fine.add(s.fine);
    acc.coarse.add(s.coarse);
    acc.cost.add(s.cost);
    if (s.rejected) ++acc.n_rejected;
    if (s.nonfinite) ++acc.n_nonfinite;
  }
}

// Adds n more samples (continuing at acc.next_index). Chunk boundaries and
// the merge order depend only on the index range, so any worker count gives
// identical bits.
void accumulate(const MethodSpec& spec, const MarketParams& params, int level,
                std::uint64_t seed, std::int64_t n, int n_threads,
                LevelAccum& acc) {
  if (n <= 0) return;
  const std::uint64_t first = acc.next_index;
  const std::uint64_t last = first + static_cast<std::uint64_t>(n);
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<ChunkAcc> chunks(static_cast<std::size_t>(n_chunks));

  int workers = n_threads > 0
                    ? n_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n_chunks) workers = static_cast<int>(n_chunks);

  const auto worker = [&](std::atomic<std::int64_t>& next) {
    LevelEstimator est(spec, params, level);
    for (;;) {
      const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) break;
      const std::uint64_t lo = first + static_cast<std::uint64_t>(c) * kChunk;
      const std::uint64_t hi = std::min(last, lo + kChunk);
      run_chunk(est, seed, lo, hi, chunks[static_cast<std::size_t>(c)]);
    }
  };

  std::atomic<std::int64_t> next{0};
  if (workers == 1) {
    worker(next);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back([&] { worker(next); });
    for (auto& t : pool) t.join();
  }

  for (const ChunkAcc& c : chunks) {
    acc.y.merge(c.y);
    acc.fine.merge(c.fine);
    acc.coarse.merge(c.coarse);
    acc.cost.merge(c.cost);
    acc.n_rejected += c.n_rejected;
    acc.n_nonfinite += c.n_nonfinite;
  }
  acc.next_index = last;
}

GreekTriple means_of(const TripleMoments& m) {
  return {m.value.mean, m.delta.mean, m.vega.mean};
}

GreekTriple variances_of(const TripleMoments& m) {
  return {m.value.variance(), m.delta.variance(), m.vega.variance()};
}

LevelStats to_stats(const LevelAccum& acc, int level, double maturity) {
  LevelStats st;
  st.level = level;
  st.h = maturity / static_cast<double>(std::int64_t{1} << level);
  st.n_samples = acc.y.value.n;
  st.mean = means_of(acc.y);
  st.variance = variances_of(acc.y);
  st.mean_fine = means_of(acc.fine);
  st.var_fine = variances_of(acc.fine);
  st.mean_coarse = means_of(acc.coarse);
  st.var_coarse = variances_of(acc.coarse);
  st.cost = acc.cost.sum;
  st.n_rejected = acc.n_rejected;
  st.n_nonfinite = acc.n_nonfinite;
  st.reject_flagged =
      acc.n_rejected * 100 > st.n_samples;  // more than 1% rejected
  return st;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace

LevelStats collect_level(const MethodSpec& spec, const MarketParams& params,
                         int level, std::int64_t n, std::uint64_t seed,
                         int n_threads) {
  if (n < 2) throw std::invalid_argument("collect_level: need n >= 2");
  validate(spec, params);
  LevelAccum acc;
  accumulate(spec, params, level, seed, n, n_threads, acc);
  return to_stats(acc, level, params.maturity);
}

RateFit fit_rate(const std::vector<LevelStats>& levels, Output output,
                 int fit_min, int fit_max) {
  std::vector<double> x, y;
  for (const LevelStats& st : levels) {
    if (st.level < fit_min || st.level > fit_max) continue;
    const double v = component(st.variance, output);
    if (!(v > 0.0))
      throw std::invalid_argument("fit_rate: non-positive variance in range");
    x.push_back(static_cast<double>(st.level));
    y.push_back(std::log2(v));
  }
  if (x.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 levels in range");
  const LineFit f = least_squares(x, y);
  return {-f.slope, std::exp2(f.intercept)};
}

WeakRateFit fit_weak_rate(const std::vector<LevelStats>& levels, Output output) {
  std::vector<const LevelStats*> corr;
  for (const LevelStats& st : levels)
    if (st.level >= 1) corr.push_back(&st);
  if (corr.size() < 3)
    throw std::invalid_argument("fit_weak_rate: need at least 3 correction levels");

  std::size_t n_weak = 0;
  std::vector<double> x, y;
  for (const LevelStats* st : corr) {
    const double m = std::abs(component(st->mean, output));
    const double se =
        st->n_samples > 0
            ? std::sqrt(component(st->variance, output) /
                        static_cast<double>(st->n_samples))
            : 0.0;
    if (m <= 3.0 * se) ++n_weak;
    if (m > 0.0) {
      x.push_back(static_cast<double>(st->level));
      y.push_back(std::log2(m));
    }
  }
  WeakRateFit out;
  out.unreliable = 2 * n_weak >= corr.size();
  if (x.size() < 3) {
    out.unreliable = true;
    out.alpha_hat = kNan;
    return out;
  }
  out.alpha_hat = -least_squares(x, y).slope;
  return out;
}

std::vector<std::int64_t> allocate_samples(const std::vector<double>& variances,
                                           const std::vector<double>& costs_per_sample,
                                           double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("allocate_samples: epsilon must be > 0");
  if (variances.size() != costs_per_sample.size())
    throw std::invalid_argument("allocate_samples: size mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] >= 0.0))
      throw std::invalid_argument("allocate_samples: negative variance");
    if (!(costs_per_sample[l] > 0.0))
      throw std::invalid_argument("allocate_samples: costs must be > 0");
    total += std::sqrt(variances[l] * costs_per_sample[l]);
  }
  std::vector<std::int64_t> out(variances.size());
  const double scale = 2.0 / (epsilon * epsilon);
  for (std::size_t l = 0; l < variances.size(); ++l) {
    const double ideal =
        scale * std::sqrt(variances[l] / costs_per_sample[l]) * total;
    std::int64_t n = static_cast<std::int64_t>(std::ceil(ideal));
    if (n < 2) n = 2;
    out[l] = n;
  }
  return out;
}

Complexity classify_complexity(double beta_hat, double alpha_hat) {
  if (!(alpha_hat >= 0.5))
    throw std::invalid_argument(
        "classify_complexity: needs alpha_hat >= 0.5 (Theorem 1)");
  Complexity c;
  if (beta_hat > 1.1) {
    c.cls = ComplexityClass::eps2;
    c.exponent = -2.0;
  } else if (beta_hat >= 0.9) {
    c.cls = ComplexityClass::eps2log2;
    c.exponent = -2.0;
  } else {
    c.cls = ComplexityClass::eps2plus;
    c.exponent = -2.0 - (1.0 - beta_hat) / alpha_hat;
  }
  return c;
}

namespace {

double clamp_alpha(double alpha) {
  if (!std::isfinite(alpha)) return 1.0;
  if (alpha < 0.5) return 0.5;
  if (alpha > 2.0) return 2.0;
  return alpha;
}

}  // namespace

MlmcReport run_mlmc(const MethodSpec& spec, const MarketParams& params,
                    double epsilon, std::uint64_t seed,
                    const MlmcOptions& options) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("run_mlmc: epsilon must be > 0");
  validate(spec, params);
  if (options.max_level < 2)
    throw std::invalid_argument("run_mlmc: max_level must be >= 2");

  std::vector<LevelAccum> acc(3);
  int top = 2;
  const auto ensure = [&](int level, std::int64_t target) {
    LevelAccum& a = acc[static_cast<std::size_t>(level)];
    const std::int64_t have = static_cast<std::int64_t>(a.next_index);
    if (have < target)
      accumulate(spec, params, level, seed, target - have, options.n_threads, a);
  };
  for (int l = 0; l <= top; ++l) ensure(l, std::max<std::int64_t>(options.pilot, 2));

  const auto stats_now = [&] {
    std::vector<LevelStats> out;
    out.reserve(acc.size());
    for (int l = 0; l <= top; ++l)
      out.push_back(to_stats(acc[static_cast<std::size_t>(l)], l, params.maturity));
    return out;
  };

  const auto weak_alpha = [&](const std::vector<LevelStats>& st) {
    if (top < 3) return 1.0;
    try {
      const WeakRateFit f = fit_weak_rate(st, Output::value);
      if (f.unreliable) return 1.0;
      return clamp_alpha(f.alpha_hat);
    } catch (const std::invalid_argument&) {
      return 1.0;
    }
  };

  bool converged = false;
  for (int round = 0; round < options.max_rounds; ++round) {
    std::vector<double> variances, costs;
    for (int l = 0; l <= top; ++l) {
      const LevelAccum& a = acc[static_cast<std::size_t>(l)];
      variances.push_back(a.y.value.variance());
      const double n = static_cast<double>(a.y.value.n);
      costs.push_back(a.cost.sum / n);
    }
    const std::vector<std::int64_t> want =
        allocate_samples(variances, costs, epsilon);
    bool topped = false;
    for (int l = 0; l <= top; ++l) {
      const std::int64_t target =
          std::max(want[static_cast<std::size_t>(l)], options.min_samples);
      if (static_cast<std::int64_t>(acc[static_cast<std::size_t>(l)].next_index) <
          target) {
        ensure(l, target);
        topped = true;
      }
    }
    if (topped) continue;

    const std::vector<LevelStats> st = stats_now();
    const double alpha = weak_alpha(st);
    const double tail =
        std::abs(acc[static_cast<std::size_t>(top)].y.value.mean);
    const double bias = tail / (std::exp2(alpha) - 1.0);
    if (bias <= epsilon / std::sqrt(2.0)) {
      converged = true;
      break;
    }
    if (top >= options.max_level) break;
    ++top;
    acc.resize(static_cast<std::size_t>(top) + 1);
    ensure(top, std::max<std::int64_t>(options.pilot, 2));
  }

  MlmcReport rep;
  rep.epsilon = epsilon;
  rep.converged = converged;
  rep.levels = stats_now();
  for (const LevelStats& st : rep.levels) {
    rep.estimates += st.mean;
    rep.total_cost += st.cost;
    rep.total_rejected += st.n_rejected;
    rep.total_nonfinite += st.n_nonfinite;
  }
  GreekTriple sum_var_over_n;
  for (const LevelStats& st : rep.levels) {
    const double n = static_cast<double>(st.n_samples);
    sum_var_over_n.value += st.variance.value / n;
    sum_var_over_n.delta += st.variance.delta / n;
    sum_var_over_n.vega += st.variance.vega / n;
  }
  rep.std_errors = {std::sqrt(sum_var_over_n.value), std::sqrt(sum_var_over_n.delta),
                    std::sqrt(sum_var_over_n.vega)};

  const Output outputs[3] = {Output::value, Output::delta, Output::vega};
  double betas[3], alphas[3];
  for (int k = 0; k < 3; ++k) {
    try {
      betas[k] = fit_rate(rep.levels, outputs[k], 1, top).beta_hat;
    } catch (const std::invalid_argument&) {
      betas[k] = kNan;
    }
    try {
      const WeakRateFit f = fit_weak_rate(rep.levels, outputs[k]);
      alphas[k] = f.unreliable ? kNan : f.alpha_hat;
    } catch (const std::invalid_argument&) {
      alphas[k] = kNan;
    }
  }
  rep.beta_hat = {betas[0], betas[1], betas[2]};
  rep.alpha_hat = {alphas[0], alphas[1], alphas[2]};
  std::optional<Complexity>* slots[3] = {&rep.complexity_value,
                                         &rep.complexity_delta,
                                         &rep.complexity_vega};
  for (int k = 0; k < 3; ++k) {
    if (std::isfinite(betas[k]))
      *slots[k] = classify_complexity(betas[k], clamp_alpha(alphas[k]));
  }
  return rep;
}

}  // namespace mlg
