#include "mlg/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "mlg/mlmc.hpp"
#include "mlg/normal.hpp"

namespace mlg {

const char* to_string(RefSource s) {
  switch (s) {
    case RefSource::closed_form: return "closed_form";
    case RefSource::quadrature: return "quadrature";
    case RefSource::high_resolution_mc: return "high_resolution_mc";
  }
  return "?";
}

namespace {

struct D12 {
  double d1;
  double d2;
};

D12 d_pair(const MarketParams& p) {
  const double volroot = p.sigma * std::sqrt(p.maturity);
  const double d1 = (std::log(p.s0 / p.strike) +
                     (p.rate + 0.5 * p.sigma * p.sigma) * p.maturity) /
                    volroot;
  return {d1, d1 - volroot};
}

}  // namespace

Reference bs_call(const MarketParams& p) {
  validate(p);
  if (!(p.sigma > 0.0)) throw std::invalid_argument("bs_call: sigma must be > 0");
  const D12 d = d_pair(p);
  const double disc = std::exp(-p.rate * p.maturity);
  Reference ref;
  ref.value = p.s0 * norm_cdf(d.d1) - p.strike * disc * norm_cdf(d.d2);
  ref.delta = norm_cdf(d.d1);
  ref.vega = p.s0 * std::sqrt(p.maturity) * norm_pdf(d.d1);
  ref.source = RefSource::closed_form;
  return ref;
}

Reference bs_digital(const MarketParams& p) {
  validate(p);
  if (!(p.sigma > 0.0))
    throw std::invalid_argument("bs_digital: sigma must be > 0");
  const D12 d = d_pair(p);
  const double disc = std::exp(-p.rate * p.maturity);
  const double volroot = p.sigma * std::sqrt(p.maturity);
  Reference ref;
  ref.value = disc * norm_cdf(d.d2);
  ref.delta = disc * norm_pdf(d.d2) / (p.s0 * volroot);
  ref.vega = -disc * norm_pdf(d.d2) * d.d1 / p.sigma;
  ref.source = RefSource::closed_form;
  return ref;
}

Reference reference_mc(const MethodSpec& spec, const MarketParams& params,
                       int level, std::int64_t n, std::uint64_t seed) {
  const LevelStats st = collect_level(spec, params, level, n, seed);
  Reference ref;
  ref.value = st.mean_fine.value;
  ref.delta = st.mean_fine.delta;
  ref.vega = st.mean_fine.vega;
  ref.source = RefSource::high_resolution_mc;
  ref.uncertainty =
      std::sqrt(st.var_fine.value / static_cast<double>(st.n_samples));
  return ref;
}

}  // namespace mlg
