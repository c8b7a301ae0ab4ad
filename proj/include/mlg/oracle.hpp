#pragma once

#include <cstdint>

#include "mlg/estimators.hpp"
#include "mlg/sde.hpp"

// Independent reference values for validation: Black-Scholes closed forms
// and a high-resolution single-level Monte Carlo fallback for payoffs whose
// closed forms are not wired in.

namespace mlg {

enum class RefSource { closed_form, quadrature, high_resolution_mc };
const char* to_string(RefSource s);

struct Reference {
  double value = 0.0;
  double delta = 0.0;
  double vega = 0.0;
  RefSource source = RefSource::closed_form;
  double uncertainty = 0.0;  // standard error of value when stochastic
};

// European call: price S0 Phi(d1) - K e^{-rT} Phi(d2), delta Phi(d1),
// vega S0 sqrt(T) phi(d1). Requires sigma > 0 and T > 0.
Reference bs_call(const MarketParams& params);

// Digital (cash-or-nothing) call: price e^{-rT} Phi(d2) with its closed-form
// delta and vega. Requires sigma > 0.
Reference bs_digital(const MarketParams& params);

// Plain fine-side estimate at one level: mean of the fine contribution with
// its standard error, as a self-referenced ground truth for lookback/barrier
// checks.
Reference reference_mc(const MethodSpec& spec, const MarketParams& params,
                       int level, std::int64_t n, std::uint64_t seed);

}  // namespace mlg
