#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "mlg/estimators.hpp"
#include "mlg/oracle.hpp"
#include "mlg/rng.hpp"

using namespace mlg;

namespace {

MarketParams defaults() { return {}; }

// Composite-Simpson quadrature of payoff expectations against the standard
// normal density: S_T = S0 exp((r - sigma^2/2) T + sigma sqrt(T) z). An
// independent route to the same numbers as the closed forms.
struct Quad {
  double value, delta, vega;
};

Quad quad_call(const MarketParams& p) {
  const double root = p.sigma * std::sqrt(p.maturity);
  const double mu = (p.rate - 0.5 * p.sigma * p.sigma) * p.maturity;
  const double z_kink = (std::log(p.strike / p.s0) - mu) / root;
  const double z_hi = 12.0;
  if (z_kink >= z_hi) return {0.0, 0.0, 0.0};
  const int n = 20000;  // even
  const double h = (z_hi - z_kink) / n;
  const double inv_sqrt2pi = 0.39894228040143267794;
  double v = 0.0, d = 0.0, g = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = z_kink + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double phi = inv_sqrt2pi * std::exp(-0.5 * z * z);
    const double st = p.s0 * std::exp(mu + root * z);
    v += w * (st - p.strike) * phi;
    d += w * (st / p.s0) * phi;  // dS_T/dS0 at fixed z
    g += w * st * (-p.sigma * p.maturity + std::sqrt(p.maturity) * z) * phi;
  }
  const double disc = std::exp(-p.rate * p.maturity) * h / 3.0;
  return {v * disc, d * disc, g * disc};
}

double quad_digital_value(const MarketParams& p) {
  // P(S_T > K) by quadrature of the density above the kink.
  const double root = p.sigma * std::sqrt(p.maturity);
  const double mu = (p.rate - 0.5 * p.sigma * p.sigma) * p.maturity;
  const double z_kink = (std::log(p.strike / p.s0) - mu) / root;
  const double z_hi = 12.0;
  if (z_kink >= z_hi) return 0.0;
  const int n = 20000;
  const double h = (z_hi - z_kink) / n;
  const double inv_sqrt2pi = 0.39894228040143267794;
  double v = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = z_kink + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    v += w * inv_sqrt2pi * std::exp(-0.5 * z * z);
  }
  return std::exp(-p.rate * p.maturity) * v * h / 3.0;
}

}  // namespace

TEST_CASE("black-scholes call reference values") {
  // Frozen from a high-precision evaluation of the closed form.
  const Reference r = bs_call(defaults());
  CHECK(r.value == doctest::Approx(10.450583572185566782).epsilon(1e-13));
  CHECK(r.delta == doctest::Approx(0.63683065117561907122).epsilon(1e-13));
  CHECK(r.vega == doctest::Approx(37.524034691693787837).epsilon(1e-13));
  CHECK(r.source == RefSource::closed_form);
  CHECK(r.uncertainty == 0.0);
}

TEST_CASE("black-scholes digital reference values") {
  const Reference r = bs_digital(defaults());
  CHECK(r.value == doctest::Approx(0.53232481545376340341).epsilon(1e-13));
  CHECK(r.delta == doctest::Approx(0.018762017345846893919).epsilon(1e-13));
  CHECK(r.vega == doctest::Approx(-0.65667060710464128715).epsilon(1e-13));
  CHECK(r.source == RefSource::closed_form);
  CHECK(r.uncertainty == 0.0);

  // At the at-the-money-forward strike d2 = 0, so the price is e^{-rT}/2.
  MarketParams p = defaults();
  p.strike = p.s0 * std::exp((p.rate - 0.5 * p.sigma * p.sigma) * p.maturity);
  CHECK(bs_digital(p).value ==
        doctest::Approx(std::exp(-p.rate * p.maturity) * 0.5).epsilon(1e-14));
}

TEST_CASE("limits of the call closed form") {
  MarketParams p = defaults();
  p.strike = 1e-6;  // forward limit: price -> S0, delta -> 1, vega -> 0
  const Reference r = bs_call(p);
  CHECK(r.value == doctest::Approx(p.s0).epsilon(1e-6));
  CHECK(r.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.vega) < 1e-12);

  MarketParams otm = defaults();
  otm.strike = 1000.0;
  otm.sigma = 0.05;
  CHECK(bs_call(otm).value < 1e-10);

  MarketParams flat = defaults();
  flat.sigma = 0.0;
  CHECK_THROWS_AS(bs_call(flat), std::invalid_argument);
  CHECK_THROWS_AS(bs_digital(flat), std::invalid_argument);

  // sigma -> 0 approaches the discounted intrinsic forward value.
  MarketParams tiny = defaults();
  tiny.sigma = 1e-8;
  CHECK(bs_call(tiny).value ==
        doctest::Approx(4.8770575499285990909).epsilon(1e-9));
}

TEST_CASE("call price is monotone in volatility and spot") {
  MarketParams p = defaults();
  double prev = -1.0;
  for (int i = 0; i < 10; ++i) {
    p.sigma = 0.05 + 0.05 * i;
    const double v = bs_call(p).value;
    CHECK(v > prev);
    prev = v;
  }
  p = defaults();
  prev = -1.0;
  for (int i = 0; i < 10; ++i) {
    p.s0 = 60.0 + 10.0 * i;
    const double v = bs_call(p).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("quadrature agrees with the closed forms") {
  // 20 parameter sets spread over the relevant ranges, driven by the
  // project's own uniform stream for reproducibility.
  const std::vector<double> u = uniform_stream({314159, 0, 0, StreamTag::path}, 100);
  for (int k = 0; k < 20; ++k) {
    MarketParams p;
    p.s0 = 50.0 + 100.0 * u[5 * k];
    p.strike = 50.0 + 100.0 * u[5 * k + 1];
    p.rate = 0.1 * u[5 * k + 2];
    p.sigma = 0.1 + 0.4 * u[5 * k + 3];
    p.maturity = 0.25 + 1.75 * u[5 * k + 4];

    const Reference c = bs_call(p);
    const Quad q = quad_call(p);
    const double scale = std::max(1.0, c.value);
    CHECK(std::abs(q.value - c.value) < 1e-10 * scale);
    CHECK(std::abs(q.delta - c.delta) < 1e-10);
    CHECK(std::abs(q.vega - c.vega) < 1e-10 * std::max(1.0, std::abs(c.vega)));

    const Reference dig = bs_digital(p);
    CHECK(std::abs(quad_digital_value(p) - dig.value) < 1e-10);
  }
}

TEST_CASE("high-resolution mc reference") {
  const MarketParams p = defaults();
  MethodSpec s;
  s.method = Method::pathwise;
  s.payoff_kind = PayoffKind::call;

  const Reference a = reference_mc(s, p, 4, 20000, 99);
  const Reference b = reference_mc(s, p, 4, 20000, 99);
  CHECK(a.value == b.value);
  CHECK(a.uncertainty == b.uncertainty);
  CHECK(a.source == RefSource::high_resolution_mc);
  CHECK(a.uncertainty > 0.0);

  // Within statistical reach of the closed form (plus a discretisation
  // cushion at level 4).
  const Reference ref = bs_call(p);
  CHECK(std::abs(a.value - ref.value) < 5.0 * a.uncertainty + 0.05);

  // The lookback reference inherits the exact value = S0 * delta identity
  // sample by sample.
  MethodSpec lb;
  lb.method = Method::pathwise;
  lb.payoff_kind = PayoffKind::lookback;
  const Reference l = reference_mc(lb, p, 5, 20000, 7);
  CHECK(std::abs(l.value - p.s0 * l.delta) < 1e-9 * p.s0);
}
