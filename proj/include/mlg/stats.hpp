#pragma once

#include <cstdint>

#include "mlg/greeks.hpp"

// Numerically stable accumulators: Welford moments with a pairwise merge for
// deterministic chunked reduction, and compensated summation for costs.

namespace mlg {

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  // Chan et al. parallel update; merge order must be fixed for bit-stable
  // results.
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double nt = na + nb;
    mean += d * (nb / nt);
    m2 += o.m2 + d * d * (na * nb / nt);
    n += o.n;
  }

  double variance() const {
    return n > 1 ? m2 / (static_cast<double>(n) - 1.0) : 0.0;
  }
};

// One Moments per Greek component.
struct TripleMoments {
  Moments value;
  Moments delta;
  Moments vega;

  void add(const GreekTriple& g) {
    value.add(g.value);
    delta.add(g.delta);
    vega.add(g.vega);
  }
  void merge(const TripleMoments& o) {
    value.merge(o.value);
    delta.merge(o.delta);
    vega.merge(o.vega);
  }
};

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  void merge(const KahanSum& o) {
    add(o.sum);
    add(-o.carry);
  }
};

}  // namespace mlg
