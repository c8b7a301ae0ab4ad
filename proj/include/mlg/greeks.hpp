#pragma once

// (value, delta, vega) carried together through every estimator.

namespace mlg {

struct GreekTriple {
  double value = 0.0;
  double delta = 0.0;  // dV/dS0
  double vega = 0.0;   // dV/dsigma

  GreekTriple& operator+=(const GreekTriple& o) {
    value += o.value;
    delta += o.delta;
    vega += o.vega;
    return *this;
  }
  GreekTriple& operator-=(const GreekTriple& o) {
    value -= o.value;
    delta -= o.delta;
    vega -= o.vega;
    return *this;
  }
  GreekTriple& operator*=(double f) {
    value *= f;
    delta *= f;
    vega *= f;
    return *this;
  }
};

inline GreekTriple operator+(GreekTriple a, const GreekTriple& b) { return a += b; }
inline GreekTriple operator-(GreekTriple a, const GreekTriple& b) { return a -= b; }
inline GreekTriple operator*(GreekTriple a, double f) { return a *= f; }
inline GreekTriple operator*(double f, GreekTriple a) { return a *= f; }

}  // namespace mlg
