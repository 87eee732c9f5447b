#pragma once

#include <array>
#include <cmath>

namespace nullot {

// Second-order forward-mode jet in D variables: value, gradient and Hessian.
// Metric components written once as templates over the scalar type yield
// exact first and second chart derivatives.
template <int D>
struct Jet {
  double v = 0.0;
  std::array<double, D> d{};
  std::array<double, D * D> h{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: implicit lift of constants

  static Jet variable(double value, int index) {
    Jet j(value);
    j.d[index] = 1.0;
    return j;
  }

  double hess(int i, int k) const { return h[i * D + k]; }

  // f(u) given f, f', f'' at u = v.
  Jet chain(double f0, double f1, double f2) const {
    Jet r(f0);
    for (int i = 0; i < D; ++i) r.d[i] = f1 * d[i];
    for (int i = 0; i < D; ++i)
      for (int k = 0; k < D; ++k) r.h[i * D + k] = f1 * h[i * D + k] + f2 * d[i] * d[k];
    return r;
  }
};

template <int D>
Jet<D> operator+(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r(a.v + b.v);
  for (int i = 0; i < D; ++i) r.d[i] = a.d[i] + b.d[i];
  for (int i = 0; i < D * D; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}

template <int D>
Jet<D> operator-(const Jet<D>& a) {
  Jet<D> r(-a.v);
  for (int i = 0; i < D; ++i) r.d[i] = -a.d[i];
  for (int i = 0; i < D * D; ++i) r.h[i] = -a.h[i];
  return r;
}

template <int D>
Jet<D> operator-(const Jet<D>& a, const Jet<D>& b) {
  return a + (-b);
}

template <int D>
Jet<D> operator*(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r(a.v * b.v);
  for (int i = 0; i < D; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k)
      r.h[i * D + k] = a.h[i * D + k] * b.v + a.v * b.h[i * D + k] + a.d[i] * b.d[k] + a.d[k] * b.d[i];
  return r;
}

template <int D>
Jet<D> operator/(const Jet<D>& a, const Jet<D>& b) {
  const double inv = 1.0 / b.v;
  return a * b.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
}

template <int D> Jet<D> operator+(const Jet<D>& a, double b) { return a + Jet<D>(b); }
template <int D> Jet<D> operator+(double a, const Jet<D>& b) { return Jet<D>(a) + b; }
template <int D> Jet<D> operator-(const Jet<D>& a, double b) { return a - Jet<D>(b); }
template <int D> Jet<D> operator-(double a, const Jet<D>& b) { return Jet<D>(a) - b; }
template <int D> Jet<D> operator*(const Jet<D>& a, double b) { return a * Jet<D>(b); }
template <int D> Jet<D> operator*(double a, const Jet<D>& b) { return Jet<D>(a) * b; }
template <int D> Jet<D> operator/(const Jet<D>& a, double b) { return a * Jet<D>(1.0 / b); }
template <int D> Jet<D> operator/(double a, const Jet<D>& b) { return Jet<D>(a) / b; }

template <int D>
Jet<D> sin(const Jet<D>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return a.chain(s, c, -s);
}

template <int D>
Jet<D> cos(const Jet<D>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return a.chain(c, -s, -c);
}

template <int D>
Jet<D> exp(const Jet<D>& a) {
  const double e = std::exp(a.v);
  return a.chain(e, e, e);
}

template <int D>
Jet<D> log(const Jet<D>& a) {
  return a.chain(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

template <int D>
Jet<D> pow(const Jet<D>& a, double p) {
  const double f0 = std::pow(a.v, p);
  return a.chain(f0, p * f0 / a.v, p * (p - 1.0) * f0 / (a.v * a.v));
}

template <int D>
Jet<D> sqrt(const Jet<D>& a) {
  return pow(a, 0.5);
}

}  // namespace nullot
