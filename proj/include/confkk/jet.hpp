#pragma once

// Forward-mode jets carrying value, gradient, Hessian and third derivatives
// in up to kMaxVars variables. Symmetric slots are stored packed; the third
// derivative tensor keeps only i <= j <= k. Jets of order N can be
// differentiated along a coordinate direction, which yields a jet of order
// N-1. That extraction step is what turns metric jets into Christoffel jets,
// Christoffel jets into curvature jets, and so on.

#include <array>
#include <cassert>
#include <cmath>

namespace confkk {

inline constexpr int kMaxVars = 6;
inline constexpr int kSym2Cap = kMaxVars * (kMaxVars + 1) / 2;             // 21
inline constexpr int kSym3Cap = kMaxVars * (kMaxVars + 1) * (kMaxVars + 2) / 6;  // 56

// packed index for i <= j
constexpr int sym2_index(int i, int j) {
  return i * kMaxVars - i * (i - 1) / 2 + (j - i);
}

// packed index for i <= j <= k: offset of the (j,k) pair within the block of
// triples starting at i, plus the total size of all earlier blocks
constexpr int sym3_index(int i, int j, int k) {
  int before = 0;
  for (int a = 0; a < i; ++a) {
    int m = kMaxVars - a;
    before += m * (m + 1) / 2;
  }
  int m = kMaxVars - i;
  int jj = j - i, kk = k - i;
  return before + jj * m - jj * (jj - 1) / 2 + (kk - jj);
}

constexpr int sym2_sorted(int i, int j) { return i <= j ? sym2_index(i, j) : sym2_index(j, i); }

constexpr int sym3_sorted(int i, int j, int k) {
  if (i > j) { int t = i; i = j; j = t; }
  if (j > k) { int t = j; j = k; k = t; }
  if (i > j) { int t = i; i = j; j = t; }
  return sym3_index(i, j, k);
}

template <int Order>
struct Jet {
  static_assert(Order >= 1 && Order <= 3);

  int n = 0;   // active variables
  double v = 0.0;
  std::array<double, kMaxVars> g{};
  [[no_unique_address]] std::array<double, ((Order >= 2) ? kSym2Cap : 0)> h{};
  [[no_unique_address]] std::array<double, ((Order >= 3) ? kSym3Cap : 0)> t{};

  Jet() = default;

  static Jet constant(double value, int nvars) {
    assert(nvars >= 0 && nvars <= kMaxVars);
    Jet r;
    r.n = nvars;
    r.v = value;
    return r;
  }

  static Jet variable(double value, int index, int nvars) {
    Jet r = constant(value, nvars);
    assert(index >= 0 && index < nvars);
    r.g[index] = 1.0;
    return r;
  }

  double value() const { return v; }
  double grad(int i) const { return g[i]; }

  double hess(int i, int j) const {
    if constexpr (Order >= 2) return h[sym2_sorted(i, j)];
    else { (void)i; (void)j; return 0.0; }
  }

  double third(int i, int j, int k) const {
    if constexpr (Order >= 3) return t[sym3_sorted(i, j, k)];
    else { (void)i; (void)j; (void)k; return 0.0; }
  }

  Jet operator-() const {
    Jet r = *this;
    r.v = -r.v;
    for (int i = 0; i < n; ++i) r.g[i] = -r.g[i];
    if constexpr (Order >= 2)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) { int p = sym2_index(i, j); r.h[p] = -r.h[p]; }
    if constexpr (Order >= 3)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k) { int p = sym3_index(i, j, k); r.t[p] = -r.t[p]; }
    return r;
  }

  Jet& operator+=(const Jet& o) {
    assert(n == o.n);
    v += o.v;
    for (int i = 0; i < n; ++i) g[i] += o.g[i];
    if constexpr (Order >= 2)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) { int p = sym2_index(i, j); h[p] += o.h[p]; }
    if constexpr (Order >= 3)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k) { int p = sym3_index(i, j, k); t[p] += o.t[p]; }
    return *this;
  }

  Jet& operator-=(const Jet& o) {
    assert(n == o.n);
    v -= o.v;
    for (int i = 0; i < n; ++i) g[i] -= o.g[i];
    if constexpr (Order >= 2)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) { int p = sym2_index(i, j); h[p] -= o.h[p]; }
    if constexpr (Order >= 3)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k) { int p = sym3_index(i, j, k); t[p] -= o.t[p]; }
    return *this;
  }

  Jet& operator*=(double s) {
    v *= s;
    for (int i = 0; i < n; ++i) g[i] *= s;
    if constexpr (Order >= 2)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) h[sym2_index(i, j)] *= s;
    if constexpr (Order >= 3)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k) t[sym3_index(i, j, k)] *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
  friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
  friend Jet operator+(Jet a, double s) { a.v += s; return a; }
  friend Jet operator+(double s, Jet a) { a.v += s; return a; }
  friend Jet operator-(Jet a, double s) { a.v -= s; return a; }
  friend Jet operator-(double s, const Jet& a) { Jet r = -a; r.v += s; return r; }
  friend Jet operator*(Jet a, double s) { a *= s; return a; }
  friend Jet operator*(double s, Jet a) { a *= s; return a; }
  friend Jet operator/(Jet a, double s) { a *= 1.0 / s; return a; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    assert(a.n == b.n);
    const int n = a.n;
    Jet r;
    r.n = n;
    r.v = a.v * b.v;
    for (int i = 0; i < n; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    if constexpr (Order >= 2) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          int p = sym2_index(i, j);
          r.h[p] = a.h[p] * b.v + a.v * b.h[p] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
        }
    }
    if constexpr (Order >= 3) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k) {
            int p = sym3_index(i, j, k);
            int pij = sym2_index(i, j), pik = sym2_index(i, k), pjk = sym2_index(j, k);
            r.t[p] = a.t[p] * b.v + a.v * b.t[p]
                   + a.h[pij] * b.g[k] + a.h[pik] * b.g[j] + a.h[pjk] * b.g[i]
                   + a.g[k] * b.h[pij] + a.g[j] * b.h[pik] + a.g[i] * b.h[pjk];
          }
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }
};

using Jet1 = Jet<1>;
using Jet2 = Jet<2>;
using Jet3 = Jet<3>;

inline double value_of(double x) { return x; }
template <int Order>
double value_of(const Jet<Order>& x) { return x.v; }

// univariate chain rule through third order; f0..f3 are the derivatives of
// the outer function at u.v
template <int Order>
Jet<Order> compose(const Jet<Order>& u, double f0, double f1, double f2 = 0.0, double f3 = 0.0) {
  const int n = u.n;
  Jet<Order> r;
  r.n = n;
  r.v = f0;
  for (int i = 0; i < n; ++i) r.g[i] = f1 * u.g[i];
  if constexpr (Order >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        int p = sym2_index(i, j);
        r.h[p] = f1 * u.h[p] + f2 * u.g[i] * u.g[j];
      }
  }
  if constexpr (Order >= 3) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          int p = sym3_index(i, j, k);
          r.t[p] = f1 * u.t[p]
                 + f2 * (u.g[i] * u.h[sym2_index(j, k)] +
                         u.g[j] * u.h[sym2_index(i, k)] +
                         u.g[k] * u.h[sym2_index(i, j)])
                 + f3 * u.g[i] * u.g[j] * u.g[k];
        }
  }
  return r;
}

template <int Order>
Jet<Order> reciprocal(const Jet<Order>& u) {
  double w = 1.0 / u.v;
  return compose(u, w, -w * w, 2.0 * w * w * w, -6.0 * w * w * w * w);
}

template <int Order>
Jet<Order> sin(const Jet<Order>& u) {
  double s = std::sin(u.v), c = std::cos(u.v);
  return compose(u, s, c, -s, -c);
}

template <int Order>
Jet<Order> cos(const Jet<Order>& u) {
  double s = std::sin(u.v), c = std::cos(u.v);
  return compose(u, c, -s, -c, s);
}

template <int Order>
Jet<Order> sinh(const Jet<Order>& u) {
  double s = std::sinh(u.v), c = std::cosh(u.v);
  return compose(u, s, c, s, c);
}

template <int Order>
Jet<Order> cosh(const Jet<Order>& u) {
  double s = std::sinh(u.v), c = std::cosh(u.v);
  return compose(u, c, s, c, s);
}

template <int Order>
Jet<Order> tanh(const Jet<Order>& u) {
  double th = std::tanh(u.v);
  double sech2 = 1.0 - th * th;
  return compose(u, th, sech2, -2.0 * th * sech2, (6.0 * th * th - 2.0) * sech2);
}

template <int Order>
Jet<Order> exp(const Jet<Order>& u) {
  double e = std::exp(u.v);
  return compose(u, e, e, e, e);
}

template <int Order>
Jet<Order> log(const Jet<Order>& u) {
  double w = 1.0 / u.v;
  return compose(u, std::log(u.v), w, -w * w, 2.0 * w * w * w);
}

template <int Order>
Jet<Order> sqrt(const Jet<Order>& u) {
  double s = std::sqrt(u.v);
  double i = 1.0 / s;
  return compose(u, s, 0.5 * i, -0.25 * i / u.v, 0.375 * i / (u.v * u.v));
}

template <int Order>
Jet<Order> asin(const Jet<Order>& u) {
  double d = 1.0 - u.v * u.v;
  double r = 1.0 / std::sqrt(d);
  return compose(u, std::asin(u.v), r, u.v * r / d, (1.0 + 2.0 * u.v * u.v) * r / (d * d));
}

template <int Order>
Jet<Order> atanh(const Jet<Order>& u) {
  double d = 1.0 - u.v * u.v;
  return compose(u, std::atanh(u.v), 1.0 / d, 2.0 * u.v / (d * d),
                 (2.0 + 6.0 * u.v * u.v) / (d * d * d));
}

template <int Order>
Jet<Order> pow(const Jet<Order>& u, double p) {
  double f0 = std::pow(u.v, p);
  double f1 = p * std::pow(u.v, p - 1.0);
  double f2 = p * (p - 1.0) * std::pow(u.v, p - 2.0);
  double f3 = p * (p - 1.0) * (p - 2.0) * std::pow(u.v, p - 3.0);
  return compose(u, f0, f1, f2, f3);
}

// partial derivative along direction d, one order down
inline double derive(const Jet1& u, int d) { return u.g[d]; }

inline Jet1 derive(const Jet2& u, int d) {
  Jet1 r;
  r.n = u.n;
  r.v = u.g[d];
  for (int i = 0; i < u.n; ++i) r.g[i] = u.h[sym2_sorted(i, d)];
  return r;
}

inline Jet2 derive(const Jet3& u, int d) {
  Jet2 r;
  r.n = u.n;
  r.v = u.g[d];
  for (int i = 0; i < u.n; ++i) r.g[i] = u.h[sym2_sorted(i, d)];
  for (int i = 0; i < u.n; ++i)
    for (int j = i; j < u.n; ++j)
      r.h[sym2_index(i, j)] = u.t[sym3_sorted(i, j, d)];
  return r;
}

inline Jet1 truncate1(const Jet2& u) {
  Jet1 r;
  r.n = u.n;
  r.v = u.v;
  r.g = u.g;
  return r;
}

inline Jet1 truncate1(const Jet3& u) {
  Jet1 r;
  r.n = u.n;
  r.v = u.v;
  r.g = u.g;
  return r;
}

inline Jet2 truncate2(const Jet3& u) {
  Jet2 r;
  r.n = u.n;
  r.v = u.v;
  r.g = u.g;
  r.h = u.h;
  return r;
}

}  // namespace confkk
