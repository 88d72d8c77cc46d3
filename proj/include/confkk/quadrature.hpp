#pragma once

// Adaptive Gauss-Kronrod integration (7-point Gauss nested in 15-point
// Kronrod), used to cross-check closed-form antiderivatives.

#include <array>
#include <cmath>
#include <functional>

namespace confkk {

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};

// Gauss weights attach to the odd Kronrod nodes (and the center)
inline constexpr std::array<double, 4> kGaussWeights = {0.129484966168870, 0.279705391489277,
                                                        0.381830050505119, 0.417959183673469};

template <class F>
void gauss_kronrod(const F& f, double a, double b, double* kronrod, double* err) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double gk = 0.0, g = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    double x = kKronrodNodes[i];
    double v = (x == 0.0) ? f(c) : f(c - h * x) + f(c + h * x);
    gk += kKronrodWeights[i] * v;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * v;
  }
  *kronrod = gk * h;
  *err = std::abs((gk - g) * h);
}

}  // namespace detail

template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10, int depth = 0) {
  double k = 0.0, err = 0.0;
  detail::gauss_kronrod(f, a, b, &k, &err);
  if (err <= tol || depth >= 48) return k;
  double c = 0.5 * (a + b);
  return integrate(f, a, c, 0.5 * tol, depth + 1) + integrate(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace confkk
