#pragma once

// Dense rank-R arrays over a runtime dimension, plus the few linear-algebra
// pieces the curvature pipeline needs (determinant and inverse via pivoted
// elimination, generic over jet scalars).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "confkk/jet.hpp"

namespace confkk {

struct SingularMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

template <class T, int R>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, const T& init) : dim_(dim), d_(ipow(dim, R), init) {}

  int dim() const { return dim_; }

  template <class... I>
  T& operator()(I... idx) {
    static_assert(sizeof...(I) == R);
    return d_[flat(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    static_assert(sizeof...(I) == R);
    return d_[flat(idx...)];
  }

  const std::vector<T>& raw() const { return d_; }
  std::vector<T>& raw() { return d_; }

 private:
  int dim_ = 0;
  std::vector<T> d_;

  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }
};

template <int R>
double max_abs(const Tensor<double, R>& t) {
  double m = 0.0;
  for (double v : t.raw()) m = std::max(m, std::abs(v));
  return m;
}

// scalar of the same jet shape as `ref` holding the plain value v
template <class T>
T const_like(const T& ref, double v) {
  if constexpr (std::is_same_v<T, double>) {
    (void)ref;
    return v;
  } else {
    return T::constant(v, ref.n);
  }
}

// determinant by destructive elimination with partial pivoting on values
template <class T>
T determinant(Tensor<T, 2> m) {
  const int n = m.dim();
  T det = const_like(m(0, 0), 1.0);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(value_of(m(r, k))) > std::abs(value_of(m(piv, k)))) piv = r;
    if (value_of(m(piv, k)) == 0.0) return const_like(det, 0.0);
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(m(k, c), m(piv, c));
      det = det * (-1.0);
    }
    det = det * m(k, k);
    for (int r = k + 1; r < n; ++r) {
      T factor = m(r, k) / m(k, k);
      for (int c = k; c < n; ++c) m(r, c) -= factor * m(k, c);
    }
  }
  return det;
}

// Gauss-Jordan inverse, pivoting on values; throws on an exactly zero pivot.
// The softer near-singularity policy (determinant vs. row-norm threshold)
// lives with the metric code, which checks before calling.
template <class T>
Tensor<T, 2> inverse(Tensor<T, 2> m) {
  const int n = m.dim();
  Tensor<T, 2> inv(n, const_like(m(0, 0), 0.0));
  for (int i = 0; i < n; ++i) inv(i, i) = const_like(m(0, 0), 1.0);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(value_of(m(r, k))) > std::abs(value_of(m(piv, k)))) piv = r;
    if (value_of(m(piv, k)) == 0.0) throw SingularMetricError("matrix not invertible");
    if (piv != k)
      for (int c = 0; c < n; ++c) {
        std::swap(m(k, c), m(piv, c));
        std::swap(inv(k, c), inv(piv, c));
      }
    T pivot = m(k, k);
    for (int c = 0; c < n; ++c) {
      m(k, c) = m(k, c) / pivot;
      inv(k, c) = inv(k, c) / pivot;
    }
    for (int r = 0; r < n; ++r) {
      if (r == k) continue;
      T factor = m(r, k);
      for (int c = 0; c < n; ++c) {
        m(r, c) -= factor * m(k, c);
        inv(r, c) -= factor * inv(k, c);
      }
    }
  }
  return inv;
}

}  // namespace confkk
