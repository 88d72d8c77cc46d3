#pragma once

// Metric fields and pointwise curvature.
//
// A MetricField is a symmetric matrix of expressions over named coordinates
// and parameters. Curvature is evaluated at a point by running the component
// expressions through third-order jets (or through the finite-difference
// backend) and then walking the usual chain: inverse metric, Christoffel
// symbols, Riemann, Ricci, Schouten, Weyl, Cotton. Intermediate objects keep
// jet orders high enough that one or two further covariant derivatives are
// available downstream.
//
// Sign conventions used throughout: signature (+,-,...,-);
//   R^k_{lmn} = d_m Gam^k_{nl} - d_n Gam^k_{ml} + Gam^k_{mj}Gam^j_{nl} - Gam^k_{nj}Gam^j_{ml}
//   Ricci_{ln} = R^k_{lkn};  S^{nl} = Ric^{nl} - g^{nl} R / (2(n-1))
//   Weyl^{klmn} = R^{klmn} - (g^{km}S^{nl} - g^{kn}S^{ml} - g^{lm}S^{nk} + g^{ln}S^{mk})/(n-2)
//   Cotton_{mnl} = D_m S_{nl} - D_n S_{ml}   (n = 3)

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "confkk/expr.hpp"
#include "confkk/jet.hpp"
#include "confkk/tensor.hpp"

namespace confkk {

inline int levi3(int i, int j, int k) {
  return (j - i) * (k - i) * (k - j) / 2;  // +-1 on permutations of 0,1,2
}

inline int levi2(int i, int j) { return j - i == 1 ? 1 : (i - j == 1 ? -1 : 0); }

class MetricField {
 public:
  MetricField() = default;

  MetricField(std::vector<std::string> coords, std::vector<std::string> params,
              std::vector<double> param_values, std::vector<int> signature = {})
      : dim_(static_cast<int>(coords.size())),
        coords_(std::move(coords)),
        params_(std::move(params)),
        param_values_(std::move(param_values)),
        signature_(std::move(signature)),
        pool_(std::make_shared<ExprPool>()),
        comp_(static_cast<std::size_t>(dim_ * (dim_ + 1) / 2), kNoExpr) {
    if (dim_ < 2) throw std::invalid_argument("metric dimension must be at least 2");
    if (dim_ > kMaxVars) throw std::invalid_argument("metric dimension capped at 6");
  }

  int dim() const { return dim_; }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::vector<std::string>& params() const { return params_; }
  const std::vector<double>& param_values() const { return param_values_; }
  const std::vector<int>& signature() const { return signature_; }
  ExprPool& pool() { return *pool_; }
  const ExprPool& pool() const { return *pool_; }
  std::shared_ptr<ExprPool> pool_ptr() const { return pool_; }

  void set_param(const std::string& name, double v) {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i] == name) {
        param_values_[i] = v;
        return;
      }
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }

  double param(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i] == name) return param_values_[i];
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }

  ExprId component(int i, int j) const { return comp_[tri(i, j)]; }

  void set_component(int i, int j, ExprId e) { comp_[tri(i, j)] = e; }

  void set_component(int i, int j, std::string_view text) {
    comp_[tri(i, j)] = parse_expression(*pool_, text, coords_, params_);
  }

  // upper-triangle components given row-wise: g00, g01, ..., g0n, g11, ...
  static MetricField from_upper(std::vector<std::string> coords, std::vector<std::string> params,
                                std::vector<double> param_values,
                                const std::vector<std::string>& upper,
                                std::vector<int> signature = {}) {
    MetricField m(std::move(coords), std::move(params), std::move(param_values),
                  std::move(signature));
    const int n = m.dim();
    if (upper.size() != static_cast<std::size_t>(n * (n + 1) / 2))
      throw std::invalid_argument("wrong number of upper-triangle components");
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m.set_component(i, j, upper[k++]);
    return m;
  }

  static MetricField diagonal(std::vector<std::string> coords, std::vector<std::string> params,
                              std::vector<double> param_values,
                              const std::vector<std::string>& diag,
                              std::vector<int> signature = {}) {
    MetricField m(std::move(coords), std::move(params), std::move(param_values),
                  std::move(signature));
    const int n = m.dim();
    if (diag.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("wrong number of diagonal components");
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) m.set_component(i, j, m.pool().num(0.0));
      m.set_component(i, i, diag[static_cast<std::size_t>(i)]);
    }
    return m;
  }

  template <class T>
  T eval_component(int i, int j, std::span<const T> coord_values) const {
    ExprId e = component(i, j);
    if (e == kNoExpr) throw std::logic_error("metric component not set");
    return pool_->eval<T>(e, coord_values, param_values_, dim_);
  }

  double eval_value(int i, int j, std::span<const double> point) const {
    return eval_component<double>(i, j, point);
  }

 private:
  int dim_ = 0;
  std::vector<std::string> coords_, params_;
  std::vector<double> param_values_;
  std::vector<int> signature_;
  std::shared_ptr<ExprPool> pool_;
  std::vector<ExprId> comp_;

  std::size_t tri(int i, int j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
  }
};

// metric component jets at a point (order 3 in every coordinate)
struct MetricJets {
  int n = 0;
  Tensor<Jet3, 2> g, ginv;
  Jet3 det;
};

inline constexpr double kSingularDetFactor = 1e-12;

inline MetricJets metric_jets(const MetricField& m, std::span<const double> point,
                              Backend backend = Backend::Jets) {
  const int n = m.dim();
  if (point.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("point dimension mismatch");
  MetricJets out;
  out.n = n;
  Jet3 zero = Jet3::constant(0.0, n);
  out.g = Tensor<Jet3, 2>(n, zero);

  if (backend == Backend::Jets) {
    std::vector<Jet3> cv;
    cv.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cv.push_back(Jet3::variable(point[i], i, n));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet3 v = m.eval_component<Jet3>(i, j, cv);
        out.g(i, j) = v;
        out.g(j, i) = v;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        auto f = [&](std::span<const double> x) { return m.eval_value(i, j, x); };
        Jet3 v = fd_jet3(f, point);
        out.g(i, j) = v;
        out.g(j, i) = v;
      }
  }

  out.det = determinant(out.g);
  double row_norm = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::abs(out.g(i, j).v);
    row_norm = std::max(row_norm, s);
  }
  double threshold = kSingularDetFactor * std::pow(row_norm, n);
  if (std::abs(out.det.v) < threshold)
    throw SingularMetricError("metric determinant below singularity threshold at sample point");
  out.ginv = inverse(out.g);
  return out;
}

// the full jet-order curvature chain at one point
struct CurvatureJets {
  int n = 0;
  Tensor<Jet3, 2> g, ginv;
  Jet3 det;
  Jet2 sqrt_absdet;                     // for epsilon-density factors
  Tensor<Jet2, 2> g2, ginv2;
  Tensor<Jet1, 2> g1, ginv1;
  Tensor<double, 2> g0, ginv0;
  Tensor<Jet2, 3> Gamma;                // Gamma(k, m, n), symmetric in (m, n)
  Tensor<Jet1, 3> Gamma1;
  Tensor<double, 3> Gamma0;
  Tensor<Jet1, 4> riem;                 // R^k_{lmn}
  Tensor<Jet1, 2> ricci_dd, ricci_uu;
  Jet1 scalar;
  Tensor<Jet1, 2> schouten_uu, schouten_dd;
};

inline CurvatureJets curvature_jets(const MetricJets& mj) {
  const int n = mj.n;
  CurvatureJets c;
  c.n = n;
  c.g = mj.g;
  c.ginv = mj.ginv;
  c.det = mj.det;

  Jet3 absdet = mj.det.v >= 0.0 ? mj.det : -mj.det;
  c.sqrt_absdet = sqrt(truncate2(absdet));

  Jet2 z2 = Jet2::constant(0.0, n);
  Jet1 z1 = Jet1::constant(0.0, n);
  c.g2 = Tensor<Jet2, 2>(n, z2);
  c.ginv2 = Tensor<Jet2, 2>(n, z2);
  c.g1 = Tensor<Jet1, 2>(n, z1);
  c.ginv1 = Tensor<Jet1, 2>(n, z1);
  c.g0 = Tensor<double, 2>(n, 0.0);
  c.ginv0 = Tensor<double, 2>(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c.g2(i, j) = truncate2(c.g(i, j));
      c.ginv2(i, j) = truncate2(c.ginv(i, j));
      c.g1(i, j) = truncate1(c.g(i, j));
      c.ginv1(i, j) = truncate1(c.ginv(i, j));
      c.g0(i, j) = c.g(i, j).v;
      c.ginv0(i, j) = c.ginv(i, j).v;
    }

  // Christoffel symbols, one jet order below the metric
  c.Gamma = Tensor<Jet2, 3>(n, z2);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m)
      for (int nn = m; nn < n; ++nn) {
        Jet2 acc = z2;
        for (int l = 0; l < n; ++l) {
          Jet2 dm = derive(c.g(l, nn), m);
          Jet2 dn = derive(c.g(l, m), nn);
          Jet2 dl = derive(c.g(m, nn), l);
          acc += c.ginv2(k, l) * (dm + dn - dl);
        }
        acc *= 0.5;
        c.Gamma(k, m, nn) = acc;
        c.Gamma(k, nn, m) = acc;
      }

  c.Gamma1 = Tensor<Jet1, 3>(n, z1);
  c.Gamma0 = Tensor<double, 3>(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m)
      for (int nn = 0; nn < n; ++nn) {
        c.Gamma1(k, m, nn) = truncate1(c.Gamma(k, m, nn));
        c.Gamma0(k, m, nn) = c.Gamma(k, m, nn).v;
      }

  // Riemann, one order below Christoffel
  c.riem = Tensor<Jet1, 4>(n, z1);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          Jet1 acc = derive(c.Gamma(k, nn, l), m) - derive(c.Gamma(k, m, l), nn);
          for (int j = 0; j < n; ++j)
            acc += c.Gamma1(k, m, j) * c.Gamma1(j, nn, l) -
                   c.Gamma1(k, nn, j) * c.Gamma1(j, m, l);
          c.riem(k, l, m, nn) = acc;
        }

  c.ricci_dd = Tensor<Jet1, 2>(n, z1);
  for (int l = 0; l < n; ++l)
    for (int nn = 0; nn < n; ++nn) {
      Jet1 acc = z1;
      for (int k = 0; k < n; ++k) acc += c.riem(k, l, k, nn);
      c.ricci_dd(l, nn) = acc;
    }

  c.scalar = z1;
  for (int l = 0; l < n; ++l)
    for (int nn = 0; nn < n; ++nn) c.scalar += c.ginv1(l, nn) * c.ricci_dd(l, nn);

  c.ricci_uu = Tensor<Jet1, 2>(n, z1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet1 acc = z1;
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) acc += c.ginv1(i, l) * c.ginv1(j, m) * c.ricci_dd(l, m);
      c.ricci_uu(i, j) = acc;
    }

  c.schouten_uu = Tensor<Jet1, 2>(n, z1);
  c.schouten_dd = Tensor<Jet1, 2>(n, z1);
  double sfac = 1.0 / (2.0 * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c.schouten_uu(i, j) = c.ricci_uu(i, j) - c.ginv1(i, j) * c.scalar * sfac;
      c.schouten_dd(i, j) = c.ricci_dd(i, j) - c.g1(i, j) * c.scalar * sfac;
    }

  return c;
}

inline CurvatureJets curvature_jets(const MetricField& m, std::span<const double> point,
                                    Backend backend = Backend::Jets) {
  return curvature_jets(metric_jets(m, point, backend));
}

// all-upper Riemann values
inline Tensor<double, 4> riemann_upper(const CurvatureJets& c) {
  const int n = c.n;
  Tensor<double, 4> up(n, 0.0);
  // raise l, m, n in turn (k already up)
  Tensor<double, 4> a(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double acc = 0.0;
          for (int p = 0; p < n; ++p) acc += c.ginv0(l, p) * c.riem(k, p, m, nn).v;
          a(k, l, m, nn) = acc;
        }
  Tensor<double, 4> b(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double acc = 0.0;
          for (int p = 0; p < n; ++p) acc += c.ginv0(m, p) * a(k, l, p, nn);
          b(k, l, m, nn) = acc;
        }
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double acc = 0.0;
          for (int p = 0; p < n; ++p) acc += c.ginv0(nn, p) * b(k, l, m, p);
          up(k, l, m, nn) = acc;
        }
  return up;
}

inline Tensor<double, 4> weyl_upper(const CurvatureJets& c, const Tensor<double, 4>& riem_up) {
  const int n = c.n;
  if (n < 4) throw std::invalid_argument("Weyl tensor requires dimension >= 4");
  Tensor<double, 4> w(n, 0.0);
  double fac = 1.0 / (n - 2);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double s = c.ginv0(k, m) * c.schouten_uu(nn, l).v -
                     c.ginv0(k, nn) * c.schouten_uu(m, l).v -
                     c.ginv0(l, m) * c.schouten_uu(nn, k).v +
                     c.ginv0(l, nn) * c.schouten_uu(m, k).v;
          w(k, l, m, nn) = riem_up(k, l, m, nn) - fac * s;
        }
  return w;
}

// Cotton tensor C_{mnl} = D_m S_{nl} - D_n S_{ml} (dimension 3)
inline Tensor<double, 3> cotton_tensor(const CurvatureJets& c) {
  const int n = c.n;
  if (n != 3) throw std::invalid_argument("Cotton tensor requires dimension 3");
  Tensor<double, 3> covS(n, 0.0);  // D_m S_{nl}
  for (int m = 0; m < n; ++m)
    for (int nn = 0; nn < n; ++nn)
      for (int l = 0; l < n; ++l) {
        double acc = c.schouten_dd(nn, l).g[m];
        for (int p = 0; p < n; ++p)
          acc -= c.Gamma0(p, m, nn) * c.schouten_dd(p, l).v +
                 c.Gamma0(p, m, l) * c.schouten_dd(nn, p).v;
        covS(m, nn, l) = acc;
      }
  Tensor<double, 3> cot(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int nn = 0; nn < n; ++nn)
      for (int l = 0; l < n; ++l) cot(m, nn, l) = covS(m, nn, l) - covS(nn, m, l);
  return cot;
}

// plain-value bundle exposed to callers
struct CurvatureBundle {
  int n = 0;
  Tensor<double, 2> g, inverse_metric;
  double det = 0.0;
  Tensor<double, 3> christoffel;
  Tensor<double, 4> riemann_mixed;  // R^k_{lmn}
  Tensor<double, 4> riemann_up;     // R^{klmn}
  Tensor<double, 2> ricci_uu, ricci_dd;
  double ricci_scalar = 0.0;
  Tensor<double, 2> schouten_uu;
  bool has_weyl = false;
  Tensor<double, 4> weyl_up;
  bool has_cotton = false;
  Tensor<double, 3> cotton;
};

inline CurvatureBundle curvature_at(const MetricField& m, std::span<const double> point,
                                    Backend backend = Backend::Jets) {
  CurvatureJets c = curvature_jets(m, point, backend);
  const int n = c.n;
  CurvatureBundle b;
  b.n = n;
  b.g = c.g0;
  b.inverse_metric = c.ginv0;
  b.det = c.det.v;
  b.christoffel = c.Gamma0;
  b.riemann_mixed = Tensor<double, 4>(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int mm = 0; mm < n; ++mm)
        for (int nn = 0; nn < n; ++nn) b.riemann_mixed(k, l, mm, nn) = c.riem(k, l, mm, nn).v;
  b.riemann_up = riemann_upper(c);
  b.ricci_dd = Tensor<double, 2>(n, 0.0);
  b.ricci_uu = Tensor<double, 2>(n, 0.0);
  b.schouten_uu = Tensor<double, 2>(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      b.ricci_dd(i, j) = c.ricci_dd(i, j).v;
      b.ricci_uu(i, j) = c.ricci_uu(i, j).v;
      b.schouten_uu(i, j) = c.schouten_uu(i, j).v;
    }
  b.ricci_scalar = c.scalar.v;
  if (n >= 4) {
    b.weyl_up = weyl_upper(c, b.riemann_up);
    b.has_weyl = true;
  }
  if (n == 3) {
    b.cotton = cotton_tensor(c);
    b.has_cotton = true;
  }
  return b;
}

inline Tensor<double, 3> cotton_at(const MetricField& m, std::span<const double> point,
                                   Backend backend = Backend::Jets) {
  if (m.dim() != 3) throw std::invalid_argument("Cotton tensor requires dimension 3");
  return cotton_tensor(curvature_jets(m, point, backend));
}

// ---------------------------------------------------------------------------
// index gymnastics on plain-value tensors

namespace detail {
template <int R>
void decode(std::size_t flat, int dim, std::array<int, R>& idx) {
  for (int p = R - 1; p >= 0; --p) {
    idx[static_cast<std::size_t>(p)] = static_cast<int>(flat % static_cast<std::size_t>(dim));
    flat /= static_cast<std::size_t>(dim);
  }
}
template <int R>
std::size_t encode(const std::array<int, R>& idx, int dim) {
  std::size_t f = 0;
  for (int p = 0; p < R; ++p) f = f * static_cast<std::size_t>(dim) + static_cast<std::size_t>(idx[static_cast<std::size_t>(p)]);
  return f;
}
}  // namespace detail

// contracts slot `pos` with the given rank-2 form (metric to lower, inverse
// metric to raise); the slot stays in place
template <int R>
Tensor<double, R> contract_slot(const Tensor<double, R>& t, int pos, const Tensor<double, 2>& m) {
  const int n = t.dim();
  Tensor<double, R> out(n, 0.0);
  const std::size_t total = ipow(n, R);
  std::array<int, R> idx{};
  for (std::size_t f = 0; f < total; ++f) {
    detail::decode<R>(f, n, idx);
    double acc = 0.0;
    std::array<int, R> src = idx;
    for (int s = 0; s < n; ++s) {
      src[static_cast<std::size_t>(pos)] = s;
      acc += m(idx[static_cast<std::size_t>(pos)], s) * t.raw()[detail::encode<R>(src, n)];
    }
    out.raw()[f] = acc;
  }
  return out;
}

// trace of slots p < q against a rank-2 form (or plain contraction if the
// form is the identity-like pairing supplied by the caller)
template <int R>
Tensor<double, R - 2> trace_slots(const Tensor<double, R>& t, int p, int q,
                                  const Tensor<double, 2>& form) {
  static_assert(R >= 2);
  const int n = t.dim();
  Tensor<double, R - 2> out(n, 0.0);
  const std::size_t total = ipow(n, R - 2);
  std::array<int, R - 2> oidx{};
  std::array<int, R> idx{};
  for (std::size_t f = 0; f < total; ++f) {
    if constexpr (R > 2) detail::decode<R - 2>(f, n, oidx);
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        int w = 0;
        for (int s = 0; s < R; ++s) {
          if (s == p) idx[static_cast<std::size_t>(s)] = a;
          else if (s == q) idx[static_cast<std::size_t>(s)] = b;
          else idx[static_cast<std::size_t>(s)] = oidx[static_cast<std::size_t>(w++)];
        }
        acc += form(a, b) * t.raw()[detail::encode<R>(idx, n)];
      }
    out.raw()[f] = acc;
  }
  return out;
}

inline Tensor<double, 2> identity_form(int n) {
  Tensor<double, 2> id(n, 0.0);
  for (int i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

// ---------------------------------------------------------------------------
// covariant derivatives (concrete cases used by the reduction and residual
// systems; each returns values one jet order below its input)

inline Tensor<double, 2> cov_deriv_vector_down(const CurvatureJets& c,
                                               const Tensor<Jet1, 1>& v) {
  const int n = c.n;
  Tensor<double, 2> out(n, 0.0);  // out(m, l) = D_m v_l
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) {
      double acc = v(l).g[m];
      for (int p = 0; p < n; ++p) acc -= c.Gamma0(p, m, l) * v(p).v;
      out(m, l) = acc;
    }
  return out;
}

inline Tensor<Jet1, 2> cov_deriv_vector_down_jet(const CurvatureJets& c,
                                                 const Tensor<Jet2, 1>& v) {
  const int n = c.n;
  Tensor<Jet1, 2> out(n, Jet1::constant(0.0, n));
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) {
      Jet1 acc = derive(v(l), m);
      for (int p = 0; p < n; ++p) acc -= c.Gamma1(p, m, l) * truncate1(v(p));
      out(m, l) = acc;
    }
  return out;
}

inline Tensor<double, 2> cov_deriv_vector_up(const CurvatureJets& c, const Tensor<Jet1, 1>& v) {
  const int n = c.n;
  Tensor<double, 2> out(n, 0.0);  // out(m, k) = D_m v^k
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) {
      double acc = v(k).g[m];
      for (int p = 0; p < n; ++p) acc += c.Gamma0(k, m, p) * v(p).v;
      out(m, k) = acc;
    }
  return out;
}

// D_l T^{mn} for a rank-2 upper tensor given as jets
inline Tensor<double, 3> cov_deriv_uu(const CurvatureJets& c, const Tensor<Jet1, 2>& T) {
  const int n = c.n;
  Tensor<double, 3> out(n, 0.0);  // out(l, m, n)
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      for (int nn = 0; nn < n; ++nn) {
        double acc = T(m, nn).g[l];
        for (int p = 0; p < n; ++p)
          acc += c.Gamma0(m, l, p) * T(p, nn).v + c.Gamma0(nn, l, p) * T(m, p).v;
        out(l, m, nn) = acc;
      }
  return out;
}

// D_l T_{mn} for a rank-2 lower tensor given as jets
inline Tensor<double, 3> cov_deriv_dd(const CurvatureJets& c, const Tensor<Jet1, 2>& T) {
  const int n = c.n;
  Tensor<double, 3> out(n, 0.0);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      for (int nn = 0; nn < n; ++nn) {
        double acc = T(m, nn).g[l];
        for (int p = 0; p < n; ++p)
          acc -= c.Gamma0(p, l, m) * T(p, nn).v + c.Gamma0(p, l, nn) * T(m, p).v;
        out(l, m, nn) = acc;
      }
  return out;
}

// D_m D_n v_l from a vector's order-2 jets
inline Tensor<double, 3> cov_second_vector_down(const CurvatureJets& c,
                                                const Tensor<Jet2, 1>& v) {
  const int n = c.n;
  Tensor<Jet1, 2> first = cov_deriv_vector_down_jet(c, v);  // first(n, l) = D_n v_l
  Tensor<double, 3> out(n, 0.0);                            // out(m, n, l)
  for (int m = 0; m < n; ++m)
    for (int nn = 0; nn < n; ++nn)
      for (int l = 0; l < n; ++l) {
        double acc = first(nn, l).g[m];
        for (int p = 0; p < n; ++p)
          acc -= c.Gamma0(p, m, nn) * first(p, l).v + c.Gamma0(p, m, l) * first(nn, p).v;
        out(m, nn, l) = acc;
      }
  return out;
}

// covariant Hessian D_m D_n phi of a scalar's order-2 jet
inline Tensor<double, 2> cov_hessian(const CurvatureJets& c, const Jet2& phi) {
  const int n = c.n;
  Tensor<double, 2> out(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int nn = 0; nn < n; ++nn) {
      double acc = phi.hess(m, nn);
      for (int p = 0; p < n; ++p) acc -= c.Gamma0(p, m, nn) * phi.g[p];
      out(m, nn) = acc;
    }
  return out;
}

// D_p R^k_{lmn} values
inline Tensor<double, 5> cov_deriv_riemann(const CurvatureJets& c) {
  const int n = c.n;
  Tensor<double, 5> out(n, 0.0);  // out(p, k, l, m, n)
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m)
          for (int nn = 0; nn < n; ++nn) {
            double acc = c.riem(k, l, m, nn).g[p];
            for (int q = 0; q < n; ++q)
              acc += c.Gamma0(k, p, q) * c.riem(q, l, m, nn).v -
                     c.Gamma0(q, p, l) * c.riem(k, q, m, nn).v -
                     c.Gamma0(q, p, m) * c.riem(k, l, q, nn).v -
                     c.Gamma0(q, p, nn) * c.riem(k, l, m, q).v;
            out(p, k, l, m, nn) = acc;
          }
  return out;
}

// ---------------------------------------------------------------------------
// structural residuals

struct BianchiResiduals {
  double first = 0.0;       // algebraic cyclic identity
  double second = 0.0;      // cyclic covariant-derivative identity
  double contracted = 0.0;  // d^m r_{mn} - (1/2) d_n r
  double scale = 0.0;       // max |R^k_{lmn}|
};

inline BianchiResiduals bianchi_residuals(const CurvatureJets& c) {
  const int n = c.n;
  BianchiResiduals out;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          out.scale = std::max(out.scale, std::abs(c.riem(k, l, m, nn).v));
          double cyc = c.riem(k, l, m, nn).v + c.riem(k, m, nn, l).v + c.riem(k, nn, l, m).v;
          out.first = std::max(out.first, std::abs(cyc));
        }
  Tensor<double, 5> dR = cov_deriv_riemann(c);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn)
          for (int p = 0; p < n; ++p) {
            double cyc = dR(p, k, l, m, nn) + dR(m, k, l, nn, p) + dR(nn, k, l, p, m);
            out.second = std::max(out.second, std::abs(cyc));
          }
  // D_m r_{ln}, then raise m and contract with l
  Tensor<double, 3> dRic(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l)
      for (int nn = 0; nn < n; ++nn) {
        double acc = c.ricci_dd(l, nn).g[m];
        for (int p = 0; p < n; ++p)
          acc -= c.Gamma0(p, m, l) * c.ricci_dd(p, nn).v + c.Gamma0(p, m, nn) * c.ricci_dd(l, p).v;
        dRic(m, l, nn) = acc;
      }
  for (int nn = 0; nn < n; ++nn) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m)
      for (int l = 0; l < n; ++l) acc += c.ginv0(m, l) * dRic(m, l, nn);
    acc -= 0.5 * c.scalar.g[nn];
    out.contracted = std::max(out.contracted, std::abs(acc));
  }
  return out;
}

}  // namespace confkk
