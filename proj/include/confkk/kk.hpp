#pragma once

// Circle reduction of a metric with one ignorable direction. The full space
// carries coordinates (x^mu, w) with nothing depending on w; the ansatz is
//
//   G = e^{2 sigma} [ g_{mu nu} - a_mu a_nu   -a_mu ]
//                   [ -a_nu                   -1    ]
//
// with g the base metric, a the gauge one-form and sigma an optional overall
// conformal factor. assemble/split convert between the two pictures, and the
// predicted_* functions give the curvature of G in terms of base curvature
// and the field strength f = da, block by block. The fiber slot always comes
// last; tensors returned by the predictions live on the base.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "confkk/metric.hpp"

namespace confkk {

class KKAnsatz {
 public:
  KKAnsatz(MetricField base, const std::vector<std::string>& gauge_components,
           const std::string& conformal_factor = "", std::string fiber_name = "w")
      : base_(std::move(base)), fiber_name_(std::move(fiber_name)) {
    const int nb = base_.dim();
    if (nb > kMaxVars - 1)
      throw std::invalid_argument("base dimension leaves no room for the fiber");
    if (gauge_components.size() != static_cast<std::size_t>(nb))
      throw std::invalid_argument("need one gauge component per base coordinate");
    for (const std::string& s : gauge_components)
      gauge_.push_back(parse_expression(base_.pool(), s, base_.coords(), base_.params()));
    if (!conformal_factor.empty())
      sigma_ = parse_expression(base_.pool(), conformal_factor, base_.coords(), base_.params());
  }

  KKAnsatz(MetricField base, std::vector<ExprId> gauge, ExprId sigma, std::string fiber_name)
      : base_(std::move(base)),
        gauge_(std::move(gauge)),
        sigma_(sigma),
        fiber_name_(std::move(fiber_name)) {}

  const MetricField& base() const { return base_; }
  MetricField& base() { return base_; }
  ExprId gauge(int mu) const { return gauge_[static_cast<std::size_t>(mu)]; }
  bool has_conformal_factor() const { return sigma_ != kNoExpr; }
  ExprId conformal_factor() const { return sigma_; }
  const std::string& fiber_name() const { return fiber_name_; }
  int base_dim() const { return base_.dim(); }
  int full_dim() const { return base_.dim() + 1; }

  MetricField assemble() const {
    const int nb = base_.dim();
    std::vector<std::string> coords = base_.coords();
    coords.push_back(fiber_name_);
    MetricField full(coords, base_.params(), base_.param_values(), full_signature());
    ExprPool& p = full.pool();

    std::vector<ExprId> a(static_cast<std::size_t>(nb));
    for (int mu = 0; mu < nb; ++mu) a[static_cast<std::size_t>(mu)] = p.import(base_.pool(), gauge_[static_cast<std::size_t>(mu)]);
    ExprId warp = kNoExpr;
    if (sigma_ != kNoExpr)
      warp = p.un(UnFn::Exp, p.mul(p.num(2.0), p.import(base_.pool(), sigma_)));
    auto warped = [&](ExprId e) { return warp == kNoExpr ? e : p.mul(warp, e); };

    for (int mu = 0; mu < nb; ++mu)
      for (int nu = mu; nu < nb; ++nu) {
        ExprId inner = p.sub(p.import(base_.pool(), base_.component(mu, nu)),
                             p.mul(a[static_cast<std::size_t>(mu)], a[static_cast<std::size_t>(nu)]));
        full.set_component(mu, nu, warped(inner));
      }
    for (int mu = 0; mu < nb; ++mu)
      full.set_component(mu, nb, warped(p.neg(a[static_cast<std::size_t>(mu)])));
    full.set_component(nb, nb, warped(p.num(-1.0)));
    return full;
  }

  // inverts assemble: the last coordinate must be ignorable
  static KKAnsatz split(const MetricField& full) {
    const int n = full.dim();
    const int nb = n - 1;
    if (nb < 2) throw std::invalid_argument("base of the reduction must have dimension >= 2");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (full.pool().depends_on_coord(full.component(i, j), nb))
          throw std::invalid_argument("metric depends on the coordinate being reduced");

    std::vector<std::string> coords(full.coords().begin(), full.coords().end() - 1);
    MetricField base(coords, full.params(), full.param_values(), base_signature(full));
    ExprPool& p = base.pool();

    ExprId gnn = p.import(full.pool(), full.component(nb, nb));
    bool unit_fiber = is_minus_one(full.pool(), full.component(nb, nb));
    ExprId sigma = unit_fiber ? kNoExpr : p.mul(p.num(0.5), p.un(UnFn::Ln, p.neg(gnn)));

    std::vector<ExprId> a(static_cast<std::size_t>(nb));
    for (int mu = 0; mu < nb; ++mu) {
      ExprId gmn = p.import(full.pool(), full.component(mu, nb));
      a[static_cast<std::size_t>(mu)] = unit_fiber ? p.neg(gmn) : p.div(gmn, gnn);
    }
    for (int mu = 0; mu < nb; ++mu)
      for (int nu = mu; nu < nb; ++nu) {
        ExprId gmn = p.import(full.pool(), full.component(mu, nu));
        ExprId scaled = unit_fiber ? gmn : p.neg(p.div(gmn, gnn));
        base.set_component(mu, nu,
                           p.add(scaled, p.mul(a[static_cast<std::size_t>(mu)], a[static_cast<std::size_t>(nu)])));
      }
    return KKAnsatz(std::move(base), std::move(a), sigma, full.coords().back());
  }

 private:
  MetricField base_;
  std::vector<ExprId> gauge_;
  ExprId sigma_ = kNoExpr;
  std::string fiber_name_;

  std::vector<int> full_signature() const {
    std::vector<int> s = base_.signature();
    if (s.empty()) return s;
    s.push_back(-1);
    return s;
  }

  static std::vector<int> base_signature(const MetricField& full) {
    std::vector<int> s = full.signature();
    if (!s.empty()) s.pop_back();
    return s;
  }

  static bool is_minus_one(const ExprPool& p, ExprId e) {
    const ExprNode& nd = p.node(e);
    if (nd.kind == ExprNode::Kind::Num) return nd.num == -1.0;
    if (nd.kind == ExprNode::Kind::Un && nd.fn == UnFn::Neg) {
      const ExprNode& ch = p.node(nd.a);
      return ch.kind == ExprNode::Kind::Num && ch.num == 1.0;
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// point data: base curvature plus gauge-field jets

struct ReductionPoint {
  int nb = 0;  // base dimension
  CurvatureJets base;
  Tensor<Jet3, 1> a;                  // gauge covector
  Tensor<Jet2, 2> f_dd, f_uu;         // f_{mu nu} = d_mu a_nu - d_nu a_mu, and raised
  Tensor<Jet2, 2> fsq_uu;             // f^{mu la} f_la^nu (symmetric)
  Jet2 ff;                            // f^{mu nu} f_{nu mu}
  // base dimension 3: the dual vector
  bool has_dual_vector = false;
  Tensor<Jet2, 1> dual_up, dual_dn;   // f^mu, f_mu
  Jet2 dual_sq;                       // f_mu f^mu
  // base dimension 2: the dual scalar
  bool has_dual_scalar = false;
  Jet2 dual_scalar;

  std::vector<double> a_values() const {
    std::vector<double> v(static_cast<std::size_t>(nb));
    for (int mu = 0; mu < nb; ++mu) v[static_cast<std::size_t>(mu)] = a(mu).v;
    return v;
  }
};

inline ReductionPoint reduction_point(const KKAnsatz& k, std::span<const double> point,
                                      Backend backend = Backend::Jets) {
  if (k.has_conformal_factor())
    throw std::invalid_argument("reduction formulas assume no conformal factor");
  const int nb = k.base_dim();
  if (point.size() != static_cast<std::size_t>(nb))
    throw std::invalid_argument("point dimension mismatch");

  ReductionPoint out;
  out.nb = nb;
  out.base = curvature_jets(k.base(), point, backend);

  out.a = Tensor<Jet3, 1>(nb, Jet3::constant(0.0, nb));
  const ExprPool& pool = k.base().pool();
  const std::vector<double>& pv = k.base().param_values();
  if (backend == Backend::Jets) {
    std::vector<Jet3> cv;
    cv.reserve(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) cv.push_back(Jet3::variable(point[i], i, nb));
    for (int mu = 0; mu < nb; ++mu)
      out.a(mu) = pool.eval<Jet3>(k.gauge(mu), cv, pv, nb);
  } else {
    for (int mu = 0; mu < nb; ++mu) {
      auto f = [&](std::span<const double> x) {
        return pool.eval<double>(k.gauge(mu), x, pv, nb);
      };
      out.a(mu) = fd_jet3(f, point);
    }
  }

  Jet2 z2 = Jet2::constant(0.0, nb);
  out.f_dd = Tensor<Jet2, 2>(nb, z2);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) out.f_dd(m, n) = derive(out.a(n), m) - derive(out.a(m), n);

  out.f_uu = Tensor<Jet2, 2>(nb, z2);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      Jet2 acc = z2;
      for (int m = 0; m < nb; ++m)
        for (int n = 0; n < nb; ++n)
          acc += out.base.ginv2(i, m) * out.base.ginv2(j, n) * out.f_dd(m, n);
      out.f_uu(i, j) = acc;
    }

  out.fsq_uu = Tensor<Jet2, 2>(nb, z2);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      Jet2 acc = z2;
      for (int l = 0; l < nb; ++l)
        for (int m = 0; m < nb; ++m) acc += out.f_uu(i, l) * out.base.g2(l, m) * out.f_uu(m, j);
      out.fsq_uu(i, j) = acc;
    }

  out.ff = z2;
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) out.ff += out.f_uu(m, n) * out.f_dd(n, m);

  if (nb == 3) {
    out.has_dual_vector = true;
    out.dual_up = Tensor<Jet2, 1>(nb, z2);
    for (int l = 0; l < nb; ++l) {
      Jet2 acc = z2;
      for (int m = 0; m < nb; ++m)
        for (int n = 0; n < nb; ++n)
          if (int e = levi3(l, m, n); e != 0) acc += static_cast<double>(e) * out.f_dd(m, n);
      out.dual_up(l) = acc / (2.0 * out.base.sqrt_absdet);
    }
    out.dual_dn = Tensor<Jet2, 1>(nb, z2);
    for (int m = 0; m < nb; ++m) {
      Jet2 acc = z2;
      for (int l = 0; l < nb; ++l) acc += out.base.g2(m, l) * out.dual_up(l);
      out.dual_dn(m) = acc;
    }
    out.dual_sq = z2;
    for (int m = 0; m < nb; ++m) out.dual_sq += out.dual_up(m) * out.dual_dn(m);
  }
  if (nb == 2) {
    out.has_dual_scalar = true;
    out.dual_scalar = out.f_dd(0, 1) / out.base.sqrt_absdet;
  }
  return out;
}

// ---------------------------------------------------------------------------
// curvature of the assembled space, predicted from base data; the fiber slot
// is written first in the mixed blocks

struct RiemannBlocks {
  Tensor<double, 4> greek;   // R^{mu nu la ta}
  Tensor<double, 3> fiber;   // R^{w la mu nu}
  Tensor<double, 2> fiber2;  // R^{w mu w nu}
};

struct RicciBlocks {
  Tensor<double, 2> greek;  // R^{mu nu}
  Tensor<double, 1> fiber;  // R^{w mu}
  double fiber2 = 0.0;      // R^{w w}
  double scalar = 0.0;
};

struct WeylBlocks {
  Tensor<double, 2> c_uu;    // traceless rank-2 building block
  Tensor<double, 2> t_uu;    // gauge-stress building block
  Tensor<double, 4> greek;   // C^{mu nu la ta}
  Tensor<double, 3> fiber;   // C^{w la mu nu}
  Tensor<double, 2> fiber2;  // C^{w mu w nu}
};

namespace detail {

// D_l f^{mu nu} on the base
inline Tensor<double, 3> gauge_cov_deriv(const ReductionPoint& p) {
  Tensor<Jet1, 2> f1(p.nb, Jet1::constant(0.0, p.nb));
  for (int i = 0; i < p.nb; ++i)
    for (int j = 0; j < p.nb; ++j) f1(i, j) = truncate1(p.f_uu(i, j));
  return cov_deriv_uu(p.base, f1);
}

// the quadratic combination entering both Riemann and Weyl greek blocks
inline double gauge_quad(const ReductionPoint& p, int m, int n, int l, int t) {
  auto F = [&](int i, int j) { return p.f_uu(i, j).v; };
  return F(m, t) * F(l, n) - F(m, l) * F(t, n) + 2.0 * F(m, n) * F(l, t);
}

// (g^{m l} X^{t n} - g^{m t} X^{l n}) - (g^{n l} X^{t m} - g^{n t} X^{l m}), halved
inline double antisym_mix(const Tensor<double, 2>& gi, const Tensor<double, 2>& X, int m, int n,
                          int l, int t) {
  return 0.5 * (gi(m, l) * X(t, n) - gi(m, t) * X(l, n) - gi(n, l) * X(t, m) +
                gi(n, t) * X(l, m));
}

}  // namespace detail

inline RiemannBlocks predicted_riemann(const ReductionPoint& p) {
  const int nb = p.nb;
  RiemannBlocks out;
  Tensor<double, 4> base_up = riemann_upper(p.base);

  out.greek = Tensor<double, 4>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t)
          out.greek(m, n, l, t) = base_up(m, n, l, t) + 0.25 * detail::gauge_quad(p, m, n, l, t);

  Tensor<double, 3> df = detail::gauge_cov_deriv(p);
  out.fiber = Tensor<double, 3>(nb, 0.0);
  for (int l = 0; l < nb; ++l)
    for (int m = 0; m < nb; ++m)
      for (int n = 0; n < nb; ++n) {
        double acc = 0.0;
        for (int k = 0; k < nb; ++k) acc += p.base.ginv0(l, k) * df(k, m, n);
        acc *= 0.5;
        for (int t = 0; t < nb; ++t) acc -= p.a(t).v * out.greek(t, l, m, n);
        out.fiber(l, m, n) = acc;
      }

  out.fiber2 = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      double acc = -0.25 * p.fsq_uu(m, n).v;
      for (int l = 0; l < nb; ++l)
        acc -= p.a(l).v * (out.fiber(m, l, n) + out.fiber(n, l, m));
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t) acc -= p.a(l).v * p.a(t).v * out.greek(l, m, t, n);
      out.fiber2(m, n) = acc;
    }
  return out;
}

inline RicciBlocks predicted_ricci(const ReductionPoint& p) {
  const int nb = p.nb;
  RicciBlocks out;
  out.greek = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      out.greek(m, n) = p.base.ricci_uu(m, n).v - 0.5 * p.fsq_uu(m, n).v;

  Tensor<double, 3> df = detail::gauge_cov_deriv(p);
  out.fiber = Tensor<double, 1>(nb, 0.0);
  for (int m = 0; m < nb; ++m) {
    double acc = 0.0;
    for (int l = 0; l < nb; ++l) acc += df(l, l, m);  // d_nu f^{nu mu}
    acc *= -0.5;
    for (int n = 0; n < nb; ++n) acc -= p.a(n).v * out.greek(m, n);
    out.fiber(m) = acc;
  }

  out.fiber2 = -0.25 * p.ff.v;
  for (int m = 0; m < nb; ++m) out.fiber2 -= 2.0 * p.a(m).v * out.fiber(m);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) out.fiber2 -= p.a(m).v * p.a(n).v * out.greek(m, n);

  out.scalar = p.base.scalar.v - 0.25 * p.ff.v;
  return out;
}

inline WeylBlocks predicted_weyl(const ReductionPoint& p) {
  const int nb = p.nb;
  const int N = nb + 1;  // dimension of the assembled space
  if (N < 4) throw std::invalid_argument("Weyl predictions need a base of dimension >= 3");
  WeylBlocks out;

  const Tensor<double, 2>& gi = p.base.ginv0;
  double r = p.base.scalar.v;
  double ff = p.ff.v;

  out.c_uu = Tensor<double, 2>(nb, 0.0);
  out.t_uu = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      double ric = p.base.ricci_uu(m, n).v;
      double fsq = p.fsq_uu(m, n).v;
      out.c_uu(m, n) = (ric - gi(m, n) * r / (N - 1) -
                        0.25 * N * (fsq - gi(m, n) * ff / (N - 1))) /
                       (N - 2);
      out.t_uu(m, n) = fsq - gi(m, n) * ff / (2.0 * (N - 2));
    }

  Tensor<double, 4> base_weyl(nb, 0.0);
  if (nb >= 4) base_weyl = weyl_upper(p.base, riemann_upper(p.base));

  out.greek = Tensor<double, 4>(nb, 0.0);
  double cfac = 2.0 / (N - 3);
  double tfac = 1.5 / (N - 3);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t)
          out.greek(m, n, l, t) = base_weyl(m, n, l, t) +
                                  cfac * detail::antisym_mix(gi, out.c_uu, m, n, l, t) +
                                  0.25 * detail::gauge_quad(p, m, n, l, t) +
                                  tfac * detail::antisym_mix(gi, out.t_uu, m, n, l, t);

  Tensor<double, 3> df = detail::gauge_cov_deriv(p);
  std::vector<double> div2(static_cast<std::size_t>(nb), 0.0);  // d_ta f^{nu ta}
  for (int n = 0; n < nb; ++n)
    for (int t = 0; t < nb; ++t) div2[static_cast<std::size_t>(n)] += df(t, n, t);

  out.fiber = Tensor<double, 3>(nb, 0.0);
  for (int l = 0; l < nb; ++l)
    for (int m = 0; m < nb; ++m)
      for (int n = 0; n < nb; ++n) {
        double acc = 0.0;
        for (int k = 0; k < nb; ++k) acc += gi(l, k) * df(k, m, n);
        acc *= 0.5;
        acc += 0.5 / (N - 2) *
               (gi(l, m) * div2[static_cast<std::size_t>(n)] - gi(l, n) * div2[static_cast<std::size_t>(m)]);
        for (int t = 0; t < nb; ++t) acc -= p.a(t).v * out.greek(t, l, m, n);
        out.fiber(l, m, n) = acc;
      }

  // the doubly-fiber block follows from tracelessness in the adapted frame
  out.fiber2 = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      double acc = out.c_uu(m, n);
      for (int l = 0; l < nb; ++l)
        acc -= p.a(l).v * (out.fiber(m, l, n) + out.fiber(n, l, m));
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t) acc -= p.a(l).v * p.a(t).v * out.greek(l, m, t, n);
      out.fiber2(m, n) = acc;
    }
  return out;
}

// base dimension 3 rewrite through the dual vector f^mu
inline WeylBlocks predicted_weyl_dual_form(const ReductionPoint& p) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("dual-vector form needs a three-dimensional base");
  const int nb = 3;
  WeylBlocks out;

  const Tensor<double, 2>& gi = p.base.ginv0;
  double r = p.base.scalar.v;
  double fsqr = p.dual_sq.v;

  out.c_uu = Tensor<double, 2>(nb, 0.0);
  out.t_uu = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      out.c_uu(m, n) = 0.5 * (p.base.ricci_uu(m, n).v - gi(m, n) * r / 3.0 -
                              p.dual_up(m).v * p.dual_up(n).v + gi(m, n) * fsqr / 3.0);
      out.t_uu(m, n) = p.fsq_uu(m, n).v - 0.25 * gi(m, n) * p.ff.v;
    }

  out.greek = Tensor<double, 4>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t)
          out.greek(m, n, l, t) = 2.0 * detail::antisym_mix(gi, out.c_uu, m, n, l, t);

  Tensor<Jet1, 1> fdn(nb, Jet1::constant(0.0, nb));
  Tensor<Jet1, 1> fup(nb, Jet1::constant(0.0, nb));
  for (int m = 0; m < nb; ++m) {
    fdn(m) = truncate1(p.dual_dn(m));
    fup(m) = truncate1(p.dual_up(m));
  }
  Tensor<double, 2> ddn = cov_deriv_vector_down(p.base, fdn);  // ddn(k, t) = D_k f_t
  Tensor<double, 2> dup = cov_deriv_vector_up(p.base, fup);    // dup(t, l) = D_t f^l
  double sg = p.base.sqrt_absdet.v;

  out.fiber = Tensor<double, 3>(nb, 0.0);
  for (int l = 0; l < nb; ++l)
    for (int m = 0; m < nb; ++m)
      for (int n = 0; n < nb; ++n) {
        double acc = 0.0;
        for (int t = 0; t < nb; ++t) {
          int e = levi3(m, n, t);
          if (e == 0) continue;
          double raised = 0.0;
          for (int k = 0; k < nb; ++k) raised += gi(l, k) * ddn(k, t);
          acc += e * (raised + dup(t, l));
        }
        acc /= 4.0 * sg;
        for (int t = 0; t < nb; ++t) acc -= p.a(t).v * out.greek(t, l, m, n);
        out.fiber(l, m, n) = acc;
      }

  out.fiber2 = Tensor<double, 2>(nb, 0.0);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      double acc = out.c_uu(m, n);
      for (int l = 0; l < nb; ++l)
        acc -= p.a(l).v * (out.fiber(m, l, n) + out.fiber(n, l, m));
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t) acc -= p.a(l).v * p.a(t).v * out.greek(l, m, t, n);
      out.fiber2(m, n) = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// assembling predictions into full-dimensional tensors (for comparison with a
// direct computation on the assembled metric)

inline Tensor<double, 4> riemann_from_blocks(const RiemannBlocks& b) {
  const int nb = b.greek.dim();
  const int N = nb + 1;
  Tensor<double, 4> out(N, 0.0);
  auto val = [&](int K, int L, int M, int Nn) -> double {
    int fib = (K == nb) + (L == nb) + (M == nb) + (Nn == nb);
    if (fib == 0) return b.greek(K, L, M, Nn);
    if (fib == 1) {
      if (K == nb) return b.fiber(L, M, Nn);
      if (L == nb) return -b.fiber(K, M, Nn);
      if (M == nb) return b.fiber(Nn, K, L);  // pair exchange
      return -b.fiber(M, K, L);
    }
    if (fib == 2) {
      if (K == nb && M == nb) return b.fiber2(L, Nn);
      if (K == nb && Nn == nb) return -b.fiber2(L, M);
      if (L == nb && M == nb) return -b.fiber2(K, Nn);
      if (L == nb && Nn == nb) return b.fiber2(K, M);
      return 0.0;  // both slots of an antisymmetric pair
    }
    return 0.0;
  };
  for (int K = 0; K < N; ++K)
    for (int L = 0; L < N; ++L)
      for (int M = 0; M < N; ++M)
        for (int Nn = 0; Nn < N; ++Nn) out(K, L, M, Nn) = val(K, L, M, Nn);
  return out;
}

inline Tensor<double, 4> weyl_from_blocks(const WeylBlocks& b) {
  RiemannBlocks rb{b.greek, b.fiber, b.fiber2};
  return riemann_from_blocks(rb);
}

inline Tensor<double, 2> ricci_from_blocks(const RicciBlocks& b) {
  const int nb = b.greek.dim();
  const int N = nb + 1;
  Tensor<double, 2> out(N, 0.0);
  for (int m = 0; m < nb; ++m) {
    for (int n = 0; n < nb; ++n) out(m, n) = b.greek(m, n);
    out(m, nb) = b.fiber(m);
    out(nb, m) = b.fiber(m);
  }
  out(nb, nb) = b.fiber2;
  return out;
}

// ---------------------------------------------------------------------------
// residuals of the predictions against a direct curvature computation

struct ReductionResiduals {
  double riemann = 0.0, ricci = 0.0, scalar = 0.0, weyl = 0.0;
  double riemann_scale = 0.0, ricci_scale = 0.0, scalar_scale = 0.0, weyl_scale = 0.0;
};

inline ReductionResiduals compare_reduction(const KKAnsatz& k, std::span<const double> point,
                                            Backend backend = Backend::Jets,
                                            double fiber_value = 0.37) {
  ReductionPoint p = reduction_point(k, point, backend);
  MetricField full = k.assemble();
  std::vector<double> fp(point.begin(), point.end());
  fp.push_back(fiber_value);
  CurvatureBundle direct = curvature_at(full, fp, backend);

  ReductionResiduals out;
  Tensor<double, 4> riem_pred = riemann_from_blocks(predicted_riemann(p));
  out.riemann_scale = max_abs(direct.riemann_up);
  for (std::size_t i = 0; i < riem_pred.raw().size(); ++i)
    out.riemann = std::max(out.riemann,
                           std::abs(riem_pred.raw()[i] - direct.riemann_up.raw()[i]));

  RicciBlocks ricci = predicted_ricci(p);
  Tensor<double, 2> ric_pred = ricci_from_blocks(ricci);
  out.ricci_scale = max_abs(direct.ricci_uu);
  for (std::size_t i = 0; i < ric_pred.raw().size(); ++i)
    out.ricci = std::max(out.ricci, std::abs(ric_pred.raw()[i] - direct.ricci_uu.raw()[i]));

  out.scalar_scale = std::abs(direct.ricci_scalar);
  out.scalar = std::abs(ricci.scalar - direct.ricci_scalar);

  if (k.full_dim() >= 4) {
    Tensor<double, 4> weyl_pred = weyl_from_blocks(predicted_weyl(p));
    out.weyl_scale = max_abs(direct.weyl_up);
    for (std::size_t i = 0; i < weyl_pred.raw().size(); ++i)
      out.weyl = std::max(out.weyl, std::abs(weyl_pred.raw()[i] - direct.weyl_up.raw()[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// quadratic invariant of the Weyl tensor: full-space value against the value
// rebuilt from base data (their ratio is 8 when the base has dimension 3)

struct WeylQuadratic {
  double full = 0.0;     // C_{KLMN} C^{KLMN} on the assembled space
  double reduced = 0.0;  // c_{mu nu} c^{mu nu} - (1/16) K_{mu nu} K^{mu nu}
  double ratio = 0.0;
};

inline double weyl_square_full(const CurvatureBundle& b) {
  Tensor<double, 4> low = b.weyl_up;
  for (int s = 0; s < 4; ++s) low = contract_slot<4>(low, s, b.g);
  double acc = 0.0;
  for (std::size_t i = 0; i < low.raw().size(); ++i) acc += low.raw()[i] * b.weyl_up.raw()[i];
  return acc;
}

inline WeylQuadratic weyl_quadratic(const KKAnsatz& k, std::span<const double> point,
                                    Backend backend = Backend::Jets) {
  if (k.base_dim() != 3)
    throw std::invalid_argument("quadratic comparison needs a three-dimensional base");
  ReductionPoint p = reduction_point(k, point, backend);
  WeylBlocks w = predicted_weyl_dual_form(p);

  // c_{mu nu} c^{mu nu}
  Tensor<double, 2> c_dd = contract_slot<2>(contract_slot<2>(w.c_uu, 0, p.base.g0), 1, p.base.g0);
  double cc = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) cc += c_dd(m, n) * w.c_uu(m, n);

  // symmetrized derivative of the dual vector
  Tensor<Jet1, 1> fdn(3, Jet1::constant(0.0, 3));
  for (int m = 0; m < 3; ++m) fdn(m) = truncate1(p.dual_dn(m));
  Tensor<double, 2> ddn = cov_deriv_vector_down(p.base, fdn);
  Tensor<double, 2> K_dd(3, 0.0);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) K_dd(m, n) = ddn(m, n) + ddn(n, m);
  Tensor<double, 2> K_uu =
      contract_slot<2>(contract_slot<2>(K_dd, 0, p.base.ginv0), 1, p.base.ginv0);
  double kk = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) kk += K_dd(m, n) * K_uu(m, n);

  WeylQuadratic out;
  out.reduced = cc - kk / 16.0;

  MetricField full = k.assemble();
  std::vector<double> fp(point.begin(), point.end());
  fp.push_back(0.0);
  out.full = weyl_square_full(curvature_at(full, fp, backend));
  out.ratio = out.reduced != 0.0 ? out.full / out.reduced : 0.0;
  return out;
}

}  // namespace confkk
