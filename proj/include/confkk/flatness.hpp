#pragma once

// Conditions for the assembled space to be conformally flat, written on the
// base. The rank-4/2/3 system drives everything; in four dimensions it
// collapses to statements about the dual vector (which must be Killing), and
// one dimension lower to a wave equation for the dual scalar. All functions
// return plain residual values; tolerances are applied by the callers.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "confkk/kk.hpp"
#include "confkk/report.hpp"
#include "confkk/sampling.hpp"

namespace confkk {

inline constexpr double kDefaultTolJets = 1e-8;
inline constexpr double kDefaultTolFd = 1e-5;

inline double default_tolerance(Backend b) {
  return b == Backend::Jets ? kDefaultTolJets : kDefaultTolFd;
}

// ---------------------------------------------------------------------------
// the flatness system at general dimension

struct ConformalFlatnessResiduals {
  double rank4 = 0.0, rank2 = 0.0, rank3 = 0.0;
  double rank4_scale = 0.0, rank2_scale = 0.0, rank3_scale = 0.0;
};

inline ConformalFlatnessResiduals conformal_flatness_residuals(const ReductionPoint& p) {
  const int nb = p.nb;
  const int N = nb + 1;
  if (N < 4) throw std::invalid_argument("flatness system needs a base of dimension >= 3");
  ConformalFlatnessResiduals out;

  const Tensor<double, 2>& gi = p.base.ginv0;
  WeylBlocks w = predicted_weyl(p);

  Tensor<double, 4> base_weyl(nb, 0.0);
  if (nb >= 4) base_weyl = weyl_upper(p.base, riemann_upper(p.base));
  double tfac = 1.5 / (N - 3);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l)
        for (int t = 0; t < nb; ++t) {
          double v = base_weyl(m, n, l, t) + 0.25 * detail::gauge_quad(p, m, n, l, t) +
                     tfac * detail::antisym_mix(gi, w.t_uu, m, n, l, t);
          out.rank4 = std::max(out.rank4, std::abs(v));
        }
  out.rank4_scale = max_abs(riemann_upper(p.base));

  out.rank2 = max_abs(w.c_uu);
  out.rank2_scale = 0.0;
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      out.rank2_scale = std::max(out.rank2_scale, std::abs(p.base.ricci_uu(m, n).v));

  Tensor<double, 3> df = detail::gauge_cov_deriv(p);
  std::vector<double> div2(static_cast<std::size_t>(nb), 0.0);
  for (int n = 0; n < nb; ++n)
    for (int t = 0; t < nb; ++t) div2[static_cast<std::size_t>(n)] += df(t, n, t);
  for (int l = 0; l < nb; ++l)
    for (int m = 0; m < nb; ++m)
      for (int n = 0; n < nb; ++n) {
        double raised = 0.0;
        for (int k = 0; k < nb; ++k) raised += gi(l, k) * df(k, m, n);
        double v = raised + 1.0 / (N - 2) *
                                (gi(l, m) * div2[static_cast<std::size_t>(n)] -
                                 gi(l, n) * div2[static_cast<std::size_t>(m)]);
        out.rank3 = std::max(out.rank3, std::abs(v));
        out.rank3_scale = std::max(out.rank3_scale, std::abs(raised));
      }
  return out;
}

// consequences of the rank-3 equation for gradients of the invariant f.f
struct GradientIdentityResiduals {
  double contracted = 0.0;  // f^{mu la} d_mu f_{la nu} - (1/4) d_nu (f.f)
  double diverged = 0.0;    // (d_mu f^{mu la}) f_{la nu} - ((N-2)/4) d_nu (f.f)
  double scale = 0.0;
};

inline GradientIdentityResiduals gradient_identity_residuals(const ReductionPoint& p) {
  const int nb = p.nb;
  const int N = nb + 1;
  GradientIdentityResiduals out;

  Tensor<Jet1, 2> f1(nb, Jet1::constant(0.0, nb));
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) f1(i, j) = truncate1(p.f_dd(i, j));
  Tensor<double, 3> ddd = cov_deriv_dd(p.base, f1);  // D_m f_{l n}
  Tensor<double, 3> df = detail::gauge_cov_deriv(p);

  for (int n = 0; n < nb; ++n) {
    double lhs1 = 0.0;
    for (int m = 0; m < nb; ++m)
      for (int l = 0; l < nb; ++l) lhs1 += p.f_uu(m, l).v * ddd(m, l, n);
    double lhs2 = 0.0;
    for (int l = 0; l < nb; ++l) {
      double divf = 0.0;
      for (int m = 0; m < nb; ++m) divf += df(m, m, l);
      lhs2 += divf * p.f_dd(l, n).v;
    }
    double grad = p.ff.g[n];
    out.contracted = std::max(out.contracted, std::abs(lhs1 - 0.25 * grad));
    out.diverged = std::max(out.diverged, std::abs(lhs2 - 0.25 * (N - 2) * grad));
    out.scale = std::max({out.scale, std::abs(lhs1), std::abs(lhs2), std::abs(grad)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// the conserved combination of curvature and field strength

inline double charge_density(const ReductionPoint& p) {
  const int N = p.nb + 1;
  return N * (N + 1) / 8.0 * p.ff.v - p.base.scalar.v;
}

struct ChargeEstimate {
  double mean = 0.0, spread = 0.0, min = 0.0, max = 0.0;
  int n_points = 0;
};

inline ChargeEstimate estimate_charge(const KKAnsatz& k,
                                      std::span<const std::vector<double>> points,
                                      Backend backend = Backend::Jets) {
  ChargeEstimate out;
  double sum = 0.0;
  for (const std::vector<double>& pt : points) {
    double c = charge_density(reduction_point(k, pt, backend));
    if (out.n_points == 0) {
      out.min = out.max = c;
    } else {
      out.min = std::min(out.min, c);
      out.max = std::max(out.max, c);
    }
    sum += c;
    ++out.n_points;
  }
  if (out.n_points > 0) out.mean = sum / out.n_points;
  out.spread = out.max - out.min;
  return out;
}

// ---------------------------------------------------------------------------
// four-dimensional branch: everything through the dual vector

// D_m v_l + D_l v_m for a vector given through upper components
inline Tensor<double, 2> killing_deformation(const CurvatureJets& c,
                                             const Tensor<Jet1, 1>& vec_up) {
  const int n = c.n;
  Tensor<Jet1, 1> vec_dn(n, Jet1::constant(0.0, n));
  for (int m = 0; m < n; ++m) {
    Jet1 acc = Jet1::constant(0.0, n);
    for (int l = 0; l < n; ++l) acc += c.g1(m, l) * vec_up(l);
    vec_dn(m) = acc;
  }
  Tensor<double, 2> d = cov_deriv_vector_down(c, vec_dn);
  Tensor<double, 2> out(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) out(m, l) = d(m, l) + d(l, m);
  return out;
}

struct KillingResiduals {
  double killing = 0.0;     // symmetrized first derivative of the dual vector
  double second = 0.0;      // second derivative against its closed form
  double identity = 0.0;    // second derivative against the curvature identity
  double scale = 0.0;       // largest first-derivative component
};

inline KillingResiduals killing_residuals(const ReductionPoint& p) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("Killing checks need a three-dimensional base");
  const int nb = 3;
  KillingResiduals out;

  Tensor<double, 3> dd = cov_second_vector_down(p.base, p.dual_dn);  // D_m D_n f_l
  Tensor<Jet1, 1> fdn1(nb, Jet1::constant(0.0, nb));
  for (int m = 0; m < nb; ++m) fdn1(m) = truncate1(p.dual_dn(m));
  Tensor<double, 2> d1 = cov_deriv_vector_down(p.base, fdn1);

  for (int m = 0; m < nb; ++m)
    for (int l = 0; l < nb; ++l) {
      out.killing = std::max(out.killing, std::abs(d1(m, l) + d1(l, m)));
      out.scale = std::max(out.scale, std::abs(d1(m, l)));
    }

  double branch = (3.0 * p.dual_sq.v + charge_density(p)) / 6.0;
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l) {
        double closed = branch * (p.base.g0(m, n) * p.dual_dn(l).v -
                                  p.base.g0(m, l) * p.dual_dn(n).v);
        out.second = std::max(out.second, std::abs(dd(m, n, l) - closed));

        double ident = 0.0;
        for (int k = 0; k < nb; ++k)
          for (int t = 0; t < nb; ++t)
            ident += p.base.g0(l, k) * p.base.riem(k, n, m, t).v * p.dual_up(t).v;
        out.identity = std::max(out.identity, std::abs(dd(m, n, l) - ident));
      }
  return out;
}

// the curl of the dual vector is itself a candidate symmetry direction
struct DualKillingData {
  Tensor<double, 1> vec_up;      // the second vector
  double killing = 0.0;          // its symmetrized derivative
  double orthogonality = 0.0;    // contraction with the dual vector
  double magnitude = 0.0;
  double scale = 0.0;
};

inline DualKillingData dual_killing(const ReductionPoint& p) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("dual Killing construction needs a three-dimensional base");
  const int nb = 3;
  DualKillingData out;

  Tensor<Jet1, 2> d1 = cov_deriv_vector_down_jet(p.base, p.dual_dn);  // D_n f_l as jets
  Jet1 sg = truncate1(p.base.sqrt_absdet);
  Tensor<Jet1, 1> F(nb, Jet1::constant(0.0, nb));
  for (int m = 0; m < nb; ++m) {
    Jet1 acc = Jet1::constant(0.0, nb);
    for (int n = 0; n < nb; ++n)
      for (int l = 0; l < nb; ++l)
        if (int e = levi3(m, n, l); e != 0) acc += static_cast<double>(e) * d1(n, l);
    F(m) = acc / sg;
  }

  out.vec_up = Tensor<double, 1>(nb, 0.0);
  for (int m = 0; m < nb; ++m) {
    out.vec_up(m) = F(m).v;
    out.magnitude = std::max(out.magnitude, std::abs(F(m).v));
    out.orthogonality += F(m).v * p.dual_dn(m).v;
  }
  out.orthogonality = std::abs(out.orthogonality);

  Tensor<double, 2> K = killing_deformation(p.base, F);
  Tensor<Jet1, 1> Fdn(nb, Jet1::constant(0.0, nb));
  for (int m = 0; m < nb; ++m) {
    Jet1 acc = Jet1::constant(0.0, nb);
    for (int l = 0; l < nb; ++l) acc += p.base.g1(m, l) * F(l);
    Fdn(m) = acc;
  }
  Tensor<double, 2> dF = cov_deriv_vector_down(p.base, Fdn);
  for (int m = 0; m < nb; ++m)
    for (int l = 0; l < nb; ++l) {
      out.killing = std::max(out.killing, std::abs(K(m, l)));
      out.scale = std::max(out.scale, std::abs(dF(m, l)));
    }
  return out;
}

// does the dual vector have vanishing covariant derivative, and does the
// charge sit on the branch where that is possible?
struct ConstancyData {
  double derivative = 0.0;  // max |D_m f_l|
  double branch = 0.0;      // 3 f.f + charge
};

inline ConstancyData covariant_constancy(const ReductionPoint& p) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("constancy check needs a three-dimensional base");
  ConstancyData out;
  Tensor<Jet1, 1> fdn1(3, Jet1::constant(0.0, 3));
  for (int m = 0; m < 3; ++m) fdn1(m) = truncate1(p.dual_dn(m));
  Tensor<double, 2> d = cov_deriv_vector_down(p.base, fdn1);
  out.derivative = max_abs(d);
  out.branch = 3.0 * p.dual_sq.v + charge_density(p);
  return out;
}

// traceless part of the stress balance: traceless Ricci against the dual
// vector bilinear (upper indices)
inline double stress_balance_residual(const ReductionPoint& p, double* scale = nullptr) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("stress balance needs a three-dimensional base");
  double worst = 0.0, sc = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) {
      double lhs = p.base.ricci_uu(m, n).v - p.base.ginv0(m, n) * p.base.scalar.v / 3.0;
      double rhs = p.dual_up(m).v * p.dual_up(n).v - p.base.ginv0(m, n) * p.dual_sq.v / 3.0;
      worst = std::max(worst, std::abs(lhs - rhs));
      sc = std::max(sc, std::abs(p.base.ricci_uu(m, n).v));
    }
  if (scale) *scale = sc;
  return worst;
}

// full field equation: Einstein tensor against stress plus charge term
inline double field_equation_residual(const ReductionPoint& p, double charge,
                                      double* scale = nullptr) {
  if (!p.has_dual_vector)
    throw std::invalid_argument("field equation needs a three-dimensional base");
  double worst = 0.0, sc = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) {
      double lhs = p.base.ricci_dd(m, n).v - 0.5 * p.base.g0(m, n) * p.base.scalar.v;
      double rhs = p.dual_dn(m).v * p.dual_dn(n).v +
                   p.base.g0(m, n) * (charge + 3.0 * p.dual_sq.v) / 6.0;
      worst = std::max(worst, std::abs(lhs - rhs));
      sc = std::max(sc, std::abs(p.base.ricci_dd(m, n).v));
    }
  if (scale) *scale = sc;
  return worst;
}

// ---------------------------------------------------------------------------
// one dimension lower: wave equation for the dual scalar

struct LowerFlatnessResiduals {
  double wave = 0.0;     // box f - charge * f + f^3
  double hessian = 0.0;  // traceless covariant Hessian of f
  double scale = 0.0;
};

inline LowerFlatnessResiduals lower_flatness_residuals(const ReductionPoint& p, double charge) {
  if (!p.has_dual_scalar)
    throw std::invalid_argument("lower system needs a two-dimensional base");
  const int nb = 2;
  LowerFlatnessResiduals out;
  Tensor<double, 2> H = cov_hessian(p.base, p.dual_scalar);
  double box = 0.0;
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) box += p.base.ginv0(m, n) * H(m, n);
  double f = p.dual_scalar.v;
  out.wave = std::abs(box - charge * f + f * f * f);
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < nb; ++n) {
      out.hessian = std::max(out.hessian,
                             std::abs(H(m, n) - 0.5 * p.base.g0(m, n) * box));
      out.scale = std::max(out.scale, std::abs(H(m, n)));
    }
  out.scale = std::max({out.scale, std::abs(box), std::abs(charge * f)});
  return out;
}

// ---------------------------------------------------------------------------
// direct checks on the assembled space

// conformal flatness of a four-dimensional lift: largest Weyl component
inline double lift_weyl_residual(const KKAnsatz& k, std::span<const double> point,
                                 Backend backend = Backend::Jets, double* scale = nullptr) {
  MetricField full = k.assemble();
  std::vector<double> fp(point.begin(), point.end());
  fp.push_back(0.0);
  CurvatureBundle b = curvature_at(full, fp, backend);
  if (!b.has_weyl) throw std::invalid_argument("lift has no Weyl tensor in this dimension");
  if (scale) *scale = max_abs(b.riemann_up);
  return max_abs(b.weyl_up);
}

// conformal flatness of a three-dimensional lift: largest Cotton component
inline double lift_cotton_residual(const KKAnsatz& k, std::span<const double> point,
                                   Backend backend = Backend::Jets, double* scale = nullptr) {
  MetricField full = k.assemble();
  if (full.dim() != 3) throw std::invalid_argument("Cotton check needs a three-dimensional lift");
  std::vector<double> fp(point.begin(), point.end());
  fp.push_back(0.0);
  CurvatureBundle b = curvature_at(full, fp, backend);
  if (scale) *scale = max_abs(b.riemann_up);
  return max_abs(b.cotton);
}

// ---------------------------------------------------------------------------
// batch runners

struct VerifyOptions {
  int points = 20;
  std::uint64_t seed = 1;
  Backend backend = Backend::Jets;
  double tolerance = kDefaultTolJets;
};

// identities that hold for any background: block predictions against the
// direct computation on the assembled space
inline std::vector<ResidualReport> verify_identities(const KKAnsatz& k, const SampleBox& box,
                                                     const VerifyOptions& opt) {
  ResidualAccumulator riem("riemann_blocks"), ric("ricci_blocks"), sc("scalar_reduction"),
      weyl("weyl_blocks");
  auto pts = sample_points(box, opt.points, opt.seed);
  bool has_weyl = k.full_dim() >= 4;
  for (auto& pt : pts) {
    ReductionResiduals r = compare_reduction(k, pt, opt.backend);
    riem.add(r.riemann, r.riemann_scale);
    ric.add(r.ricci, r.ricci_scale);
    sc.add(r.scalar, r.scalar_scale);
    if (has_weyl) weyl.add(r.weyl, r.weyl_scale);
  }
  std::vector<ResidualReport> out;
  out.push_back(riem.finish(opt.tolerance));
  out.push_back(ric.finish(opt.tolerance));
  out.push_back(sc.finish(opt.tolerance));
  if (has_weyl) out.push_back(weyl.finish(opt.tolerance));
  return out;
}

// checks that single out conformally flat lifts; callers pass solution charts
inline std::vector<ResidualReport> verify_solution(const KKAnsatz& k, const SampleBox& box,
                                                   const VerifyOptions& opt) {
  auto pts = sample_points(box, opt.points, opt.seed);
  std::vector<ResidualReport> out;
  const int nb = k.base_dim();

  if (nb >= 3) {
    ResidualAccumulator r4("flatness_rank4"), r2("flatness_rank2"), r3("flatness_rank3"),
        grad("gradient_identities");
    for (auto& pt : pts) {
      ReductionPoint p = reduction_point(k, pt, opt.backend);
      ConformalFlatnessResiduals c = conformal_flatness_residuals(p);
      r4.add(c.rank4, c.rank4_scale);
      r2.add(c.rank2, c.rank2_scale);
      r3.add(c.rank3, c.rank3_scale);
      GradientIdentityResiduals g = gradient_identity_residuals(p);
      grad.add_point({g.contracted, g.diverged}, g.scale);
    }
    out.push_back(r4.finish(opt.tolerance));
    out.push_back(r2.finish(opt.tolerance));
    out.push_back(r3.finish(opt.tolerance));
    out.push_back(grad.finish(opt.tolerance));
  }

  ChargeEstimate est = estimate_charge(k, pts, opt.backend);
  {
    ResidualAccumulator charge("charge_constancy");
    charge.add(est.spread, std::abs(est.mean));
    ResidualReport r = charge.finish(opt.tolerance);
    r.n_points = est.n_points;
    out.push_back(r);
  }

  if (nb == 3) {
    ResidualAccumulator kill("dual_vector_killing"), stress("stress_balance"),
        field("field_equation"), lift("lift_conformal_flatness");
    for (auto& pt : pts) {
      ReductionPoint p = reduction_point(k, pt, opt.backend);
      KillingResiduals kr = killing_residuals(p);
      kill.add_point({kr.killing, kr.second, kr.identity}, kr.scale);
      double s = 0.0;
      double v = stress_balance_residual(p, &s);
      stress.add(v, s);
      v = field_equation_residual(p, est.mean, &s);
      field.add(v, s);
      double ws = 0.0;
      double wv = lift_weyl_residual(k, pt, opt.backend, &ws);
      lift.add(wv, ws);
    }
    out.push_back(kill.finish(opt.tolerance));
    out.push_back(stress.finish(opt.tolerance));
    out.push_back(field.finish(opt.tolerance));
    out.push_back(lift.finish(opt.tolerance));
  }

  if (nb == 2) {
    ResidualAccumulator wave("dual_scalar_wave"), hess("dual_scalar_hessian"),
        lift("lift_conformal_flatness");
    for (auto& pt : pts) {
      ReductionPoint p = reduction_point(k, pt, opt.backend);
      LowerFlatnessResiduals lr = lower_flatness_residuals(p, est.mean);
      wave.add(lr.wave, lr.scale);
      hess.add(lr.hessian, lr.scale);
      double cs = 0.0;
      double cv = lift_cotton_residual(k, pt, opt.backend, &cs);
      lift.add(cv, cs);
    }
    out.push_back(wave.finish(opt.tolerance));
    out.push_back(hess.finish(opt.tolerance));
    out.push_back(lift.finish(opt.tolerance));
  }
  return out;
}

}  // namespace confkk
