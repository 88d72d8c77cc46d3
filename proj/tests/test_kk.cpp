#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confkk/kk.hpp"
#include "helpers.hpp"

using namespace confkk;
using testutil::box_points;
using testutil::random_gauge_texts;
using testutil::random_metric;

namespace {

double rel(double resid, double scale) { return resid / (1.0 + scale); }

KKAnsatz random_ansatz(int base_dim, std::uint64_t seed) {
  return KKAnsatz(random_metric(base_dim, seed), random_gauge_texts(base_dim, seed + 17));
}

}  // namespace

TEST_CASE("assemble produces the block metric") {
  MetricField base = random_metric(3, 100u);
  std::vector<std::string> gauge = random_gauge_texts(3, 101u);
  KKAnsatz k(base, gauge);
  MetricField full = k.assemble();

  REQUIRE(full.dim() == 4);
  REQUIRE(full.coords().back() == "w");
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) REQUIRE_FALSE(full.pool().depends_on_coord(full.component(i, j), 3));

  for (auto& pt : box_points(3, 4, 102u)) {
    std::vector<double> fp = pt;
    fp.push_back(0.6);
    std::vector<double> a(3);
    for (int mu = 0; mu < 3; ++mu)
      a[mu] = k.base().pool().eval<double>(k.gauge(mu), pt, k.base().param_values(), 3);
    for (int mu = 0; mu < 3; ++mu) {
      for (int nu = 0; nu < 3; ++nu)
        REQUIRE(full.eval_value(mu, nu, fp) ==
                Catch::Approx(base.eval_value(mu, nu, pt) - a[mu] * a[nu]).margin(1e-14));
      REQUIRE(full.eval_value(mu, 3, fp) == Catch::Approx(-a[mu]).margin(1e-15));
    }
    REQUIRE(full.eval_value(3, 3, fp) == -1.0);

    // determinant flips sign and keeps magnitude; inverse has the dual block form
    MetricJets mb = metric_jets(base, pt);
    MetricJets mf = metric_jets(full, fp);
    REQUIRE(mf.det.v == Catch::Approx(-mb.det.v).epsilon(1e-12));
    double asq = 0.0;
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu) asq += mb.ginv(mu, nu).v * a[mu] * a[nu];
    for (int mu = 0; mu < 3; ++mu) {
      double aup = 0.0;
      for (int nu = 0; nu < 3; ++nu) {
        aup += mb.ginv(mu, nu).v * a[nu];
        REQUIRE(mf.ginv(mu, nu).v == Catch::Approx(mb.ginv(mu, nu).v).margin(1e-12));
      }
      REQUIRE(mf.ginv(mu, 3).v == Catch::Approx(-aup).margin(1e-12));
    }
    REQUIRE(mf.ginv(3, 3).v == Catch::Approx(-1.0 + asq).margin(1e-12));
  }
}

TEST_CASE("conformal factor scales the whole block") {
  MetricField base = random_metric(3, 110u);
  KKAnsatz k(base, {"0.2*x0", "0", "0.1*x1"}, "0.3*x0 + 0.1*x1*x2");
  MetricField full = k.assemble();
  std::vector<double> pt = {0.2, -0.1, 0.3};
  std::vector<double> fp = pt;
  fp.push_back(-0.4);
  double sigma = 0.3 * pt[0] + 0.1 * pt[1] * pt[2];
  REQUIRE(full.eval_value(3, 3, fp) == Catch::Approx(-std::exp(2 * sigma)).epsilon(1e-14));
  MetricJets mb = metric_jets(base, pt);
  MetricJets mf = metric_jets(full, fp);
  REQUIRE(mf.det.v == Catch::Approx(-std::exp(8 * sigma) * mb.det.v).epsilon(1e-12));

  REQUIRE_THROWS_AS(reduction_point(k, pt), std::invalid_argument);
}

TEST_CASE("split inverts assemble") {
  for (bool with_sigma : {false, true}) {
    MetricField base = random_metric(3, 120u);
    KKAnsatz k(base, random_gauge_texts(3, 121u), with_sigma ? "0.2*sin(x1)" : "");
    KKAnsatz back = KKAnsatz::split(k.assemble());
    REQUIRE(back.fiber_name() == "w");
    REQUIRE(back.has_conformal_factor() == with_sigma);

    for (auto& pt : box_points(3, 5, 122u)) {
      for (int mu = 0; mu < 3; ++mu) {
        double a0 = k.base().pool().eval<double>(k.gauge(mu), pt, k.base().param_values(), 3);
        double a1 = back.base().pool().eval<double>(back.gauge(mu), pt, back.base().param_values(), 3);
        REQUIRE(a1 == Catch::Approx(a0).margin(1e-13));
        for (int nu = mu; nu < 3; ++nu)
          REQUIRE(back.base().eval_value(mu, nu, pt) ==
                  Catch::Approx(base.eval_value(mu, nu, pt)).margin(1e-12));
      }
      if (with_sigma) {
        double s = back.base().pool().eval<double>(back.conformal_factor(), pt,
                                                   back.base().param_values(), 3);
        REQUIRE(s == Catch::Approx(0.2 * std::sin(pt[1])).margin(1e-13));
      }
    }
  }

  // a metric that genuinely depends on the last coordinate cannot be split
  MetricField bad = MetricField::diagonal({"t", "rho", "w"}, {}, {}, {"1", "-1", "-1 - 0.1*w^2"});
  REQUIRE_THROWS_AS(KKAnsatz::split(bad), std::invalid_argument);
}

TEST_CASE("field strength from a lifted potential") {
  // a_theta = -2 sqrt(A - rho^2): at A = 4, rho = 1 the rho-theta component is 2/sqrt(3)
  MetricField base = MetricField::diagonal({"t", "rho", "theta"}, {"A"}, {4.0},
                                           {"1", "-1", "-rho^2"});
  KKAnsatz k(base, {"0", "0", "-2*sqrt(A - rho^2)"});
  ReductionPoint p = reduction_point(k, std::vector<double>{0.0, 1.0, 0.5});
  REQUIRE(p.f_dd(1, 2).v == Catch::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-13));
  REQUIRE(p.f_dd(2, 1).v == -p.f_dd(1, 2).v);
  REQUIRE(p.f_dd(0, 1).v == 0.0);

  // gradient potentials carry no field strength
  MetricField base2 = random_metric(3, 130u);
  KKAnsatz pure(base2, {"cos(x0)*x1", "sin(x0)", "0"});
  ReductionPoint q = reduction_point(pure, std::vector<double>{0.3, -0.2, 0.1});
  double fmax = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) fmax = std::max(fmax, std::abs(q.f_dd(m, n).v));
  REQUIRE(fmax < 1e-14);
}

TEST_CASE("three-dimensional dual vector identities") {
  KKAnsatz k = random_ansatz(3, 140u);
  for (auto& pt : box_points(3, 6, 141u)) {
    ReductionPoint p = reduction_point(k, pt);
    REQUIRE(p.has_dual_vector);
    double scale = 1.0 + std::abs(p.ff.v);

    // f^{mu nu} f_{nu mu} = -2 f_mu f^mu
    REQUIRE(std::abs(p.ff.v + 2.0 * p.dual_sq.v) / scale < 1e-12);

    // f^{mu la} f_la^nu = f^mu f^nu - f^2 g^{mu nu}
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) {
        double expect = p.dual_up(m).v * p.dual_up(n).v - p.dual_sq.v * p.base.ginv0(m, n);
        REQUIRE(std::abs(p.fsq_uu(m, n).v - expect) / scale < 1e-12);
      }

    // the dual vector is divergence-free
    Tensor<Jet1, 1> fup(3, Jet1::constant(0.0, 3));
    for (int m = 0; m < 3; ++m) fup(m) = truncate1(p.dual_up(m));
    Tensor<double, 2> dup = cov_deriv_vector_up(p.base, fup);
    double div = dup(0, 0) + dup(1, 1) + dup(2, 2);
    REQUIRE(std::abs(div) / scale < 1e-11);

    // reconstruct f_{mu nu} = sqrt(g) eps_{mu nu la} f^la
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) {
        double acc = 0.0;
        for (int l = 0; l < 3; ++l) acc += levi3(m, n, l) * p.dual_up(l).v;
        acc *= p.base.sqrt_absdet.v;
        REQUIRE(std::abs(p.f_dd(m, n).v - acc) / scale < 1e-12);
      }
  }
}

TEST_CASE("static charged chart carries unit dual charge") {
  MetricField base = MetricField::from_upper(
      {"t", "rho", "theta"}, {"A", "B"}, {0.0, 1.0},
      {"0.25*rho^4 + A*rho^2 + B", "0", "0", "-1/(0.25*rho^4 + A*rho^2 + B)", "0", "-rho^2"});
  KKAnsatz k(base, {"-rho^2/2", "0", "0"});
  for (double rho : {0.4, 0.8, 1.5}) {
    ReductionPoint p = reduction_point(k, std::vector<double>{0.1, rho, 0.7});
    REQUIRE(p.dual_up(2).v == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(p.dual_up(0).v) < 1e-13);
    REQUIRE(std::abs(p.dual_up(1).v) < 1e-13);
  }
}

TEST_CASE("two-dimensional dual scalar") {
  MetricField base = MetricField::diagonal({"t", "rho"}, {}, {}, {"1 + rho^2", "-1/(1 + rho^2)"});
  KKAnsatz k(base, {"-rho", "0"});
  ReductionPoint p = reduction_point(k, std::vector<double>{0.2, 0.3});
  REQUIRE(p.has_dual_scalar);
  // f_{t rho} = 1 and |det g| = 1 in this chart
  REQUIRE(p.dual_scalar.v == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predicted curvature matches the direct computation on random backgrounds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    KKAnsatz k = random_ansatz(3, 1000u + seed);
    for (auto& pt : box_points(3, 3, 2000u + seed)) {
      ReductionResiduals r = compare_reduction(k, pt);
      INFO("seed " << seed);
      REQUIRE(rel(r.riemann, r.riemann_scale) < 1e-8);
      REQUIRE(rel(r.ricci, r.ricci_scale) < 1e-8);
      REQUIRE(rel(r.scalar, r.scalar_scale) < 1e-8);
      REQUIRE(rel(r.weyl, r.weyl_scale) < 1e-7);
    }
  }
}

TEST_CASE("predictions hold one dimension up and one down") {
  // base dimension 4: the base Weyl tensor enters the greek block
  KKAnsatz k4 = random_ansatz(4, 150u);
  for (auto& pt : box_points(4, 3, 151u)) {
    ReductionResiduals r = compare_reduction(k4, pt);
    REQUIRE(rel(r.riemann, r.riemann_scale) < 1e-9);
    REQUIRE(rel(r.ricci, r.ricci_scale) < 1e-9);
    REQUIRE(rel(r.scalar, r.scalar_scale) < 1e-9);
    REQUIRE(rel(r.weyl, r.weyl_scale) < 1e-9);
  }

  // base dimension 2: no Weyl, but the Riemann and Ricci blocks still reduce
  KKAnsatz k2 = random_ansatz(2, 160u);
  for (auto& pt : box_points(2, 3, 161u)) {
    ReductionResiduals r = compare_reduction(k2, pt);
    REQUIRE(rel(r.riemann, r.riemann_scale) < 1e-9);
    REQUIRE(rel(r.ricci, r.ricci_scale) < 1e-9);
    REQUIRE(rel(r.scalar, r.scalar_scale) < 1e-9);
  }
}

TEST_CASE("dual-vector form of the conformal blocks agrees with the general form") {
  KKAnsatz k = random_ansatz(3, 170u);
  for (auto& pt : box_points(3, 5, 171u)) {
    ReductionPoint p = reduction_point(k, pt);
    WeylBlocks a = predicted_weyl(p);
    WeylBlocks b = predicted_weyl_dual_form(p);
    double scale = std::max(max_abs(a.greek), max_abs(a.fiber));
    double d = 0.0;
    for (std::size_t i = 0; i < a.greek.raw().size(); ++i)
      d = std::max(d, std::abs(a.greek.raw()[i] - b.greek.raw()[i]));
    for (std::size_t i = 0; i < a.fiber.raw().size(); ++i)
      d = std::max(d, std::abs(a.fiber.raw()[i] - b.fiber.raw()[i]));
    for (std::size_t i = 0; i < a.c_uu.raw().size(); ++i)
      d = std::max(d, std::abs(a.c_uu.raw()[i] - b.c_uu.raw()[i]));
    for (std::size_t i = 0; i < a.fiber2.raw().size(); ++i)
      d = std::max(d, std::abs(a.fiber2.raw()[i] - b.fiber2.raw()[i]));
    REQUIRE(rel(d, scale) < 1e-11);
  }
}

TEST_CASE("rank-2 conformal block is the base trace of the full conformal tensor") {
  for (int base_dim : {3, 4}) {
    KKAnsatz k = random_ansatz(base_dim, 180u + static_cast<std::uint64_t>(base_dim));
    MetricField full = k.assemble();
    for (auto& pt : box_points(base_dim, 4, 185u)) {
      ReductionPoint p = reduction_point(k, pt);
      WeylBlocks w = predicted_weyl(p);
      std::vector<double> fp = pt;
      fp.push_back(0.0);
      CurvatureBundle direct = curvature_at(full, fp);

      double scale = max_abs(direct.weyl_up);
      for (int n = 0; n < base_dim; ++n)
        for (int t = 0; t < base_dim; ++t) {
          double acc = 0.0;
          for (int m = 0; m < base_dim; ++m)
            for (int l = 0; l < base_dim; ++l)
              acc += p.base.g0(m, l) * direct.weyl_up(m, n, l, t);
          REQUIRE(rel(std::abs(acc - w.c_uu(n, t)), scale) < 1e-9);
        }

      // trace laws of the two building blocks against the base metric
      double ctr = 0.0, ttr = 0.0;
      for (int m = 0; m < base_dim; ++m)
        for (int n = 0; n < base_dim; ++n) {
          ctr += p.base.g0(m, n) * w.c_uu(m, n);
          ttr += p.base.g0(m, n) * w.t_uu(m, n);
        }
      int N = base_dim + 1;
      double expect = (N - 3) / (2.0 * (N - 2)) * p.ff.v;
      REQUIRE(std::abs(ctr) / (1.0 + scale) < 1e-11);
      REQUIRE(ttr == Catch::Approx(expect).margin(1e-11));
    }
  }
}

TEST_CASE("gauge transformations leave the reduction invariant") {
  MetricField base = random_metric(3, 190u);
  std::vector<std::string> gauge = random_gauge_texts(3, 191u);
  KKAnsatz k(base, gauge);
  std::vector<std::string> shifted = gauge;
  // add the gradient of x0*x1 + 0.5 sin(x2)
  shifted[0] += " + x1";
  shifted[1] += " + x0";
  shifted[2] += " + 0.5*cos(x2)";
  KKAnsatz k2(random_metric(3, 190u), shifted);

  for (auto& pt : box_points(3, 4, 192u)) {
    ReductionPoint p1 = reduction_point(k, pt);
    ReductionPoint p2 = reduction_point(k2, pt);
    double d = 0.0;
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) d = std::max(d, std::abs(p1.f_dd(m, n).v - p2.f_dd(m, n).v));
    REQUIRE(d < 1e-12);

    RicciBlocks r1 = predicted_ricci(p1);
    RicciBlocks r2 = predicted_ricci(p2);
    REQUIRE(r1.scalar == Catch::Approx(r2.scalar).margin(1e-12));
    ReductionResiduals rr = compare_reduction(k2, pt);
    REQUIRE(rel(rr.riemann, rr.riemann_scale) < 1e-9);
  }
}

TEST_CASE("nothing depends on the position along the fiber") {
  KKAnsatz k = random_ansatz(3, 200u);
  MetricField full = k.assemble();
  std::vector<double> pt = {0.15, -0.2, 0.3};
  std::vector<double> fp1 = pt, fp2 = pt;
  fp1.push_back(0.37);
  fp2.push_back(-1.2);
  CurvatureBundle b1 = curvature_at(full, fp1);
  CurvatureBundle b2 = curvature_at(full, fp2);
  REQUIRE(b1.ricci_scalar == Catch::Approx(b2.ricci_scalar).margin(1e-13));
  double d = 0.0;
  for (std::size_t i = 0; i < b1.riemann_up.raw().size(); ++i)
    d = std::max(d, std::abs(b1.riemann_up.raw()[i] - b2.riemann_up.raw()[i]));
  REQUIRE(d < 1e-12);
}

TEST_CASE("quadratic conformal invariant reduces with a fixed ratio of eight") {
  for (std::uint64_t seed : {210u, 211u, 212u}) {
    KKAnsatz k = random_ansatz(3, seed);
    for (auto& pt : box_points(3, 3, seed + 5)) {
      WeylQuadratic q = weyl_quadratic(k, pt);
      REQUIRE(std::abs(q.reduced) > 1e-12);  // generic background
      REQUIRE(q.full == Catch::Approx(8.0 * q.reduced).epsilon(1e-9));
      REQUIRE(q.ratio == Catch::Approx(8.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("finite-difference backend agrees on the reduction") {
  KKAnsatz k = random_ansatz(3, 220u);
  std::vector<double> pt = {0.1, 0.25, -0.3};
  ReductionPoint pj = reduction_point(k, pt, Backend::Jets);
  ReductionPoint pf = reduction_point(k, pt, Backend::FiniteDiff);
  double d = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) d = std::max(d, std::abs(pj.f_uu(m, n).v - pf.f_uu(m, n).v));
  REQUIRE(d < 1e-6);
  ReductionResiduals r = compare_reduction(k, pt, Backend::FiniteDiff);
  REQUIRE(rel(r.riemann, r.riemann_scale) < 1e-5);
  REQUIRE(rel(r.ricci, r.ricci_scale) < 1e-5);
  REQUIRE(rel(r.scalar, r.scalar_scale) < 1e-5);
}

TEST_CASE("malformed reductions are rejected") {
  MetricField base3 = random_metric(3, 230u);
  REQUIRE_THROWS_AS(KKAnsatz(base3, {"0", "0"}), std::invalid_argument);
  REQUIRE_THROWS_AS(KKAnsatz(random_metric(6, 231u), {"0", "0", "0", "0", "0", "0"}),
                    std::invalid_argument);

  KKAnsatz k2 = random_ansatz(2, 232u);
  ReductionPoint p2 = reduction_point(k2, std::vector<double>{0.1, 0.2});
  REQUIRE_THROWS_AS(predicted_weyl(p2), std::invalid_argument);
  REQUIRE_THROWS_AS(predicted_weyl_dual_form(p2), std::invalid_argument);
  REQUIRE_THROWS_AS(weyl_quadratic(k2, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}
