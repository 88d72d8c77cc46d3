#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confkk/flatness.hpp"
#include "helpers.hpp"

using namespace confkk;
using testutil::box_points;
using testutil::random_gauge_texts;
using testutil::random_metric;

namespace {

double rel(double resid, double scale) { return resid / (1.0 + scale); }

// constant-scalar background with a covariantly constant dual vector
KKAnsatz uniform_charge_ansatz(double l) {
  MetricField base = MetricField::diagonal(
      {"t", "rho", "theta"}, {"l"}, {l},
      {"1 + l^2*rho^2", "-1/(1 + l^2*rho^2)", "-1"}, {1, -1, -1});
  return KKAnsatz(base, {"-l*rho", "0", "0"});
}

// null-coordinate chart built on a trigonometric potential
KKAnsatz trig_ansatz(double A, double B, double a) {
  MetricField base = MetricField::from_upper(
      {"u", "Phi", "theta"}, {"A", "B", "a"}, {A, B, a},
      {"A + B*cos(Phi/2)", "1", "0", "0", "0", "-a*sin(Phi/2)^2"}, {1, -1, -1});
  return KKAnsatz(base, {"0", "0", "-sqrt(a)*cos(Phi/2)"});
}

// null-coordinate chart built on a quartic potential
KKAnsatz quartic_ansatz(double A, double B) {
  MetricField base = MetricField::from_upper(
      {"u", "X", "theta"}, {"A", "B"}, {A, B},
      {"0.25*X^4 + A*X^2 + B", "1", "0", "0", "0", "-X^2"}, {1, -1, -1});
  return KKAnsatz(base, {"-X^2/2", "0", "0"});
}

std::vector<std::vector<double>> trig_points(int count, std::uint64_t seed) {
  SampleBox box;
  box.ranges = {{-0.5, 0.5}, {0.3, M_PI - 0.3}, {0.0, 1.0}};
  return sample_points(box, count, seed);
}

std::vector<std::vector<double>> quartic_points(int count, std::uint64_t seed) {
  SampleBox box;
  box.ranges = {{-0.5, 0.5}, {0.5, 1.5}, {0.0, 1.0}};
  return sample_points(box, count, seed);
}

}  // namespace

TEST_CASE("uniform-charge background satisfies every four-dimensional condition") {
  const double l = 0.5;
  KKAnsatz k = uniform_charge_ansatz(l);
  for (auto& pt : box_points(3, 8, 300u, -1.0, 1.0)) {
    ReductionPoint p = reduction_point(k, pt);

    REQUIRE(p.base.scalar.v == Catch::Approx(2 * l * l).epsilon(1e-12));
    REQUIRE(p.dual_up(2).v == Catch::Approx(l).epsilon(1e-12));
    REQUIRE(p.dual_sq.v == Catch::Approx(-l * l).epsilon(1e-12));
    REQUIRE(charge_density(p) == Catch::Approx(3 * l * l).margin(1e-9));

    ConformalFlatnessResiduals c = conformal_flatness_residuals(p);
    REQUIRE(rel(c.rank4, c.rank4_scale) < 1e-12);
    REQUIRE(rel(c.rank2, c.rank2_scale) < 1e-12);
    REQUIRE(rel(c.rank3, c.rank3_scale) < 1e-12);

    KillingResiduals kr = killing_residuals(p);
    REQUIRE(kr.killing < 1e-12);
    REQUIRE(kr.second < 1e-12);
    REQUIRE(kr.identity < 1e-12);

    ConstancyData cc = covariant_constancy(p);
    REQUIRE(cc.derivative < 1e-12);
    REQUIRE(std::abs(cc.branch) < 1e-12);

    DualKillingData dk = dual_killing(p);
    REQUIRE(dk.magnitude < 1e-12);

    REQUIRE(stress_balance_residual(p) < 1e-12);
    REQUIRE(field_equation_residual(p, 3 * l * l) < 1e-12);

    double ws = 0.0;
    REQUIRE(rel(lift_weyl_residual(k, pt, Backend::Jets, &ws), ws) < 1e-10);
  }
}

TEST_CASE("trigonometric chart is a solution with charge -3A/4") {
  const double A = 1.0, B = 0.5, a = 4.0;
  KKAnsatz k = trig_ansatz(A, B, a);
  for (auto& pt : trig_points(8, 310u)) {
    ReductionPoint p = reduction_point(k, pt);
    double phi = pt[1];

    REQUIRE(p.base.scalar.v ==
            Catch::Approx(-1.25 * B * std::cos(phi / 2) - 0.5 * A).epsilon(1e-10));
    REQUIRE(charge_density(p) == Catch::Approx(-0.75 * A).margin(1e-10));

    // the dual vector is the expected null-direction Killing field
    REQUIRE(p.dual_up(0).v == Catch::Approx(0.5).epsilon(1e-11));
    REQUIRE(std::abs(p.dual_up(1).v) < 1e-12);
    REQUIRE(std::abs(p.dual_up(2).v) < 1e-12);

    ConformalFlatnessResiduals c = conformal_flatness_residuals(p);
    REQUIRE(rel(c.rank2, c.rank2_scale) < 1e-11);
    REQUIRE(rel(c.rank3, c.rank3_scale) < 1e-11);

    KillingResiduals kr = killing_residuals(p);
    REQUIRE(rel(kr.killing, kr.scale) < 1e-11);
    REQUIRE(rel(kr.second, kr.scale) < 1e-10);
    REQUIRE(rel(kr.identity, kr.scale) < 1e-10);

    DualKillingData dk = dual_killing(p);
    REQUIRE(rel(dk.orthogonality, dk.magnitude) < 1e-11);
    REQUIRE(rel(dk.killing, dk.scale) < 1e-10);
    REQUIRE(dk.vec_up(2) == Catch::Approx(B / (4 * std::sqrt(a))).epsilon(1e-10));
    REQUIRE(std::abs(dk.vec_up(0)) < 1e-11);
    REQUIRE(std::abs(dk.vec_up(1)) < 1e-11);

    GradientIdentityResiduals g = gradient_identity_residuals(p);
    REQUIRE(rel(g.contracted, g.scale) < 1e-11);
    REQUIRE(rel(g.diverged, g.scale) < 1e-11);

    double ws = 0.0;
    REQUIRE(rel(lift_weyl_residual(k, pt, Backend::Jets, &ws), ws) < 1e-10);
  }

  // scalar curvature closed form at the midpoint of the interval
  ReductionPoint mid = reduction_point(k, std::vector<double>{0.0, M_PI, 0.5});
  REQUIRE(mid.base.scalar.v == Catch::Approx(-0.5).margin(1e-9));
}

TEST_CASE("quartic chart is a solution with charge -6A") {
  const double A = 0.3, B = 1.0;
  KKAnsatz k = quartic_ansatz(A, B);
  for (auto& pt : quartic_points(8, 320u)) {
    ReductionPoint p = reduction_point(k, pt);
    double X = pt[1];

    REQUIRE(p.base.scalar.v == Catch::Approx(5 * X * X + 6 * A).epsilon(1e-10));
    REQUIRE(charge_density(p) == Catch::Approx(-6 * A).margin(1e-10));

    KillingResiduals kr = killing_residuals(p);
    REQUIRE(rel(kr.killing, kr.scale) < 1e-11);
    REQUIRE(rel(kr.second, kr.scale) < 1e-10);

    DualKillingData dk = dual_killing(p);
    REQUIRE(rel(dk.orthogonality, dk.magnitude) < 1e-11);
    REQUIRE(rel(dk.killing, dk.scale) < 1e-10);
    REQUIRE(dk.vec_up(0) == Catch::Approx(-2.0).epsilon(1e-10));

    ConformalFlatnessResiduals c = conformal_flatness_residuals(p);
    REQUIRE(rel(c.rank2, c.rank2_scale) < 1e-11);
    REQUIRE(rel(c.rank3, c.rank3_scale) < 1e-11);

    double ws = 0.0;
    REQUIRE(rel(lift_weyl_residual(k, pt, Backend::Jets, &ws), ws) < 1e-10);
  }

  // closed-form scalar at a pinned parameter point
  KKAnsatz k0 = quartic_ansatz(0.0, 1.0);
  ReductionPoint p0 = reduction_point(k0, std::vector<double>{0.0, 1.0, 0.5});
  REQUIRE(p0.base.scalar.v == Catch::Approx(5.0).margin(1e-9));
}

TEST_CASE("two-dimensional base reduces to the wave system") {
  MetricField base = MetricField::diagonal({"t", "rho"}, {}, {},
                                           {"1 + rho^2", "-1/(1 + rho^2)"}, {1, -1});
  KKAnsatz k(base, {"-rho", "0"});
  auto pts = box_points(2, 10, 330u);
  ChargeEstimate est = estimate_charge(k, pts);
  REQUIRE(est.mean == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(est.spread < 1e-10);

  for (auto& pt : pts) {
    ReductionPoint p = reduction_point(k, pt);
    REQUIRE(p.dual_scalar.v == Catch::Approx(1.0).epsilon(1e-11));
    LowerFlatnessResiduals lr = lower_flatness_residuals(p, est.mean);
    REQUIRE(rel(lr.wave, lr.scale) < 1e-11);
    REQUIRE(rel(lr.hessian, lr.scale) < 1e-11);
    double cs = 0.0;
    REQUIRE(rel(lift_cotton_residual(k, pt, Backend::Jets, &cs), cs) < 1e-9);
  }

  // a perturbed potential must be rejected loudly
  KKAnsatz bad(MetricField::diagonal({"t", "rho"}, {}, {},
                                     {"1 + rho^2", "-1/(1 + rho^2)"}, {1, -1}),
               {"-rho - 0.1*rho^2", "0"});
  double worst = 0.0;
  for (auto& pt : pts) {
    double cs = 0.0;
    double cv = lift_cotton_residual(bad, pt, Backend::Jets, &cs);
    worst = std::max(worst, rel(cv, cs));
  }
  REQUIRE(worst > 1e-3);
}

TEST_CASE("rank-4 condition is vacuous only on a three-dimensional base") {
  KKAnsatz k3(random_metric(3, 340u), random_gauge_texts(3, 341u));
  for (auto& pt : box_points(3, 5, 342u)) {
    ConformalFlatnessResiduals c = conformal_flatness_residuals(reduction_point(k3, pt));
    REQUIRE(rel(c.rank4, c.rank4_scale) < 1e-12);
    // generic backgrounds fail the other two conditions
    REQUIRE(rel(c.rank2, c.rank2_scale) > 1e-4);
    REQUIRE(rel(c.rank3, c.rank3_scale) > 1e-4);
  }

  KKAnsatz k4(random_metric(4, 343u), random_gauge_texts(4, 344u));
  double worst = 0.0;
  for (auto& pt : box_points(4, 5, 345u)) {
    ConformalFlatnessResiduals c = conformal_flatness_residuals(reduction_point(k4, pt));
    worst = std::max(worst, rel(c.rank4, c.rank4_scale));
  }
  REQUIRE(worst > 1e-4);
}

TEST_CASE("batch runners aggregate reports") {
  KKAnsatz k(random_metric(3, 350u), random_gauge_texts(3, 351u));
  SampleBox box;
  box.ranges = {{-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}};
  VerifyOptions opt;
  opt.points = 6;
  opt.seed = 7;

  std::vector<ResidualReport> idr = verify_identities(k, box, opt);
  REQUIRE(idr.size() == 4);
  for (const ResidualReport& r : idr) {
    REQUIRE(r.n_points == 6);
    REQUIRE(r.pass);
  }
  REQUIRE(all_pass(idr));

  // a generic background is not a solution
  std::vector<ResidualReport> sr = verify_solution(k, box, opt);
  REQUIRE_FALSE(all_pass(sr));

  // the uniform-charge background is
  KKAnsatz good = uniform_charge_ansatz(0.5);
  SampleBox gbox;
  gbox.ranges = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  std::vector<ResidualReport> gr = verify_solution(good, gbox, opt);
  REQUIRE(all_pass(gr));
  bool found_charge = false;
  for (const ResidualReport& r : gr)
    if (r.name == "charge_constancy") found_charge = true;
  REQUIRE(found_charge);
}

TEST_CASE("finite-difference backend verifies solutions at its own tolerance") {
  KKAnsatz k = uniform_charge_ansatz(0.5);
  SampleBox box;
  box.ranges = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  VerifyOptions opt;
  opt.points = 4;
  opt.seed = 3;
  opt.backend = Backend::FiniteDiff;
  opt.tolerance = kDefaultTolFd;
  std::vector<ResidualReport> r = verify_solution(k, box, opt);
  REQUIRE(all_pass(r));
}

TEST_CASE("dimension guards on the specialized checks") {
  KKAnsatz k2(random_metric(2, 360u), {"0.1*x0", "0"});
  ReductionPoint p2 = reduction_point(k2, std::vector<double>{0.1, 0.2});
  REQUIRE_THROWS_AS(killing_residuals(p2), std::invalid_argument);
  REQUIRE_THROWS_AS(dual_killing(p2), std::invalid_argument);
  REQUIRE_THROWS_AS(conformal_flatness_residuals(p2), std::invalid_argument);
  REQUIRE_THROWS_AS(stress_balance_residual(p2), std::invalid_argument);

  KKAnsatz k3(random_metric(3, 361u), {"0.1*x0", "0", "0"});
  ReductionPoint p3 = reduction_point(k3, std::vector<double>{0.1, 0.2, 0.3});
  REQUIRE_THROWS_AS(lower_flatness_residuals(p3, 0.0), std::invalid_argument);
}
