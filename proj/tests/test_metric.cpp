#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confkk/metric.hpp"
#include "confkk/sampling.hpp"
#include "helpers.hpp"

using namespace confkk;
using testutil::box_points;
using testutil::random_metric;

namespace {

double rel(double resid, double scale) { return resid / (1.0 + scale); }

MetricField ads3(double l, int lower_sign = 1) {
  // (1 -+ l^2 rho^2) dt^2 - drho^2/(1 -+ l^2 rho^2) - rho^2 dtheta^2,
  // lower sign (+) gives the negative-curvature space with scalar +6 l^2
  std::string s = lower_sign ? "+" : "-";
  return MetricField::diagonal(
      {"t", "rho", "theta"}, {"l"}, {l},
      {"1 " + s + " l^2*rho^2", "-1/(1 " + s + " l^2*rho^2)", "-rho^2"}, {1, -1, -1});
}

}  // namespace

TEST_CASE("flat space has vanishing curvature") {
  MetricField m = MetricField::diagonal({"x0", "x1", "x2", "x3"}, {}, {},
                                        {"1", "-1", "-1", "-1"}, {1, -1, -1, -1});
  CurvatureBundle b = curvature_at(m, std::vector<double>{0.3, -0.2, 0.9, 0.1});
  REQUIRE(max_abs(b.riemann_mixed) == 0.0);
  REQUIRE(max_abs(b.ricci_dd) == 0.0);
  REQUIRE(b.ricci_scalar == 0.0);
  REQUIRE(max_abs(b.weyl_up) == 0.0);
}

TEST_CASE("constant-curvature 3D scalars match their closed forms") {
  const double l = 0.5;
  std::vector<double> pt = {0.0, 0.3, 1.0};

  CurvatureBundle neg = curvature_at(ads3(l, 1), pt);
  REQUIRE(neg.ricci_scalar == Catch::Approx(6.0 * l * l).epsilon(1e-12));
  REQUIRE(neg.ricci_scalar == Catch::Approx(1.5).epsilon(1e-12));

  CurvatureBundle pos = curvature_at(ads3(l, 0), pt);
  REQUIRE(pos.ricci_scalar == Catch::Approx(-6.0 * l * l).epsilon(1e-12));

  // lambda = 0 degenerates to flat space
  MetricField flat3 = ads3(0.0, 1);
  CurvatureBundle fb = curvature_at(flat3, pt);
  REQUIRE(max_abs(fb.riemann_mixed) < 1e-13);
}

TEST_CASE("2D constant-curvature chart has scalar two") {
  MetricField m = MetricField::diagonal({"t", "rho"}, {}, {},
                                        {"1 + rho^2", "-1/(1 + rho^2)"}, {1, -1});
  for (auto& pt : box_points(2, 5, 41007u)) {
    CurvatureBundle b = curvature_at(m, pt);
    REQUIRE(b.ricci_scalar == Catch::Approx(2.0).epsilon(1e-11));
  }
}

TEST_CASE("conformally flat 4D metric has vanishing Weyl") {
  MetricField m = MetricField::diagonal(
      {"x0", "x1", "x2", "x3"}, {}, {},
      {"exp(2*(0.1*x1^2 + 0.05*x0*x2))", "-exp(2*(0.1*x1^2 + 0.05*x0*x2))",
       "-exp(2*(0.1*x1^2 + 0.05*x0*x2))", "-exp(2*(0.1*x1^2 + 0.05*x0*x2))"},
      {1, -1, -1, -1});
  for (auto& pt : box_points(4, 20, 90210u)) {
    CurvatureBundle b = curvature_at(m, pt);
    double scale = max_abs(b.riemann_up);
    REQUIRE(rel(max_abs(b.weyl_up), scale) < 1e-8);
  }
}

TEST_CASE("random metric satisfies all Riemann symmetries") {
  MetricField m = random_metric(4, 555123u);
  for (auto& pt : box_points(4, 6, 17u)) {
    CurvatureBundle b = curvature_at(m, pt);
    const int n = b.n;
    double scale = max_abs(b.riemann_up);
    double a1 = 0, a2 = 0, pair = 0, cyc = 0;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int mm = 0; mm < n; ++mm)
          for (int nn = 0; nn < n; ++nn) {
            a1 = std::max(a1, std::abs(b.riemann_up(k, l, mm, nn) + b.riemann_up(l, k, mm, nn)));
            a2 = std::max(a2, std::abs(b.riemann_up(k, l, mm, nn) + b.riemann_up(k, l, nn, mm)));
            pair = std::max(pair,
                            std::abs(b.riemann_up(k, l, mm, nn) - b.riemann_up(mm, nn, k, l)));
            cyc = std::max(cyc, std::abs(b.riemann_up(k, l, mm, nn) + b.riemann_up(k, mm, nn, l) +
                                         b.riemann_up(k, nn, l, mm)));
          }
    REQUIRE(rel(a1, scale) < 1e-11);
    REQUIRE(rel(a2, scale) < 1e-11);
    REQUIRE(rel(pair, scale) < 1e-11);
    REQUIRE(rel(cyc, scale) < 1e-9);

    // Ricci symmetric
    double rsym = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rsym = std::max(rsym, std::abs(b.ricci_uu(i, j) - b.ricci_uu(j, i)));
    REQUIRE(rel(rsym, max_abs(b.ricci_uu)) < 1e-11);
  }
}

TEST_CASE("Bianchi identities hold on random metrics") {
  for (std::uint64_t seed : {901u, 902u}) {
    MetricField m = random_metric(4, seed);
    for (auto& pt : box_points(4, 4, seed * 7 + 1)) {
      CurvatureJets c = curvature_jets(m, pt);
      BianchiResiduals b = bianchi_residuals(c);
      REQUIRE(rel(b.first, b.scale) < 1e-9);
      REQUIRE(rel(b.second, b.scale) < 1e-7);
      REQUIRE(rel(b.contracted, b.scale) < 1e-8);
    }
  }
}

TEST_CASE("Weyl is traceless on every index pair") {
  MetricField m = random_metric(4, 771u);
  for (auto& pt : box_points(4, 5, 772u)) {
    CurvatureBundle b = curvature_at(m, pt);
    double wscale = max_abs(b.weyl_up);
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        Tensor<double, 2> tr = trace_slots<4>(b.weyl_up, p, q, b.g);
        REQUIRE(rel(max_abs(tr), wscale) < 1e-9);
      }
  }
}

TEST_CASE("Cotton tensor behaves across the catalog of 3D cases") {
  // flat: exactly zero
  MetricField flat = MetricField::diagonal({"x0", "x1", "x2"}, {}, {}, {"1", "-1", "-1"});
  REQUIRE(max_abs(cotton_at(flat, std::vector<double>{0.2, 0.4, -0.1})) == 0.0);

  // conformally flat: zero to tolerance
  MetricField cf = MetricField::diagonal(
      {"x0", "x1", "x2"}, {}, {},
      {"exp(2*0.2*sin(x0)*x1)", "-exp(2*0.2*sin(x0)*x1)", "-exp(2*0.2*sin(x0)*x1)"});
  for (auto& pt : box_points(3, 20, 5150u)) {
    CurvatureBundle b = curvature_at(cf, pt);
    double scale = max_abs(b.riemann_up);
    REQUIRE(rel(max_abs(b.cotton), scale) < 1e-7);
  }

  // maximally symmetric: zero
  for (auto& pt : box_points(3, 5, 5151u, 0.1, 0.45)) {
    Tensor<double, 3> cot = cotton_at(ads3(0.5, 1), pt);
    REQUIRE(max_abs(cot) < 1e-9);
  }

  // antisymmetry in the first index pair is exact
  MetricField rnd = random_metric(3, 33u);
  Tensor<double, 3> cot = cotton_at(rnd, std::vector<double>{0.1, -0.2, 0.3});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        REQUIRE(cot(i, j, k) == -cot(j, i, k));

  // a generic 3D metric is not conformally flat
  CurvatureBundle rb = curvature_at(rnd, std::vector<double>{0.1, -0.2, 0.3});
  REQUIRE(rel(max_abs(rb.cotton), max_abs(rb.riemann_up)) > 1e-4);
}

TEST_CASE("finite-difference backend reproduces the jet results") {
  MetricField m = ads3(0.7, 1);
  std::vector<double> pt = {0.1, 0.35, 0.8};
  CurvatureBundle j = curvature_at(m, pt, Backend::Jets);
  CurvatureBundle f = curvature_at(m, pt, Backend::FiniteDiff);
  REQUIRE(std::abs(j.ricci_scalar - f.ricci_scalar) / (1.0 + std::abs(j.ricci_scalar)) < 1e-5);
  double dmax = 0;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int mm = 0; mm < 3; ++mm)
        for (int nn = 0; nn < 3; ++nn)
          dmax = std::max(dmax, std::abs(j.riemann_up(k, l, mm, nn) - f.riemann_up(k, l, mm, nn)));
  REQUIRE(rel(dmax, max_abs(j.riemann_up)) < 1e-5);

  // third-derivative content (Cotton) is noisier under finite differences
  Tensor<double, 3> cj = cotton_at(m, pt, Backend::Jets);
  Tensor<double, 3> cf = cotton_at(m, pt, Backend::FiniteDiff);
  double cmax = 0;
  for (std::size_t i = 0; i < cj.raw().size(); ++i)
    cmax = std::max(cmax, std::abs(cj.raw()[i] - cf.raw()[i]));
  REQUIRE(cmax < 1e-3);
}

TEST_CASE("index raising and lowering round-trip") {
  MetricField m = random_metric(4, 2024u);
  std::vector<double> pt = {0.2, -0.3, 0.1, 0.4};
  CurvatureBundle b = curvature_at(m, pt);

  SplitMix64 rng(99u);
  Tensor<double, 2> t(4, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = rng.uniform(-2, 2);

  Tensor<double, 2> lowered = contract_slot<2>(t, 0, b.g);
  Tensor<double, 2> back = contract_slot<2>(lowered, 0, b.inverse_metric);
  double d = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d = std::max(d, std::abs(back(i, j) - t(i, j)));
  REQUIRE(d < 1e-12);

  // trace of g against its inverse is the dimension
  Tensor<double, 0> tr = trace_slots<2>(b.g, 0, 1, b.inverse_metric);
  REQUIRE(tr.raw()[0] == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are rejected") {
  REQUIRE_THROWS_AS(MetricField::diagonal({"x"}, {}, {}, {"1"}), std::invalid_argument);

  MetricField m =
      MetricField::diagonal({"t", "rho", "theta"}, {}, {}, {"1", "-rho^2", "-1"});
  REQUIRE_THROWS_AS(curvature_at(m, std::vector<double>{0.0, 1e-8, 0.0}), SingularMetricError);

  MetricField ok = ads3(0.5, 1);
  REQUIRE_THROWS_AS(curvature_at(ok, std::vector<double>{0.0, 0.3}), std::invalid_argument);
}
