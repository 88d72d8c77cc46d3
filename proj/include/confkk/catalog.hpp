#pragma once

// Named closed-form backgrounds and the one-variable models behind them.
//
// A family packages a chart (MetricField), the gauge one-form that lifts it
// through the circle ansatz, parameter defaults, a safe sampling box, and
// whatever closed-form scalars are recorded for it. A generator model
// describes a null chart through two functions of the scalar X, a kinetic
// function U and a potential V; the chart data follow by quadrature,
//
//   Q(X) = -int U,   K(X) = int e^Q V + modulus,
//
// and the associated line element is e^Q (2 du dX + K du^2) with an optional
// circle direction of size X^alpha. Root finders locate constant-scalar
// points (zeros of V) and horizons (zeros of K).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confkk/expr.hpp"
#include "confkk/jet.hpp"
#include "confkk/kk.hpp"
#include "confkk/metric.hpp"
#include "confkk/quadrature.hpp"
#include "confkk/sampling.hpp"

namespace confkk {

namespace catdetail {

inline void require_count(std::span<const double> par, std::size_t n, const char* what) {
  if (par.size() != n) throw std::invalid_argument(std::string("wrong parameter count for ") + what);
}

inline std::vector<double> merge_params(const std::vector<std::string>& names,
                                        const std::vector<double>& defaults,
                                        const std::map<std::string, double>& overrides,
                                        const std::string& context) {
  std::vector<double> out = defaults;
  for (const auto& [key, value] : overrides) {
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end())
      throw std::invalid_argument("unknown parameter '" + key + "' for " + context);
    out[static_cast<std::size_t>(it - names.begin())] = value;
  }
  return out;
}

}  // namespace catdetail

// ---------------------------------------------------------------------------
// solution families

struct FamilySpec {
  std::string name;
  std::string summary;
  int dim = 3;                    // base chart dimension
  bool reduced_solution = false;  // lift satisfies the conformal-flatness system
  std::vector<std::string> params;
  std::vector<double> defaults;
  std::function<KKAnsatz(std::span<const double>)> make;
  std::function<SampleBox(std::span<const double>)> box;
  // closed-form curvature scalar of the base chart; null when not recorded
  std::function<double(std::span<const double> pt, std::span<const double> par)> ricci;
  // closed-form value of the constant charge density; null when not applicable
  std::function<double(std::span<const double> par)> charge;
};

inline const std::vector<FamilySpec>& families();

inline const FamilySpec* find_family(std::string_view name) {
  for (const FamilySpec& f : families())
    if (f.name == name) return &f;
  return nullptr;
}

inline std::vector<double> family_params(const FamilySpec& spec,
                                         const std::map<std::string, double>& overrides) {
  return catdetail::merge_params(spec.params, spec.defaults, overrides,
                                 "family '" + spec.name + "'");
}

// ---------------------------------------------------------------------------
// radial profile: Q = -ln(c sqrt(x (1 - x))), K = e^{-Q} (A + B sqrt(1 - x))

struct RadialProfile {
  std::shared_ptr<ExprPool> pool;
  std::vector<double> values;
  ExprId prefactor = kNoExpr;  // Q(x)
  ExprId profile = kNoExpr;    // K(x)

  Jet3 jets(ExprId id, double x) const {
    Jet3 cv = Jet3::variable(x, 0, 1);
    return pool->eval<Jet3>(id, std::span<const Jet3>(&cv, 1), values, 1);
  }
};

inline RadialProfile radial_profile(double A, double B, double scale = 1.0) {
  RadialProfile p;
  p.pool = std::make_shared<ExprPool>();
  p.values = {A, B, scale};
  std::vector<std::string> coords{"x"};
  std::vector<std::string> params{"A", "B", "c"};
  p.prefactor = parse_expression(*p.pool, "-ln(c*sqrt(x*(1 - x)))", coords, params);
  p.profile = parse_expression(*p.pool, "c*sqrt(x*(1 - x))*(A + B*sqrt(1 - x))", coords, params);
  return p;
}

// curvature scalar of the null chart e^Q (2 du dx + K du^2), written through
// the induced kinetic function and potential
inline double profile_curvature(const RadialProfile& p, double x) {
  Jet3 jq = p.jets(p.prefactor, x);
  Jet3 jk = p.jets(p.profile, x);
  double u = -jq.g[0], up = -jq.hess(0, 0);
  double emq = std::exp(-jq.v);
  double v = emq * jk.g[0];
  double vp = u * v + emq * jk.hess(0, 0);
  return vp - 2.0 * u * v - up * emq * jk.v;
}

inline const std::vector<FamilySpec>& families() {
  static const std::vector<FamilySpec> table = [] {
    using catdetail::require_count;
    std::vector<FamilySpec> fams;

    {
      FamilySpec f;
      f.name = "flat";
      f.summary = "flat chart with a vanishing gauge field";
      f.dim = 3;
      f.reduced_solution = true;
      f.make = [](std::span<const double> par) {
        require_count(par, 0, "flat");
        MetricField base = MetricField::diagonal({"t", "x", "y"}, {}, {}, {"1", "-1", "-1"},
                                                 {1, -1, -1});
        return KKAnsatz(std::move(base), {"0", "0", "0"});
      };
      f.box = [](std::span<const double>) {
        return SampleBox{{{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}, {}};
      };
      f.ricci = [](std::span<const double>, std::span<const double>) { return 0.0; };
      f.charge = [](std::span<const double>) { return 0.0; };
      fams.push_back(std::move(f));
    }

    {
      // constant-curvature chart; s = +1 bends the static potential up,
      // s = -1 down, and the curvature scalar is 6 s l^2
      FamilySpec f;
      f.name = "max_sym_3d";
      f.summary = "maximally symmetric chart, curvature sign set by s";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"l", "s"};
      f.defaults = {0.5, 1.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 2, "max_sym_3d");
        MetricField base = MetricField::diagonal(
            {"t", "rho", "theta"}, {"l", "s"}, {par[0], par[1]},
            {"1 + s*l^2*rho^2", "-1/(1 + s*l^2*rho^2)", "-rho^2"}, {1, -1, -1});
        return KKAnsatz(std::move(base), {"0", "0", "0"});
      };
      f.box = [](std::span<const double> par) {
        double l = par[0], s = par[1];
        SampleBox b;
        b.ranges = {{0.0, 1.0}, {0.2, 1.2}, {0.0, 1.5}};
        b.accept = [l, s](std::span<const double> p) {
          return 1.0 + s * l * l * p[1] * p[1] > 0.05;
        };
        return b;
      };
      f.ricci = [](std::span<const double>, std::span<const double> par) {
        return 6.0 * par[1] * par[0] * par[0];
      };
      f.charge = [](std::span<const double> par) { return -6.0 * par[1] * par[0] * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      // uniform charge density; the gauge field winds the fiber over the
      // radial direction and the dual vector is l times the rotation orbit
      FamilySpec f;
      f.name = "const_phi";
      f.summary = "homogeneous background with a uniform charge density";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"l"};
      f.defaults = {0.5};
      f.make = [](std::span<const double> par) {
        require_count(par, 1, "const_phi");
        MetricField base = MetricField::diagonal(
            {"t", "rho", "theta"}, {"l"}, {par[0]},
            {"1 + l^2*rho^2", "-1/(1 + l^2*rho^2)", "-1"}, {1, -1, -1});
        return KKAnsatz(std::move(base), {"-l*rho", "0", "0"});
      };
      f.box = [](std::span<const double>) {
        return SampleBox{{{0.0, 1.0}, {-1.2, 1.2}, {0.0, 1.5}}, {}};
      };
      f.ricci = [](std::span<const double>, std::span<const double> par) {
        return 2.0 * par[0] * par[0];
      };
      f.charge = [](std::span<const double> par) { return 3.0 * par[0] * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      FamilySpec f;
      f.name = "sol1_static";
      f.summary = "static chart of the bounded-potential family";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"A", "B", "a"};
      f.defaults = {1.0, 0.5, 4.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 3, "sol1_static");
        if (par[2] <= 0.0) throw std::invalid_argument("sol1_static needs a > 0");
        MetricField base = MetricField::diagonal(
            {"t", "rho", "theta"}, {"A", "B", "a"}, {par[0], par[1], par[2]},
            {"A + B*sqrt(1 - rho^2/a)",
             "-(4/a)/((1 - rho^2/a)*(A + B*sqrt(1 - rho^2/a)))", "-rho^2"},
            {1, -1, -1});
        return KKAnsatz(std::move(base), {"0", "0", "-sqrt(a - rho^2)"});
      };
      f.box = [](std::span<const double> par) {
        double A = par[0], B = par[1], a = par[2];
        double sa = std::sqrt(a);
        SampleBox b;
        b.ranges = {{0.0, 1.0}, {0.15 * sa, 0.9 * sa}, {0.0, 1.5}};
        b.accept = [A, B, a](std::span<const double> p) {
          double w = 1.0 - p[1] * p[1] / a;
          return w > 0.02 && std::abs(A + B * std::sqrt(w)) > 0.05;
        };
        return b;
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        double w = std::sqrt(1.0 - pt[1] * pt[1] / par[2]);
        return -1.25 * par[1] * w - 0.5 * par[0];
      };
      f.charge = [](std::span<const double> par) { return -0.75 * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      FamilySpec f;
      f.name = "sol1_ef";
      f.summary = "null chart of the bounded-potential family";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"A", "B", "a"};
      f.defaults = {1.0, 0.5, 4.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 3, "sol1_ef");
        if (par[2] <= 0.0) throw std::invalid_argument("sol1_ef needs a > 0");
        MetricField base = MetricField::from_upper(
            {"u", "Phi", "theta"}, {"A", "B", "a"}, {par[0], par[1], par[2]},
            {"A + B*cos(Phi/2)", "1", "0", "0", "0", "-a*sin(Phi/2)^2"}, {1, -1, -1});
        return KKAnsatz(std::move(base), {"0", "0", "-sqrt(a)*cos(Phi/2)"});
      };
      f.box = [](std::span<const double>) {
        return SampleBox{
            {{0.0, 1.0}, {0.1, std::numbers::pi - 0.1}, {0.0, 1.5}}, {}};
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        return -1.25 * par[1] * std::cos(pt[1] / 2.0) - 0.5 * par[0];
      };
      f.charge = [](std::span<const double> par) { return -0.75 * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      FamilySpec f;
      f.name = "sol1_dual_ef";
      f.summary = "null chart of the bounded-potential family, hyperbolic picture";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"A", "B", "a"};
      f.defaults = {1.0, 0.5, 4.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 3, "sol1_dual_ef");
        if (par[2] <= 0.0) throw std::invalid_argument("sol1_dual_ef needs a > 0");
        MetricField base = MetricField::from_upper(
            {"u", "Phi", "theta"}, {"A", "B", "a"}, {par[0], par[1], par[2]},
            {"(B + A*cosh(Phi/2))/cosh(Phi/2)", "1/cosh(Phi/2)", "0", "0", "0",
             "-a*tanh(Phi/2)^2"},
            {1, -1, -1});
        return KKAnsatz(std::move(base), {"0", "0", "-sqrt(a)/cosh(Phi/2)"});
      };
      f.box = [](std::span<const double>) {
        return SampleBox{{{0.0, 1.0}, {0.2, 3.0}, {0.0, 1.5}}, {}};
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        return -1.25 * par[1] / std::cosh(pt[1] / 2.0) - 0.5 * par[0];
      };
      f.charge = [](std::span<const double> par) { return -0.75 * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      FamilySpec f;
      f.name = "sol2_static";
      f.summary = "static chart of the quartic-potential family";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"A", "B"};
      f.defaults = {0.3, 1.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 2, "sol2_static");
        MetricField base = MetricField::diagonal(
            {"t", "rho", "theta"}, {"A", "B"}, {par[0], par[1]},
            {"0.25*rho^4 + A*rho^2 + B", "-1/(0.25*rho^4 + A*rho^2 + B)", "-rho^2"},
            {1, -1, -1});
        return KKAnsatz(std::move(base), {"-rho^2/2", "0", "0"});
      };
      f.box = [](std::span<const double> par) {
        double A = par[0], B = par[1];
        SampleBox b;
        b.ranges = {{0.0, 1.0}, {0.3, 1.5}, {0.0, 1.5}};
        b.accept = [A, B](std::span<const double> p) {
          double r2 = p[1] * p[1];
          return std::abs(0.25 * r2 * r2 + A * r2 + B) > 0.05;
        };
        return b;
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        return 5.0 * pt[1] * pt[1] + 6.0 * par[0];
      };
      f.charge = [](std::span<const double> par) { return -6.0 * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      FamilySpec f;
      f.name = "sol2_ef";
      f.summary = "null chart of the quartic-potential family";
      f.dim = 3;
      f.reduced_solution = true;
      f.params = {"A", "B"};
      f.defaults = {0.3, 1.0};
      f.make = [](std::span<const double> par) {
        require_count(par, 2, "sol2_ef");
        MetricField base = MetricField::from_upper(
            {"u", "X", "theta"}, {"A", "B"}, {par[0], par[1]},
            {"0.25*X^4 + A*X^2 + B", "1", "0", "0", "0", "-X^2"}, {1, -1, -1});
        return KKAnsatz(std::move(base), {"-X^2/2", "0", "0"});
      };
      f.box = [](std::span<const double> par) {
        double A = par[0], B = par[1];
        SampleBox b;
        b.ranges = {{0.0, 1.0}, {-3.0, 3.0}, {0.0, 1.5}};
        b.accept = [A, B](std::span<const double> p) {
          double x2 = p[1] * p[1];
          return std::abs(p[1]) > 0.1 && std::abs(0.25 * x2 * x2 + A * x2 + B) > 0.05;
        };
        return b;
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        return 5.0 * pt[1] * pt[1] + 6.0 * par[0];
      };
      f.charge = [](std::span<const double> par) { return -6.0 * par[0]; };
      fams.push_back(std::move(f));
    }

    {
      // two-dimensional null chart built from the closed-form radial
      // profile; the cross term is the exponential prefactor and the uu
      // component absorbs it against the profile
      FamilySpec f;
      f.name = "dilaton_2d";
      f.summary = "two-dimensional chart of the radial profile";
      f.dim = 2;
      f.reduced_solution = false;
      f.params = {"A", "B"};
      f.defaults = {1.0, 0.5};
      f.make = [](std::span<const double> par) {
        require_count(par, 2, "dilaton_2d");
        MetricField base = MetricField::from_upper(
            {"u", "x"}, {"A", "B"}, {par[0], par[1]},
            {"A + B*sqrt(1 - x)", "1/sqrt(x*(1 - x))", "0"}, {1, -1});
        return KKAnsatz(std::move(base), {"0", "0"});
      };
      f.box = [](std::span<const double>) {
        return SampleBox{{{0.0, 1.0}, {0.05, 0.95}}, {}};
      };
      f.ricci = [](std::span<const double> pt, std::span<const double> par) {
        return profile_curvature(radial_profile(par[0], par[1]), pt[1]);
      };
      fams.push_back(std::move(f));
    }

    return fams;
  }();
  return table;
}

// ---------------------------------------------------------------------------
// one-variable expression helper

class ScalarCurve {
 public:
  ScalarCurve(const std::string& var, std::vector<std::string> params,
              std::vector<double> values, const std::string& text)
      : params_(std::move(params)),
        values_(std::move(values)),
        pool_(std::make_shared<ExprPool>()) {
    std::vector<std::string> coords{var};
    id_ = parse_expression(*pool_, text, coords, params_);
  }

  double value(double x) const {
    return pool_->eval<double>(id_, std::span<const double>(&x, 1), values_, 1);
  }

  // value and first three derivatives at x
  Jet3 jets(double x) const {
    Jet3 cv = Jet3::variable(x, 0, 1);
    return pool_->eval<Jet3>(id_, std::span<const Jet3>(&cv, 1), values_, 1);
  }

 private:
  std::vector<std::string> params_;
  std::vector<double> values_;
  std::shared_ptr<ExprPool> pool_;
  ExprId id_ = kNoExpr;
};

// ---------------------------------------------------------------------------
// generator models

struct GeneratorModel {
  std::string name;
  std::string summary;
  std::vector<std::string> params;
  std::vector<double> defaults;
  std::string kinetic;    // U(X)
  std::string potential;  // V(X)
  std::string prefactor;  // closed-form Q(X)
  std::string profile;    // closed-form K(X)
  double anchor = 0.0;    // Q(anchor) = 0; base point for quadrature
  std::pair<double, double> window{0.5, 1.5};  // well-behaved X range
  std::string companion;  // family whose null chart carries e^Q and K
  std::function<std::vector<double>(std::span<const double>)> companion_params;
};

inline const std::vector<GeneratorModel>& generator_models() {
  static const std::vector<GeneratorModel> table = [] {
    std::vector<GeneratorModel> models;

    {
      GeneratorModel m;
      m.name = "trig";
      m.summary = "vanishing kinetic function, sine potential";
      m.params = {"A", "B"};
      m.defaults = {1.0, 0.5};
      m.kinetic = "0";
      m.potential = "-(B/2)*sin(X/2)";
      m.prefactor = "0";
      m.profile = "A + B*cos(X/2)";
      m.anchor = 0.0;
      m.window = {0.3, 2.8};
      m.companion = "sol1_ef";
      m.companion_params = [](std::span<const double> par) {
        return std::vector<double>{par[0], par[1], 4.0};
      };
      models.push_back(std::move(m));
    }

    {
      GeneratorModel m;
      m.name = "trig_dual";
      m.summary = "hyperbolic kinetic function, sinh potential";
      m.params = {"A", "B"};
      m.defaults = {1.0, 0.5};
      m.kinetic = "tanh(X/2)/2";
      m.potential = "(A/4)*sinh(X)";
      m.prefactor = "-ln(cosh(X/2))";
      m.profile = "B + A*cosh(X/2)";
      m.anchor = 0.0;
      m.window = {0.2, 3.0};
      m.companion = "sol1_dual_ef";
      m.companion_params = [](std::span<const double> par) {
        return std::vector<double>{par[0], par[1], 4.0};
      };
      models.push_back(std::move(m));
    }

    {
      GeneratorModel m;
      m.name = "quartic";
      m.summary = "vanishing kinetic function, cubic potential";
      m.params = {"Y", "M"};
      m.defaults = {-0.6, -0.5};
      m.kinetic = "0";
      m.potential = "X^3 - Y*X";
      m.prefactor = "0";
      m.profile = "0.25*X^4 - 0.5*Y*X^2 - 2*M";
      m.anchor = 0.0;
      m.window = {0.4, 2.2};
      m.companion = "sol2_ef";
      m.companion_params = [](std::span<const double> par) {
        return std::vector<double>{-0.5 * par[0], -2.0 * par[1]};
      };
      models.push_back(std::move(m));
    }

    {
      GeneratorModel m;
      m.name = "quartic_dual";
      m.summary = "inverse-scalar kinetic function, inverted quartic profile";
      m.params = {"Y", "M"};
      m.defaults = {-0.6, -0.5};
      m.kinetic = "2/X";
      m.potential = "-1/(2*X) - 4*M*X^3";
      m.prefactor = "-ln(X^2)";
      m.profile = "0.25/X^2 - 2*M*X^2 - 0.5*Y";
      m.anchor = 1.0;
      m.window = {0.4, 2.2};
      models.push_back(std::move(m));
    }

    return models;
  }();
  return table;
}

inline const GeneratorModel* find_model(std::string_view name) {
  for (const GeneratorModel& m : generator_models())
    if (m.name == name) return &m;
  return nullptr;
}

inline std::vector<double> model_params(const GeneratorModel& m,
                                        const std::map<std::string, double>& overrides) {
  return catdetail::merge_params(m.params, m.defaults, overrides, "model '" + m.name + "'");
}

struct ModelCurves {
  ScalarCurve kinetic, potential, prefactor, profile;
};

inline ModelCurves model_curves(const GeneratorModel& m, std::span<const double> par) {
  catdetail::require_count(par, m.params.size(), m.name.c_str());
  std::vector<double> values(par.begin(), par.end());
  return ModelCurves{ScalarCurve("X", m.params, values, m.kinetic),
                     ScalarCurve("X", m.params, values, m.potential),
                     ScalarCurve("X", m.params, values, m.prefactor),
                     ScalarCurve("X", m.params, values, m.profile)};
}

// ---------------------------------------------------------------------------
// generator checks

struct GeneratorResiduals {
  double prefactor_ode = 0.0;   // Q' + U
  double profile_ode = 0.0;     // K' - e^Q V
  double prefactor_quad = 0.0;  // Q against the quadrature of -U
  double profile_quad = 0.0;    // K against the anchored quadrature of e^Q V
};

inline GeneratorResiduals generator_residuals(const GeneratorModel& m,
                                              std::span<const double> par, int n_points = 9) {
  ModelCurves c = model_curves(m, par);
  GeneratorResiduals out;
  double k0 = c.profile.value(m.anchor);
  for (int i = 0; i < n_points; ++i) {
    double x = m.window.first +
               (m.window.second - m.window.first) * (i + 0.5) / n_points;
    Jet3 jq = c.prefactor.jets(x);
    Jet3 jk = c.profile.jets(x);
    double u = c.kinetic.value(x);
    double v = c.potential.value(x);
    out.prefactor_ode = std::max(out.prefactor_ode, std::abs(jq.g[0] + u));
    out.profile_ode = std::max(out.profile_ode, std::abs(jk.g[0] - std::exp(jq.v) * v));
    double iu = integrate([&](double t) { return c.kinetic.value(t); }, m.anchor, x, 1e-12);
    out.prefactor_quad = std::max(out.prefactor_quad, std::abs(jq.v + iu));
    double ik = integrate(
        [&](double t) { return std::exp(c.prefactor.value(t)) * c.potential.value(t); },
        m.anchor, x, 1e-12);
    out.profile_quad = std::max(out.profile_quad, std::abs(jk.v - k0 - ik));
  }
  return out;
}

// largest gap between the generated chart data and the companion family's
// null chart, sampled across the model window
inline double chart_reproduction_residual(const GeneratorModel& m, std::span<const double> par,
                                          int n_points = 9) {
  if (m.companion.empty()) throw std::logic_error("model '" + m.name + "' has no companion chart");
  const FamilySpec* fam = find_family(m.companion);
  if (!fam) throw std::logic_error("companion family '" + m.companion + "' is not in the catalog");
  std::vector<double> fpar = m.companion_params(par);
  MetricField base = fam->make(fpar).base();
  ModelCurves c = model_curves(m, par);
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    double x = m.window.first +
               (m.window.second - m.window.first) * (i + 0.5) / n_points;
    std::array<double, 3> pt{0.3, x, 0.7};
    double eq = std::exp(c.prefactor.value(x));
    double k = c.profile.value(x);
    worst = std::max(worst, std::abs(base.eval_value(0, 0, pt) - eq * k));
    worst = std::max(worst, std::abs(base.eval_value(0, 1, pt) - eq));
    worst = std::max(worst, std::abs(base.eval_value(1, 1, pt)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// chart maps

struct ChartMap {
  int slot = 0;  // coordinate the map acts on
  std::function<std::array<double, 2>(double)> forward;  // value and derivative
};

// between the two null charts of the bounded-potential family
inline ChartMap trig_chart_map() {
  ChartMap m;
  m.slot = 1;
  m.forward = [](double phi) {
    double s = std::sin(phi / 2.0);
    return std::array<double, 2>{2.0 * std::atanh(s), 1.0 / std::cos(phi / 2.0)};
  };
  return m;
}

// between the two null charts of the quartic-potential family
inline ChartMap inversion_chart_map() {
  ChartMap m;
  m.slot = 1;
  m.forward = [](double x) { return std::array<double, 2>{-1.0 / x, 1.0 / (x * x)}; };
  return m;
}

// largest component gap between src and the pullback of dst under a map of a
// single coordinate; valid when the mapped coordinate only feeds itself
inline double pullback_residual(const MetricField& src, const MetricField& dst,
                                const ChartMap& map, std::span<const std::vector<double>> pts) {
  if (src.dim() != dst.dim()) throw std::invalid_argument("chart dimensions differ");
  const int n = src.dim();
  double worst = 0.0;
  for (const std::vector<double>& p : pts) {
    std::vector<double> q = p;
    auto [val, der] = map.forward(p[static_cast<std::size_t>(map.slot)]);
    q[static_cast<std::size_t>(map.slot)] = val;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double ji = (i == map.slot) ? der : 1.0;
        double jj = (j == map.slot) ? der : 1.0;
        worst = std::max(worst,
                         std::abs(src.eval_value(i, j, p) - ji * jj * dst.eval_value(i, j, q)));
      }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// model charts

inline MetricField model_chart_2d(const GeneratorModel& m, std::span<const double> par) {
  catdetail::require_count(par, m.params.size(), m.name.c_str());
  std::string eq = "exp(" + m.prefactor + ")";
  std::string guu = eq + " * (" + m.profile + ")";
  return MetricField::from_upper({"u", "X"}, m.params,
                                 std::vector<double>(par.begin(), par.end()),
                                 {guu, eq, "0"}, {1, -1});
}

inline MetricField model_chart_3d(const GeneratorModel& m, std::span<const double> par,
                                  double alpha) {
  catdetail::require_count(par, m.params.size(), m.name.c_str());
  std::string gtt;
  if (alpha == 0.5)
    gtt = "-X";
  else if (alpha == 1.0)
    gtt = "-X^2";
  else
    throw std::invalid_argument("circle exponent must be 1/2 or 1");
  std::string eq = "exp(" + m.prefactor + ")";
  std::string guu = eq + " * (" + m.profile + ")";
  return MetricField::from_upper({"u", "X", "theta"}, m.params,
                                 std::vector<double>(par.begin(), par.end()),
                                 {guu, eq, "0", "0", "0", gtt}, {1, -1, -1});
}

// ---------------------------------------------------------------------------
// closed curvature tables for the model charts

struct ChartTableResiduals {
  double scalar_2d = 0.0;  // curvature of the 2d chart against the potential form
  double laplace = 0.0;    // wave operator on the scalar against -V
  double gradient = 0.0;   // squared gradient of the scalar against -e^{-Q} K
  double ricci_3d = 0.0;   // traceless Ricci of the 3d chart against the closed table
  double stress_3d = 0.0;  // unit-orbit quadratic tables, both orbit choices
  double scale = 1.0;
};

inline ChartTableResiduals chart_table_residuals(const GeneratorModel& m,
                                                 std::span<const double> par, double alpha,
                                                 std::span<const std::vector<double>> pts,
                                                 Backend backend = Backend::Jets) {
  ModelCurves curves = model_curves(m, par);
  MetricField chart2 = model_chart_2d(m, par);
  MetricField chart3 = model_chart_3d(m, par, alpha);
  ChartTableResiduals out;
  auto bump = [](double& slot, double v) { slot = std::max(slot, std::abs(v)); };

  for (const std::vector<double>& p : pts) {
    double x = p[1];
    Jet3 jq = curves.prefactor.jets(x);
    Jet3 jk = curves.profile.jets(x);
    double q = jq.v, qp = jq.g[0], qpp = jq.hess(0, 0);
    double k = jk.v, kp = jk.g[0], kpp = jk.hess(0, 0);
    double u = -qp, up = -qpp;
    double v = std::exp(-q) * kp;
    double vp = u * v + std::exp(-q) * kpp;

    // two-dimensional chart: scalar curvature and the scalar-field identities
    std::array<double, 2> p2{p[0], x};
    CurvatureJets c2 = curvature_jets(chart2, p2, backend);
    bump(out.scalar_2d, c2.scalar.v - (vp - 2.0 * u * v - up * std::exp(-q) * k));
    Jet2 phi = Jet2::variable(x, 1, 2);
    Tensor<double, 2> hess = cov_hessian(c2, phi);
    double box = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) box += c2.ginv0(i, j) * hess(i, j);
    bump(out.laplace, box + v);
    bump(out.gradient, c2.ginv0(1, 1) + std::exp(-q) * k);
    bump(out.scale, c2.scalar.v);

    // three-dimensional chart: traceless Ricci against the closed table
    CurvatureBundle b3 = curvature_at(chart3, p, backend);
    double x2a = std::pow(x, 2.0 * alpha);
    double ruX = (vp * std::exp(q) - v * std::exp(q) * (alpha / x + 2.0 * u) +
                  k * (4.0 * alpha * (1.0 - alpha) / (x * x) - up - 3.0 * alpha * u / x)) /
                 6.0;
    double ruu = k * ruX;
    double rXX = (alpha / (x * x)) * (1.0 - alpha - x * u);
    double rtt = (x2a / 3.0) * vp - (x2a / (3.0 * x)) * v * (alpha + 2.0 * x * u) +
                 (x2a / (3.0 * x * x)) * std::exp(-q) * k * (alpha * (1.0 - alpha) - x * x * up);
    Tensor<double, 2> table(3, 0.0);
    table(0, 0) = ruu;
    table(0, 1) = table(1, 0) = ruX;
    table(1, 1) = rXX;
    table(2, 2) = rtt;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double tl = b3.ricci_dd(i, j) - b3.g(i, j) * b3.ricci_scalar / 3.0;
        bump(out.ricci_3d, tl - table(i, j));
        bump(out.scale, tl);
      }

    // quadratic orbit tables for the two unit orbit vectors
    for (int orbit : {0, 2}) {
      std::array<double, 3> fd{};
      for (int i = 0; i < 3; ++i) fd[static_cast<std::size_t>(i)] = b3.g(i, orbit);
      double fsq = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          fsq += b3.inverse_metric(i, j) * fd[static_cast<std::size_t>(i)] *
                 fd[static_cast<std::size_t>(j)];
      Tensor<double, 2> expect(3, 0.0);
      if (orbit == 0) {
        expect(0, 0) = (2.0 / 3.0) * k * k * std::exp(2.0 * q);
        expect(0, 1) = expect(1, 0) = (2.0 / 3.0) * k * std::exp(2.0 * q);
        expect(1, 1) = std::exp(2.0 * q);
        expect(2, 2) = (x2a / 3.0) * std::exp(q) * k;
      } else {
        expect(0, 0) = (1.0 / 3.0) * k * std::exp(q) * x2a;
        expect(0, 1) = expect(1, 0) = (1.0 / 3.0) * std::exp(q) * x2a;
        expect(2, 2) = (2.0 / 3.0) * x2a * x2a;
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double direct = fd[static_cast<std::size_t>(i)] * fd[static_cast<std::size_t>(j)] -
                          b3.g(i, j) * fsq / 3.0;
          bump(out.stress_3d, direct - expect(i, j));
          bump(out.scale, direct);
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// root finders

namespace catdetail {

// zeros of f on [lo, hi] by grid scan and bisection; poles are discarded by
// checking the function value at the candidate
inline std::vector<double> root_scan(const std::function<double(double)>& f, double lo, double hi,
                                     int cells) {
  if (cells < 1 || hi <= lo) throw std::invalid_argument("bad root scan range");
  std::vector<double> roots;
  auto push = [&](double r) {
    if (!roots.empty() && std::abs(r - roots.back()) < 1e-9) return;
    roots.push_back(r);
  };
  double h = (hi - lo) / cells;
  double fa = f(lo);
  if (fa == 0.0) push(lo);
  double a = lo;
  for (int i = 1; i <= cells; ++i) {
    double b = lo + i * h;
    double fb = f(b);
    if (fb == 0.0) {
      push(b);
    } else if (std::isfinite(fa) && std::isfinite(fb) && fa != 0.0 && fa * fb < 0.0) {
      double xa = a, xb = b, va = fa;
      for (int it = 0; it < 200 && xb - xa > 1e-13 * (1.0 + std::abs(xa) + std::abs(xb)); ++it) {
        double mid = 0.5 * (xa + xb);
        double vm = f(mid);
        if (vm == 0.0) {
          xa = xb = mid;
          break;
        }
        if (va * vm < 0.0)
          xb = mid;
        else {
          xa = mid;
          va = vm;
        }
      }
      double r = 0.5 * (xa + xb);
      if (std::abs(f(r)) < 1e-6) push(r);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace catdetail

struct ConstantVacuum {
  double location = 0.0;   // zero of the potential
  double curvature = 0.0;  // slope of the potential there
};

// constant-scalar points; only meaningful when the kinetic function vanishes
inline std::vector<ConstantVacuum> constant_vacua(const GeneratorModel& m,
                                                  std::span<const double> par, double lo = -6.0,
                                                  double hi = 6.0, int cells = 4096) {
  ModelCurves c = model_curves(m, par);
  for (int i = 0; i < 7; ++i) {
    double x = lo + (hi - lo) * (i + 0.37) / 7.0;
    double u = c.kinetic.value(x);
    if (!(std::abs(u) <= 1e-12))
      throw std::logic_error("constant vacua need a vanishing kinetic function");
  }
  std::vector<double> roots =
      catdetail::root_scan([&](double x) { return c.potential.value(x); }, lo, hi, cells);
  std::vector<ConstantVacuum> out;
  out.reserve(roots.size());
  for (double r : roots) out.push_back({r, c.potential.jets(r).g[0]});
  return out;
}

// zeros of the profile K
inline std::vector<double> horizon_roots(const GeneratorModel& m, std::span<const double> par,
                                         double lo = -10.0, double hi = 10.0, int cells = 10000) {
  ModelCurves c = model_curves(m, par);
  return catdetail::root_scan([&](double x) { return c.profile.value(x); }, lo, hi, cells);
}

// ---------------------------------------------------------------------------
// master equations of the radial profile

// first-order master constraint: b^2 e^{2Q} = 1/(4 x^2) + Q'/(2 x), where b
// is the charge normalisation carried by the profile
inline double profile_constraint_residual(const RadialProfile& p, double charge_norm,
                                          std::span<const double> xs) {
  double worst = 0.0;
  for (double x : xs) {
    Jet3 jq = p.jets(p.prefactor, x);
    double lhs = charge_norm * charge_norm * std::exp(2.0 * jq.v);
    double rhs = 1.0 / (4.0 * x * x) + jq.g[0] / (2.0 * x);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// second-order master equation: K'' + K'(Q' - 1/(2x)) + K(Q'' - Q'/(2x)) = 0
inline double profile_ode_residual(const RadialProfile& p, std::span<const double> xs) {
  double worst = 0.0;
  for (double x : xs) {
    Jet3 jq = p.jets(p.prefactor, x);
    Jet3 jk = p.jets(p.profile, x);
    double qp = jq.g[0], qpp = jq.hess(0, 0);
    double k = jk.v, kp = jk.g[0], kpp = jk.hess(0, 0);
    double res = kpp + kp * (qp - 1.0 / (2.0 * x)) + k * (qpp - qp / (2.0 * x));
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

// master system of the quartic family: constant prefactor and a sourced
// linear equation for the profile
struct SecondMasterResiduals {
  double prefactor_const = 0.0;   // Q' on the window
  double profile_equation = 0.0;  // K'' - K'(Q' + 1/X) - 2 e^Q X^2
};

inline SecondMasterResiduals second_master_residuals(const GeneratorModel& m,
                                                     std::span<const double> par,
                                                     std::span<const double> xs) {
  ModelCurves c = model_curves(m, par);
  SecondMasterResiduals out;
  for (double x : xs) {
    Jet3 jq = c.prefactor.jets(x);
    Jet3 jk = c.profile.jets(x);
    out.prefactor_const = std::max(out.prefactor_const, std::abs(jq.g[0]));
    double res = jk.hess(0, 0) - jk.g[0] * (jq.g[0] + 1.0 / x) -
                 2.0 * std::exp(jq.v) * x * x;
    out.profile_equation = std::max(out.profile_equation, std::abs(res));
  }
  return out;
}

}  // namespace confkk
