// confkk: batch front-end for the reduction library.
//
// Subcommands: verify (residual suite of a named solution), curvature
// (scalars at sample points, with closed-form columns when recorded),
// reduce (block-reduction deltas against the direct computation), scan
// (parameter grid over a generator model), catalog (machine-readable
// listing of families and models).
//
// Exit codes: 0 on success, 1 when a verification tolerance is exceeded,
// 2 on configuration or usage errors. All output is deterministic for a
// fixed (config, seed): CSV uses CRLF line ends and 17 significant digits,
// JSON is emitted with sorted keys.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "confkk/catalog.hpp"
#include "confkk/flatness.hpp"
#include "confkk/report.hpp"

namespace {

using nlohmann::json;

struct RunConfig {
  std::string command;
  std::string solution;
  std::map<std::string, double> params;
  int points = 20;
  std::uint64_t seed = 1;
  double tol = std::numeric_limits<double>::quiet_NaN();  // NaN = backend default
  std::string backend = "jets";
  std::string out;
  std::string format = "csv";
  int jobs = 1;
  std::string grid;
  double perturb = 0.0;
  std::vector<std::string> at;
};

[[noreturn]] void usage_error(const std::string& msg) { throw std::invalid_argument(msg); }

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t idx = 0;
    double v = std::stod(text, &idx);
    if (idx != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    usage_error("cannot parse " + what + " '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::pair<std::string, double> parse_assignment(const std::string& text) {
  std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) usage_error("expected name=value, got '" + text + "'");
  return {text.substr(0, eq), parse_number(text.substr(eq + 1), "value in '" + text + "'")};
}

// --config is applied before the regular flags so the flags can override it
void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream is(path);
  if (!is) usage_error("cannot read config file '" + path + "'");
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    usage_error("config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) usage_error("config file must hold a flat object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "command")
        cfg.command = value.get<std::string>();
      else if (key == "solution")
        cfg.solution = value.get<std::string>();
      else if (key == "params") {
        for (const auto& [p, v] : value.items()) cfg.params[p] = v.get<double>();
      } else if (key == "points")
        cfg.points = value.get<int>();
      else if (key == "seed")
        cfg.seed = value.get<std::uint64_t>();
      else if (key == "tol")
        cfg.tol = value.get<double>();
      else if (key == "backend")
        cfg.backend = value.get<std::string>();
      else if (key == "out")
        cfg.out = value.get<std::string>();
      else if (key == "format")
        cfg.format = value.get<std::string>();
      else if (key == "jobs")
        cfg.jobs = value.get<int>();
      else if (key == "grid")
        cfg.grid = value.get<std::string>();
      else if (key == "perturb")
        cfg.perturb = value.get<double>();
      else if (key == "at")
        cfg.at = value.get<std::vector<std::string>>();
      else
        usage_error("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    usage_error("config file '" + path + "': " + e.what());
  }
}

const confkk::FamilySpec& need_family(const RunConfig& cfg) {
  if (cfg.solution.empty()) usage_error("no --solution given");
  const confkk::FamilySpec* fam = confkk::find_family(cfg.solution);
  if (!fam) {
    std::string names;
    for (const confkk::FamilySpec& f : confkk::families()) {
      if (!names.empty()) names += ", ";
      names += f.name;
    }
    usage_error("unknown family '" + cfg.solution + "' (have: " + names + ")");
  }
  return *fam;
}

// optional additive bump on the leading metric component, cubic in the
// second coordinate so that no catalog family can absorb it
void apply_perturbation(confkk::KKAnsatz& k, double eps) {
  if (eps == 0.0) return;
  confkk::MetricField& base = k.base();
  confkk::ExprPool& pool = base.pool();
  confkk::ExprId c = pool.coord(1);
  confkk::ExprId bump = pool.mul(pool.num(eps), pool.mul(pool.mul(c, c), c));
  base.set_component(0, 0, pool.add(base.component(0, 0), bump));
}

void emit(const RunConfig& cfg, const std::string& payload) {
  if (cfg.out.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream os(cfg.out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file '" + cfg.out + "'");
  os << payload;
}

json run_info(const RunConfig& cfg, std::span<const std::string> names,
              std::span<const double> values, double tol) {
  json run;
  run["command"] = cfg.command;
  run["solution"] = cfg.solution;
  run["points"] = cfg.points;
  run["seed"] = cfg.seed;
  run["backend"] = cfg.backend;
  run["tolerance"] = tol;
  json pj = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) pj[names[i]] = values[i];
  run["params"] = pj;
  return run;
}

std::string describe(const std::string& name) {
  static const std::map<std::string, std::string> table = {
      {"riemann_blocks", "full Riemann tensor reassembled from base curvature and field strength"},
      {"ricci_blocks", "full Ricci blocks against the direct computation"},
      {"scalar_reduction", "curvature scalar against base scalar plus field-strength square"},
      {"weyl_blocks", "full conformal-tensor blocks reassembled from base data"},
      {"flatness_rank4", "rank-four obstruction built from base curvature and field strength"},
      {"flatness_rank2", "traceless second-rank obstruction"},
      {"flatness_rank3", "covariant-gradient condition on the field strength"},
      {"gradient_identities", "contracted gradient identities of the field strength"},
      {"charge_constancy", "spread of the charge density across sample points"},
      {"dual_vector_killing", "Killing equations of the dual vector and its derived rotation"},
      {"stress_balance", "traceless curvature balanced against the dual-vector stress"},
      {"field_equation", "curvature scalar against the dual-vector square and the charge"},
      {"lift_conformal_flatness", "vanishing conformal tensor of the lifted metric"},
      {"dual_scalar_wave", "wave equation of the dual scalar"},
      {"dual_scalar_hessian", "traceless second derivative of the dual scalar"},
  };
  auto it = table.find(name);
  return it == table.end() ? std::string("residual check") : it->second;
}

std::string reports_csv(const std::vector<confkk::ResidualReport>& reports) {
  std::ostringstream ss;
  confkk::write_reports_csv(ss, reports);
  return ss.str();
}

std::string reports_json(const std::vector<confkk::ResidualReport>& reports, json run) {
  json doc = confkk::report_document(reports, std::move(run));
  for (json& r : doc["reports"]) r["detail"] = describe(r["name"].get<std::string>());
  return doc.dump(2) + "\n";
}

std::vector<std::vector<double>> evaluation_points(const RunConfig& cfg,
                                                   const confkk::FamilySpec& fam,
                                                   std::span<const double> par) {
  if (cfg.at.empty()) return confkk::sample_points(fam.box(par), cfg.points, cfg.seed);
  std::vector<std::vector<double>> pts;
  for (const std::string& spec : cfg.at) {
    std::vector<double> p;
    for (const std::string& piece : split(spec, ','))
      p.push_back(parse_number(piece, "coordinate in --at"));
    if (static_cast<int>(p.size()) != fam.dim)
      usage_error("--at point '" + spec + "' has wrong dimension for " + fam.name);
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---------------------------------------------------------------------------

int cmd_verify(const RunConfig& cfg, confkk::Backend backend, double tol) {
  const confkk::FamilySpec& fam = need_family(cfg);
  if (!fam.reduced_solution)
    usage_error("family '" + fam.name + "' carries no solution suite; it is chart data only");
  std::vector<double> par = confkk::family_params(fam, cfg.params);
  confkk::KKAnsatz k = fam.make(par);
  apply_perturbation(k, cfg.perturb);
  confkk::VerifyOptions opt;
  opt.points = cfg.points;
  opt.seed = cfg.seed;
  opt.backend = backend;
  opt.tolerance = tol;
  confkk::SampleBox box = fam.box(par);
  std::vector<confkk::ResidualReport> reports = confkk::verify_identities(k, box, opt);
  std::vector<confkk::ResidualReport> sol = confkk::verify_solution(k, box, opt);
  reports.insert(reports.end(), sol.begin(), sol.end());
  emit(cfg, cfg.format == "json"
                ? reports_json(reports, run_info(cfg, fam.params, par, tol))
                : reports_csv(reports));
  return confkk::all_pass(reports) ? 0 : 1;
}

int cmd_curvature(const RunConfig& cfg, confkk::Backend backend, double tol) {
  const confkk::FamilySpec& fam = need_family(cfg);
  std::vector<double> par = confkk::family_params(fam, cfg.params);
  confkk::KKAnsatz k = fam.make(par);
  apply_perturbation(k, cfg.perturb);
  auto pts = evaluation_points(cfg, fam, par);
  const std::vector<std::string>& coords = k.base().coords();
  bool closed = static_cast<bool>(fam.ricci) && cfg.perturb == 0.0;
  bool pass = true;

  std::ostringstream csv;
  json rows = json::array();
  for (const std::string& c : coords) csv << c << ',';
  csv << "ricci_scalar,ricci_closed,closed_diff,cotton_max\r\n";
  for (const auto& p : pts) {
    confkk::CurvatureBundle b = confkk::curvature_at(k.base(), p, backend);
    double rc = closed ? fam.ricci(p, par) : 0.0;
    double diff = closed ? std::abs(b.ricci_scalar - rc) : 0.0;
    if (closed && diff > tol * (1.0 + std::abs(rc))) pass = false;
    double cotton = b.has_cotton ? confkk::max_abs(b.cotton) : 0.0;
    json row;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      csv << confkk::format_sig17(p[i]) << ',';
      row[coords[i]] = p[i];
    }
    csv << confkk::format_sig17(b.ricci_scalar) << ','
        << (closed ? confkk::format_sig17(rc) : "") << ','
        << (closed ? confkk::format_sig17(diff) : "") << ','
        << (b.has_cotton ? confkk::format_sig17(cotton) : "") << "\r\n";
    row["ricci_scalar"] = b.ricci_scalar;
    if (closed) {
      row["ricci_closed"] = rc;
      row["closed_diff"] = diff;
    }
    if (b.has_cotton) row["cotton_max"] = cotton;
    rows.push_back(std::move(row));
  }

  if (cfg.format == "json") {
    json doc;
    doc["schema"] = "confkk-curvature/1";
    doc["run"] = run_info(cfg, fam.params, par, tol);
    doc["rows"] = std::move(rows);
    doc["pass"] = pass;
    emit(cfg, doc.dump(2) + "\n");
  } else {
    emit(cfg, csv.str());
  }
  return pass ? 0 : 1;
}

int cmd_reduce(const RunConfig& cfg, confkk::Backend backend, double tol) {
  const confkk::FamilySpec& fam = need_family(cfg);
  std::vector<double> par = confkk::family_params(fam, cfg.params);
  confkk::KKAnsatz k = fam.make(par);
  apply_perturbation(k, cfg.perturb);
  auto pts = evaluation_points(cfg, fam, par);
  const std::vector<std::string>& coords = k.base().coords();
  bool has_weyl = k.full_dim() >= 4;
  bool pass = true;

  std::ostringstream csv;
  json rows = json::array();
  for (const std::string& c : coords) csv << c << ',';
  csv << "riemann_abs,riemann_rel,ricci_abs,ricci_rel,scalar_abs,scalar_rel,weyl_abs,weyl_rel\r\n";
  for (const auto& p : pts) {
    confkk::ReductionResiduals rr = confkk::compare_reduction(k, p, backend);
    double riem_rel = rr.riemann / (1.0 + rr.riemann_scale);
    double ricci_rel = rr.ricci / (1.0 + rr.ricci_scale);
    double scalar_rel = rr.scalar / (1.0 + rr.scalar_scale);
    double weyl_rel = has_weyl ? rr.weyl / (1.0 + rr.weyl_scale) : 0.0;
    if (riem_rel > tol || ricci_rel > tol || scalar_rel > tol || weyl_rel > tol) pass = false;
    json row;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      csv << confkk::format_sig17(p[i]) << ',';
      row[coords[i]] = p[i];
    }
    csv << confkk::format_sig17(rr.riemann) << ',' << confkk::format_sig17(riem_rel) << ','
        << confkk::format_sig17(rr.ricci) << ',' << confkk::format_sig17(ricci_rel) << ','
        << confkk::format_sig17(rr.scalar) << ',' << confkk::format_sig17(scalar_rel) << ','
        << (has_weyl ? confkk::format_sig17(rr.weyl) : "") << ','
        << (has_weyl ? confkk::format_sig17(weyl_rel) : "") << "\r\n";
    row["riemann_abs"] = rr.riemann;
    row["riemann_rel"] = riem_rel;
    row["ricci_abs"] = rr.ricci;
    row["ricci_rel"] = ricci_rel;
    row["scalar_abs"] = rr.scalar;
    row["scalar_rel"] = scalar_rel;
    if (has_weyl) {
      row["weyl_abs"] = rr.weyl;
      row["weyl_rel"] = weyl_rel;
    }
    rows.push_back(std::move(row));
  }

  if (cfg.format == "json") {
    json doc;
    doc["schema"] = "confkk-reduce/1";
    doc["run"] = run_info(cfg, fam.params, par, tol);
    doc["rows"] = std::move(rows);
    doc["pass"] = pass;
    emit(cfg, doc.dump(2) + "\n");
  } else {
    emit(cfg, csv.str());
  }
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// scan

struct GridAxis {
  std::size_t slot = 0;
  std::vector<double> values;
};

std::vector<GridAxis> parse_grid(const std::string& text, const std::vector<std::string>& names) {
  std::vector<GridAxis> axes;
  if (text.empty()) return axes;
  for (const std::string& entry : split(text, ',')) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) usage_error("bad grid entry '" + entry + "'");
    std::string name = entry.substr(0, eq);
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) usage_error("grid parameter '" + name + "' is not a model parameter");
    std::vector<std::string> parts = split(entry.substr(eq + 1), ':');
    if (parts.size() != 3) usage_error("grid entry '" + entry + "' needs lo:hi:count");
    double lo = parse_number(parts[0], "grid bound");
    double hi = parse_number(parts[1], "grid bound");
    double cd = parse_number(parts[2], "grid count");
    int count = static_cast<int>(cd);
    if (count < 1 || cd != count) usage_error("grid count must be a positive integer");
    GridAxis axis;
    axis.slot = static_cast<std::size_t>(it - names.begin());
    if (count == 1) {
      axis.values.push_back(lo);
    } else {
      for (int i = 0; i < count; ++i) axis.values.push_back(lo + (hi - lo) * i / (count - 1));
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

struct ScanCell {
  std::vector<double> par;
  std::vector<double> horizons;
  std::optional<double> charge;
  std::optional<bool> verdict;
};

int cmd_scan(const RunConfig& cfg, confkk::Backend backend, double tol) {
  if (cfg.solution.empty()) usage_error("no --solution given");
  const confkk::GeneratorModel* model = confkk::find_model(cfg.solution);
  if (!model) {
    std::string names;
    for (const confkk::GeneratorModel& m : confkk::generator_models()) {
      if (!names.empty()) names += ", ";
      names += m.name;
    }
    usage_error("scan runs over a generator model (have: " + names + ")");
  }
  std::vector<double> base_par = confkk::model_params(*model, cfg.params);
  std::vector<GridAxis> axes = parse_grid(cfg.grid, model->params);

  std::size_t cells = 1;
  for (const GridAxis& a : axes) cells *= a.values.size();
  if (cells > 10000) usage_error("grid exceeds the 10000-cell bound");

  const confkk::FamilySpec* companion =
      model->companion.empty() ? nullptr : confkk::find_family(model->companion);
  int verify_points = std::min(cfg.points, 3);

  auto make_cell = [&](std::size_t index) {
    ScanCell cell;
    cell.par = base_par;
    std::size_t rest = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      std::size_t n = axes[a].values.size();
      cell.par[axes[a].slot] = axes[a].values[rest % n];
      rest /= n;
    }
    cell.horizons = confkk::horizon_roots(*model, cell.par);
    if (companion && model->companion_params) {
      std::vector<double> fpar = model->companion_params(cell.par);
      if (companion->charge) cell.charge = companion->charge(fpar);
      try {
        confkk::KKAnsatz k = companion->make(fpar);
        confkk::VerifyOptions opt;
        opt.points = verify_points;
        opt.seed = cfg.seed;
        opt.backend = backend;
        opt.tolerance = tol;
        cell.verdict = confkk::all_pass(confkk::verify_solution(k, companion->box(fpar), opt));
      } catch (const std::exception&) {
        cell.verdict = false;
      }
    }
    return cell;
  };

  // cells are independent; rows are assembled in grid order afterwards
  std::vector<ScanCell> grid(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells) break;
      grid[i] = make_cell(i);
    }
  };
  int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells)));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (cfg.format == "json") {
    json rows = json::array();
    for (const ScanCell& cell : grid) {
      json row;
      for (std::size_t i = 0; i < model->params.size(); ++i)
        row[model->params[i]] = cell.par[i];
      row["horizon_count"] = cell.horizons.size();
      row["horizons"] = cell.horizons;
      if (cell.charge) row["charge"] = *cell.charge;
      if (cell.verdict) row["verify_pass"] = *cell.verdict;
      rows.push_back(std::move(row));
    }
    json doc;
    doc["schema"] = "confkk-scan/1";
    doc["run"] = run_info(cfg, model->params, base_par, tol);
    doc["rows"] = std::move(rows);
    emit(cfg, doc.dump(2) + "\n");
  } else {
    std::ostringstream csv;
    for (const std::string& p : model->params) csv << p << ',';
    csv << "horizon_count,horizons,charge,verify_pass\r\n";
    for (const ScanCell& cell : grid) {
      for (std::size_t i = 0; i < model->params.size(); ++i)
        csv << confkk::format_sig17(cell.par[i]) << ',';
      std::string hs;
      for (std::size_t i = 0; i < cell.horizons.size(); ++i) {
        if (i) hs += ';';
        hs += confkk::format_sig17(cell.horizons[i]);
      }
      csv << cell.horizons.size() << ',' << confkk::csv_escape(hs) << ','
          << (cell.charge ? confkk::format_sig17(*cell.charge) : "") << ','
          << (cell.verdict ? (*cell.verdict ? "true" : "false") : "") << "\r\n";
    }
    emit(cfg, csv.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_catalog(const RunConfig& cfg) {
  if (cfg.format == "json") {
    json fams = json::array();
    for (const confkk::FamilySpec& f : confkk::families()) {
      json jf;
      jf["name"] = f.name;
      jf["summary"] = f.summary;
      jf["dim"] = f.dim;
      jf["reduced_solution"] = f.reduced_solution;
      json params = json::array();
      for (std::size_t i = 0; i < f.params.size(); ++i)
        params.push_back({{"name", f.params[i]}, {"default", f.defaults[i]}});
      jf["params"] = params;
      confkk::KKAnsatz k = f.make(f.defaults);
      const confkk::MetricField& b = k.base();
      jf["coords"] = b.coords();
      json metric = json::array();
      for (int i = 0; i < b.dim(); ++i)
        for (int j = i; j < b.dim(); ++j)
          metric.push_back({{"i", i},
                            {"j", j},
                            {"text", b.pool().print(b.component(i, j), b.coords(), b.params())}});
      jf["metric"] = metric;
      json gauge = json::array();
      for (int mu = 0; mu < b.dim(); ++mu)
        gauge.push_back(b.pool().print(k.gauge(mu), b.coords(), b.params()));
      jf["gauge"] = gauge;
      json box = json::array();
      for (const auto& [lo, hi] : f.box(f.defaults).ranges) box.push_back({lo, hi});
      jf["box"] = box;
      if (f.charge) jf["charge_default"] = f.charge(f.defaults);
      fams.push_back(std::move(jf));
    }
    json models = json::array();
    for (const confkk::GeneratorModel& m : confkk::generator_models()) {
      json jm;
      jm["name"] = m.name;
      jm["summary"] = m.summary;
      json params = json::array();
      for (std::size_t i = 0; i < m.params.size(); ++i)
        params.push_back({{"name", m.params[i]}, {"default", m.defaults[i]}});
      jm["params"] = params;
      jm["kinetic"] = m.kinetic;
      jm["potential"] = m.potential;
      jm["prefactor"] = m.prefactor;
      jm["profile"] = m.profile;
      jm["anchor"] = m.anchor;
      jm["window"] = {m.window.first, m.window.second};
      if (!m.companion.empty()) jm["companion"] = m.companion;
      models.push_back(std::move(jm));
    }
    json doc;
    doc["schema"] = "confkk-catalog/1";
    doc["families"] = std::move(fams);
    doc["models"] = std::move(models);
    emit(cfg, doc.dump(2) + "\n");
  } else {
    std::ostringstream csv;
    csv << "kind,name,dim,reduced_solution,params,defaults,summary\r\n";
    auto join_names = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += v[i];
      }
      return s;
    };
    auto join_values = [](const std::vector<double>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += confkk::format_sig17(v[i]);
      }
      return s;
    };
    for (const confkk::FamilySpec& f : confkk::families())
      csv << "family," << f.name << ',' << f.dim << ','
          << (f.reduced_solution ? "true" : "false") << ','
          << confkk::csv_escape(join_names(f.params)) << ','
          << confkk::csv_escape(join_values(f.defaults)) << ','
          << confkk::csv_escape(f.summary) << "\r\n";
    for (const confkk::GeneratorModel& m : confkk::generator_models())
      csv << "model," << m.name << ",," << ',' << confkk::csv_escape(join_names(m.params)) << ','
          << confkk::csv_escape(join_values(m.defaults)) << ',' << confkk::csv_escape(m.summary)
          << "\r\n";
    emit(cfg, csv.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  RunConfig cfg;

  // apply the config file first so flags can override it
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc)
      load_config_file(argv[i + 1], cfg);
    else if (arg.rfind("--config=", 0) == 0)
      load_config_file(arg.substr(9), cfg);
  }

  CLI::App app{"residual suites, curvature tables and parameter scans for the catalog"};
  std::string config_path;
  std::vector<std::string> cli_params, cli_at;
  app.add_option("command", cfg.command, "verify | curvature | reduce | scan | catalog");
  app.add_option("--config", config_path, "flat JSON config; flags override its values");
  app.add_option("--solution", cfg.solution, "family name (scan: generator model name)");
  app.add_option("--param", cli_params, "parameter override, name=value (repeatable)");
  app.add_option("--points", cfg.points, "sample point count");
  app.add_option("--seed", cfg.seed, "sampling seed");
  app.add_option("--tol", cfg.tol, "residual tolerance (default set by backend)");
  app.add_option("--backend", cfg.backend, "jets | fd");
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--format", cfg.format, "json | csv");
  app.add_option("--jobs", cfg.jobs, "worker threads for scan");
  app.add_option("--grid", cfg.grid, "scan grid, name=lo:hi:count[,name=...]");
  app.add_option("--perturb", cfg.perturb, "additive metric perturbation for sensitivity runs");
  app.add_option("--at", cli_at, "explicit evaluation point, comma-separated (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const std::string& entry : cli_params) {
    auto [name, value] = parse_assignment(entry);
    cfg.params[name] = value;
  }
  if (!cli_at.empty()) cfg.at = cli_at;

  if (cfg.command.empty()) usage_error("no command given (verify|curvature|reduce|scan|catalog)");
  if (cfg.points < 1) usage_error("points must be at least 1");
  if (cfg.jobs < 1) usage_error("jobs must be at least 1");
  if (cfg.format != "json" && cfg.format != "csv") usage_error("format must be json or csv");
  confkk::Backend backend = confkk::parse_backend(cfg.backend);
  double tol = std::isnan(cfg.tol) ? confkk::default_tolerance(backend) : cfg.tol;
  if (!(tol > 0.0)) usage_error("tolerance must be positive");

  if (cfg.command == "verify") return cmd_verify(cfg, backend, tol);
  if (cfg.command == "curvature") return cmd_curvature(cfg, backend, tol);
  if (cfg.command == "reduce") return cmd_reduce(cfg, backend, tol);
  if (cfg.command == "scan") return cmd_scan(cfg, backend, tol);
  if (cfg.command == "catalog") return cmd_catalog(cfg);
  usage_error("unknown command '" + cfg.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
