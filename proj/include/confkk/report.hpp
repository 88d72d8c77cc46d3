#pragma once

// Residual bookkeeping and serialization. A ResidualReport summarizes one
// named check over a batch of sample points; relative size is measured
// against the largest curvature component of the same rank seen in the
// inputs, shifted by one so that near-flat backgrounds stay meaningful.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace confkk {

struct ResidualReport {
  std::string name;
  int n_points = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;  // max_abs / (1 + scale)
  double tolerance = 0.0;
  bool pass = false;
};

class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(std::string name) : name_(std::move(name)) {}

  void add(double residual, double scale) {
    residual = std::abs(residual);
    max_abs_ = std::max(max_abs_, residual);
    scale_ = std::max(scale_, std::abs(scale));
    ++n_;
  }

  // several residuals measured at the same point count once
  void add_point(std::initializer_list<double> residuals, double scale) {
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, std::abs(r));
    add(worst, scale);
  }

  double max_abs() const { return max_abs_; }
  double scale() const { return scale_; }
  int points() const { return n_; }

  ResidualReport finish(double tolerance) const {
    ResidualReport r;
    r.name = name_;
    r.n_points = n_;
    r.max_abs = max_abs_;
    r.max_rel = max_abs_ / (1.0 + scale_);
    r.tolerance = tolerance;
    r.pass = r.max_rel <= tolerance;
    return r;
  }

 private:
  std::string name_;
  int n_ = 0;
  double max_abs_ = 0.0;
  double scale_ = 0.0;
};

inline bool all_pass(const std::vector<ResidualReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const ResidualReport& r) { return r.pass; });
}

// ---------------------------------------------------------------------------
// serialization

inline std::string format_sig17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_reports_csv(std::ostream& os, const std::vector<ResidualReport>& reports) {
  os << "name,n_points,max_abs,max_rel,tolerance,pass\r\n";
  for (const ResidualReport& r : reports)
    os << csv_escape(r.name) << ',' << r.n_points << ',' << format_sig17(r.max_abs) << ','
       << format_sig17(r.max_rel) << ',' << format_sig17(r.tolerance) << ','
       << (r.pass ? "true" : "false") << "\r\n";
}

inline nlohmann::json reports_to_json(const std::vector<ResidualReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ResidualReport& r : reports)
    arr.push_back({{"name", r.name},
                   {"n_points", r.n_points},
                   {"max_abs", r.max_abs},
                   {"max_rel", r.max_rel},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass}});
  return arr;
}

inline nlohmann::json report_document(const std::vector<ResidualReport>& reports,
                                      nlohmann::json run_info = {}) {
  nlohmann::json doc;
  doc["schema"] = "confkk-report/1";
  if (!run_info.is_null() && !run_info.empty()) doc["run"] = std::move(run_info);
  doc["reports"] = reports_to_json(reports);
  doc["pass"] = all_pass(reports);
  return doc;
}

}  // namespace confkk
