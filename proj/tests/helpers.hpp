#pragma once

// shared helpers for the test suites: deterministic random metrics and points

#include <cstdint>
#include <string>
#include <vector>

#include "confkk/metric.hpp"
#include "confkk/sampling.hpp"

namespace testutil {

inline std::vector<std::vector<double>> box_points(int dim, int count, std::uint64_t seed,
                                                   double lo = -0.45, double hi = 0.45) {
  confkk::SampleBox box;
  for (int i = 0; i < dim; ++i) box.ranges.push_back({lo, hi});
  return confkk::sample_points(box, count, seed);
}

// eta + small polynomial/trig perturbations; invertible on [-0.5, 0.5]^dim
inline confkk::MetricField random_metric(int dim, std::uint64_t seed, double amplitude = 0.12) {
  using confkk::ExprPool;
  std::vector<std::string> coords;
  for (int i = 0; i < dim; ++i) coords.push_back("x" + std::to_string(i));
  confkk::MetricField m(coords, {}, {});
  confkk::SplitMix64 rng(seed);
  ExprPool& pool = m.pool();
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double eta = (i == j) ? (i == 0 ? 1.0 : -1.0) : 0.0;
      int p = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
      int q = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
      int r = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
      double c1 = rng.uniform(-amplitude, amplitude);
      double c2 = rng.uniform(-amplitude, amplitude);
      double c3 = rng.uniform(-amplitude, amplitude);
      // quadratic + cubic + trig content so third derivatives are non-trivial
      confkk::ExprId e = pool.num(eta);
      e = pool.add(e, pool.mul(pool.num(c1), pool.mul(pool.coord(p), pool.coord(q))));
      e = pool.add(e, pool.mul(pool.num(c2), pool.mul(pool.coord(p), pool.mul(pool.coord(q), pool.coord(r)))));
      e = pool.add(e, pool.mul(pool.num(c3), pool.un(confkk::UnFn::Sin, pool.coord(r))));
      m.set_component(i, j, e);
    }
  return m;
}

// gauge one-form components over the coordinates used by random_metric
inline std::vector<std::string> random_gauge_texts(int dim, std::uint64_t seed,
                                                   double amplitude = 0.3) {
  confkk::SplitMix64 rng(seed);
  std::vector<std::string> out;
  for (int mu = 0; mu < dim; ++mu) {
    int p = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
    int q = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
    int r = static_cast<int>(rng.next() % static_cast<std::uint64_t>(dim));
    std::string c1 = confkk::ExprPool::format_double(rng.uniform(-amplitude, amplitude));
    std::string c2 = confkk::ExprPool::format_double(rng.uniform(-amplitude, amplitude));
    std::string c3 = confkk::ExprPool::format_double(rng.uniform(-amplitude, amplitude));
    auto x = [](int i) { return "x" + std::to_string(i); };
    out.push_back(c1 + "*" + x(p) + " + " + c2 + "*" + x(p) + "*" + x(q) + " + " + c3 +
                  "*sin(" + x(r) + ")");
  }
  return out;
}

}  // namespace testutil
