#pragma once

#include <random>

#include "effdispatch/curves.hpp"

namespace testutil {

using effdispatch::EfficiencyCurve;
using effdispatch::Fleet;
using effdispatch::Unit;

// Two-unit fleet where u2 is u1 horizontally scaled by 1.5.
inline Fleet case1_fleet() {
  Fleet f;
  f.units.push_back({"u1", {0.022, 0.0001375, 0.022 / 0.0001375}});
  const double a2 = 0.022 / 1.5;
  const double b2 = 0.0001375 / 2.25;
  f.units.push_back({"u2", {a2, b2, a2 / b2}});
  return f;
}

// Two-unit fleet with dissimilar curves.
inline Fleet case2_fleet() {
  Fleet f;
  f.units.push_back({"u1", {0.022, 0.0001375, 0.022 / 0.0001375}});
  f.units.push_back({"u2", {0.0287, 0.000233333, 0.0287 / 0.000233333}});
  return f;
}

// Valid curve from a peak-efficiency / peak-input parameterization:
// a = 2*eta_e/p_e, b = eta_e/p_e^2, cap a/b = 2*p_e.
inline EfficiencyCurve random_curve(std::mt19937& rng) {
  std::uniform_real_distribution<double> eta_e(0.55, 0.95);
  std::uniform_real_distribution<double> p_e(40.0, 160.0);
  const double e = eta_e(rng), p = p_e(rng);
  const double a = 2.0 * e / p;
  const double b = e / (p * p);
  return {a, b, a / b};
}

inline Fleet random_fleet(std::mt19937& rng, std::size_t n) {
  Fleet f;
  for (std::size_t i = 0; i < n; ++i) {
    f.units.push_back({"u" + std::to_string(i + 1), random_curve(rng)});
  }
  return f;
}

// Family of horizontal scalings of a random reference curve.
inline Fleet random_similar_fleet(std::mt19937& rng, std::size_t n,
                                  std::vector<double>* betas_out = nullptr) {
  const EfficiencyCurve ref = random_curve(rng);
  std::uniform_real_distribution<double> beta_dist(0.5, 3.0);
  Fleet f;
  if (betas_out) betas_out->clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = i == 0 ? 1.0 : beta_dist(rng);
    EfficiencyCurve c{ref.a / beta, ref.b / (beta * beta), beta * ref.p_max};
    f.units.push_back({"u" + std::to_string(i + 1), c});
    if (betas_out) betas_out->push_back(beta);
  }
  return f;
}

// Total input up to which the fleet's best-output envelope is strictly
// increasing: the sum of the per-unit output-peak inputs.
inline double envelope_peak_input(const Fleet& f) {
  double s = 0.0;
  for (const auto& u : f.units) s += u.curve.max_output_input();
  return s;
}

}  // namespace testutil
