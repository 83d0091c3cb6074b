#pragma once

#include "effdispatch/commitment.hpp"

namespace effdispatch {

// Ground truth produced by exhaustive search; reproducible for a given
// (units, p_t, step) and deliberately independent of the allocator's math.
struct OracleResult {
  Allocation allocation;
  double grid_step = 0.0;
  int refinement_depth = 0;
};

struct OracleCommitment {
  std::vector<std::size_t> subset;
  OracleResult result;
};

namespace detail {

// Ascending enumeration plus strict improvement keeps the lexicographically
// smallest load vector on ties.
struct OracleBest {
  double w = -std::numeric_limits<double>::infinity();
  std::vector<double> loads;

  void offer(std::span<const Unit> units, const std::vector<double>& trial) {
    const double wt = total_output(units, trial);
    if (wt > w) {
      w = wt;
      loads = trial;
    }
  }
};

}  // namespace detail

// Exhaustive evaluation of {sum P_i = p_t, 0 <= P_i <= cap_i} at the given
// resolution, then 20 rounds of step halving with a local exhaustive
// neighborhood around the incumbent. Limited to 3 units: beyond that the
// grid blows up combinatorially and the instrument stops being cheap.
inline OracleResult oracle_allocate(std::span<const Unit> units, double p_t,
                                    double step) {
  const std::size_t n = units.size();
  if (n < 1 || n > 3) {
    throw DomainError("oracle supports 1 to 3 units, got " +
                      std::to_string(n));
  }
  if (!(step > 0.0)) {
    throw DomainError("step must be positive, got " + detail::num_str(step));
  }
  if (p_t < 0.0) {
    throw DomainError("total input must be non-negative, got " +
                      detail::num_str(p_t));
  }
  double cap_sum = 0.0;
  for (const auto& u : units) cap_sum += u.curve.p_max;
  if (!detail::within_upper(p_t, cap_sum)) {
    throw InfeasibleError("total input " + detail::num_str(p_t) +
                              " exceeds the combined capacity " +
                              detail::num_str(cap_sum),
                          cap_sum);
  }
  p_t = std::min(p_t, cap_sum);

  OracleResult res;
  res.grid_step = step;
  res.refinement_depth = 20;

  if (n == 1) {
    res.allocation = make_allocation(units, {p_t});
    return res;
  }

  const double cap0 = units[0].curve.p_max;
  const double cap1 = units[1].curve.p_max;
  const double cap2 = n == 3 ? units[2].curve.p_max : 0.0;

  detail::OracleBest best;
  std::vector<double> trial(n);

  auto clamp_feasible = [&](double x0, double x1) -> bool {
    trial[0] = x0;
    if (n == 2) {
      trial[1] = p_t - x0;
      return trial[1] >= -1e-12 && trial[1] <= cap1 + 1e-12;
    }
    trial[1] = x1;
    trial[2] = p_t - x0 - x1;
    return x1 >= -1e-12 && x1 <= cap1 + 1e-12 && trial[2] >= -1e-12 &&
           trial[2] <= cap2 + 1e-12;
  };

  const double lo0 = std::max(0.0, p_t - (cap1 + cap2));
  const double hi0 = std::min(cap0, p_t);
  const auto k0 = static_cast<std::size_t>((hi0 - lo0) / step) + 1;
  for (std::size_t i = 0; i <= k0; ++i) {
    const double x0 = std::min(lo0 + step * static_cast<double>(i), hi0);
    if (n == 2) {
      if (clamp_feasible(x0, 0.0)) best.offer(units, trial);
    } else {
      const double rest = p_t - x0;
      const double lo1 = std::max(0.0, rest - cap2);
      const double hi1 = std::min(cap1, rest);
      if (lo1 > hi1 + 1e-12) continue;
      const auto k1 = static_cast<std::size_t>((hi1 - lo1) / step) + 1;
      for (std::size_t j = 0; j <= k1; ++j) {
        const double x1 = std::min(lo1 + step * static_cast<double>(j), hi1);
        if (clamp_feasible(x0, x1)) best.offer(units, trial);
      }
    }
  }

  double h = step;
  for (int depth = 0; depth < res.refinement_depth; ++depth) {
    h *= 0.5;
    const double cx0 = best.loads[0];
    const double cx1 = n == 3 ? best.loads[1] : 0.0;
    for (int di = -2; di <= 2; ++di) {
      const double x0 = std::clamp(cx0 + di * h, lo0, hi0);
      if (n == 2) {
        if (clamp_feasible(x0, 0.0)) best.offer(units, trial);
      } else {
        const double rest = p_t - x0;
        const double lo1 = std::max(0.0, rest - cap2);
        const double hi1 = std::min(cap1, rest);
        if (lo1 > hi1 + 1e-12) continue;
        for (int dj = -2; dj <= 2; ++dj) {
          const double x1 = std::clamp(cx1 + dj * h, lo1, hi1);
          if (clamp_feasible(x0, x1)) best.offer(units, trial);
        }
      }
    }
  }

  for (auto& p : best.loads) {
    if (p < 0.0) p = 0.0;
  }
  res.allocation = make_allocation(units, std::move(best.loads));
  return res;
}

// Exhaustive best subset by brute force, same tie-breaks as best_commitment
// (fewer units first, then lexicographic ids). p_t = 0 yields the empty
// subset with zero output.
inline OracleCommitment oracle_commitment(const Fleet& fleet, double p_t,
                                          double step) {
  if (fleet.units.empty() || fleet.units.size() > 3) {
    throw DomainError("oracle supports 1 to 3 units, got " +
                      std::to_string(fleet.units.size()));
  }
  OracleCommitment best;
  if (p_t == 0.0) {
    best.result.grid_step = step;
    best.result.refinement_depth = 0;
    return best;
  }
  double best_w = -std::numeric_limits<double>::infinity();
  for (const auto& subset : feasible_subsets(fleet, p_t)) {
    const auto units = detail::subset_units(fleet, subset);
    OracleResult r = oracle_allocate(units, p_t, step);
    if (r.allocation.w_t > best_w) {
      best_w = r.allocation.w_t;
      best.subset = subset;
      best.result = std::move(r);
    }
  }
  if (best_w == -std::numeric_limits<double>::infinity()) {
    throw InfeasibleError("total input " + detail::num_str(p_t) +
                              " exceeds the fleet capacity " +
                              detail::num_str(fleet.total_cap()),
                          fleet.total_cap());
  }
  return best;
}

}  // namespace effdispatch
