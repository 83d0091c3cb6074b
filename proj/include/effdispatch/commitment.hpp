#pragma once

#include <numeric>

#include "effdispatch/allocator.hpp"

namespace effdispatch {

// Active subset plus its optimal split. `subset` holds fleet indices in
// fleet order; `allocation.loads` is aligned with `subset`.
struct CommitmentResult {
  std::vector<std::size_t> subset;
  Allocation allocation;
};

enum class RegimeRule { similar_proportional, stationary };

// Contiguous total-input interval on which one active subset is optimal.
struct Regime {
  std::vector<std::size_t> active;  // fleet indices
  double lo = 0.0;
  double hi = 0.0;  // half-open except for the last regime
  RegimeRule rule = RegimeRule::stationary;
};

struct SwitchingSchedule {
  std::vector<Regime> regimes;
  std::vector<double> breakpoints;
};

struct SweepRow {
  double p_t = 0.0;
  std::vector<std::size_t> subset;
  std::vector<double> fleet_loads;  // one per fleet unit, 0 when inactive
  double w_t = 0.0;
  double eta_t = 0.0;
};

struct BreakpointCheck {
  double p_t = 0.0;
  double eta_left = 0.0;
  double eta_right = 0.0;
  bool equal_eta = false;
  bool at_cap = false;
  bool pass = false;
};

struct BreakpointReport {
  std::vector<BreakpointCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

namespace detail {

inline void check_fleet_size(const Fleet& fleet) {
  if (fleet.units.empty()) throw DomainError("fleet is empty");
  if (fleet.units.size() > kMaxFleetSize) {
    throw DomainError("fleet has " + std::to_string(fleet.units.size()) +
                      " units, more than the supported " +
                      std::to_string(kMaxFleetSize));
  }
}

inline std::vector<Unit> subset_units(const Fleet& fleet,
                                      const std::vector<std::size_t>& subset) {
  std::vector<Unit> out;
  out.reserve(subset.size());
  for (std::size_t i : subset) out.push_back(fleet.units[i]);
  return out;
}

inline bool subset_id_less(const Fleet& fleet,
                           const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::string& ia = fleet.units[a[k]].id;
    const std::string& ib = fleet.units[b[k]].id;
    if (ia != ib) return ia < ib;
  }
  return false;
}

}  // namespace detail

// Every non-empty subset whose combined capacity covers p_t, ordered by
// size then lexicographically by unit ids. An empty result signals that no
// subset can absorb p_t.
inline std::vector<std::vector<std::size_t>> feasible_subsets(
    const Fleet& fleet, double p_t) {
  detail::check_fleet_size(fleet);
  if (p_t < 0.0) {
    throw DomainError("total input must be non-negative, got " +
                      detail::num_str(p_t));
  }
  const std::size_t n = fleet.units.size();
  std::vector<std::vector<std::size_t>> subsets;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double cap = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) {
        cap += fleet.units[i].curve.p_max;
        idx.push_back(i);
      }
    }
    if (detail::within_upper(p_t, cap)) subsets.push_back(std::move(idx));
  }
  std::sort(subsets.begin(), subsets.end(),
            [&](const auto& a, const auto& b) {
              return detail::subset_id_less(fleet, a, b);
            });
  return subsets;
}

// Best active subset and split for total input p_t. Ties go to fewer units,
// then lexicographic ids; enumeration order makes that the first candidate,
// so a strict comparison implements the tie-break.
inline CommitmentResult best_commitment(const Fleet& fleet, double p_t,
                                        const AllocatorOptions& opt = {}) {
  const auto subsets = feasible_subsets(fleet, p_t);
  if (subsets.empty()) {
    throw InfeasibleError("total input " + detail::num_str(p_t) +
                              " exceeds the fleet capacity " +
                              detail::num_str(fleet.total_cap()),
                          fleet.total_cap());
  }
  CommitmentResult best;
  double best_w = -std::numeric_limits<double>::infinity();
  for (const auto& subset : subsets) {
    const auto units = detail::subset_units(fleet, subset);
    Allocation a = allocate_best(units, p_t, opt);
    // A later subset must beat the incumbent by more than evaluation noise;
    // nested subsets reproduce each other's boundary allocations to within
    // an ulp, and those ties belong to the smaller set.
    const double tie = 1e-12 * std::max(1.0, std::abs(a.w_t));
    if (a.w_t - tie > best_w) {
      best_w = a.w_t;
      best.subset = subset;
      best.allocation = std::move(a);
    }
  }
  return best;
}

// Smallest total input whose best-commitment output reaches w_target, found
// by bisection over the region where the output envelope increases (it does
// until every unit passes its own output peak). Relative tolerance 1e-9 on
// the returned input.
struct MinInputResult {
  double p_t = 0.0;
  CommitmentResult commitment;
};

inline MinInputResult min_input_for_output(const Fleet& fleet, double w_target,
                                           const AllocatorOptions& opt = {}) {
  detail::check_fleet_size(fleet);
  if (w_target < 0.0) {
    throw DomainError("target output must be non-negative, got " +
                      detail::num_str(w_target));
  }
  double w_max = 0.0, p_peak = 0.0;
  for (const auto& u : fleet.units) {
    w_max += u.curve.max_output();
    p_peak += u.curve.max_output_input();
  }
  if (w_target > w_max * (1.0 + 1e-9)) {
    throw InfeasibleError("target output " + detail::num_str(w_target) +
                              " exceeds the maximum achievable " +
                              detail::num_str(w_max),
                          w_max);
  }
  MinInputResult res;
  if (w_target <= 0.0) {
    res.p_t = 0.0;
    res.commitment = best_commitment(fleet, 0.0, opt);
    return res;
  }
  double lo = 0.0, hi = p_peak;
  while (hi - lo > 1e-9 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (best_commitment(fleet, mid, opt).allocation.w_t >= w_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  res.p_t = hi;
  res.commitment = best_commitment(fleet, hi, opt);
  return res;
}

namespace detail {

// Output of `subset` at total input p, -inf when the subset cannot absorb p.
inline double subset_output(const Fleet& fleet,
                            const std::vector<std::size_t>& subset, double p,
                            const AllocatorOptions& opt) {
  double cap = 0.0;
  for (std::size_t i : subset) cap += fleet.units[i].curve.p_max;
  if (!within_upper(p, cap)) return -std::numeric_limits<double>::infinity();
  return allocate_best(subset_units(fleet, subset), p, opt).w_t;
}

}  // namespace detail

// Scans best_commitment over a grid and refines every subset change by
// bisection to 1e-6 in total input. A grid step that straddles more than
// one change hides the inner ones; step is caller-tunable for that reason.
inline SwitchingSchedule switching_schedule(const Fleet& fleet, double p_min,
                                            double p_max, double scan_step,
                                            const AllocatorOptions& opt = {}) {
  detail::check_fleet_size(fleet);
  if (!(p_min >= 0.0) || !(p_min < p_max)) {
    throw DomainError("need 0 <= p_min < p_max, got [" +
                      detail::num_str(p_min) + ", " + detail::num_str(p_max) +
                      "]");
  }
  if (!detail::within_upper(p_max, fleet.total_cap())) {
    throw InfeasibleError("p_max " + detail::num_str(p_max) +
                              " exceeds the fleet capacity " +
                              detail::num_str(fleet.total_cap()),
                          fleet.total_cap());
  }
  if (!(scan_step > 0.0) || scan_step > (p_max - p_min)) {
    throw DomainError("scan step must lie in (0, p_max - p_min], got " +
                      detail::num_str(scan_step));
  }

  std::vector<double> grid;
  const auto steps =
      static_cast<std::size_t>((p_max - p_min) / scan_step + 1e-9);
  for (std::size_t k = 0; k <= steps; ++k) {
    grid.push_back(std::min(p_min + scan_step * static_cast<double>(k), p_max));
  }
  if (grid.back() < p_max - 1e-12) grid.push_back(p_max);

  std::vector<std::vector<std::size_t>> winners;
  winners.reserve(grid.size());
  for (double p : grid) winners.push_back(best_commitment(fleet, p, opt).subset);

  SwitchingSchedule sched;
  auto left_subset = winners.front();
  double regime_lo = p_min;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (winners[k] == left_subset) continue;
    const auto& right_subset = winners[k];
    // Winner flips from A to B somewhere in (grid[k-1], grid[k]]. "A wins"
    // uses the same strict comparison and ordering as best_commitment, so
    // boundary-tied allocations do not produce spurious flips.
    double lo = grid[k - 1], hi = grid[k];
    const bool a_first =
        detail::subset_id_less(fleet, left_subset, right_subset);
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      const double wa = detail::subset_output(fleet, left_subset, mid, opt);
      const double wb = detail::subset_output(fleet, right_subset, mid, opt);
      bool a_wins;
      if (std::isinf(wa)) {
        a_wins = false;
      } else if (std::isinf(wb)) {
        a_wins = true;
      } else {
        // Mirror best_commitment's noise-tolerant tie-break.
        const double tie =
            1e-12 * std::max({1.0, std::abs(wa), std::abs(wb)});
        a_wins = a_first ? wa >= wb - tie : wa > wb + tie;
      }
      if (a_wins) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double bp = 0.5 * (lo + hi);
    if (bp < regime_lo + 1e-9) bp = regime_lo + 1e-9;  // keep intervals non-empty
    Regime regime;
    regime.active = left_subset;
    regime.lo = regime_lo;
    regime.hi = bp;
    sched.regimes.push_back(std::move(regime));
    sched.breakpoints.push_back(bp);
    regime_lo = bp;
    left_subset = right_subset;
  }
  Regime last;
  last.active = left_subset;
  last.lo = regime_lo;
  last.hi = p_max;
  sched.regimes.push_back(std::move(last));

  for (auto& regime : sched.regimes) {
    Fleet sub;
    sub.units = detail::subset_units(fleet, regime.active);
    regime.rule = detect_family(sub) ? RegimeRule::similar_proportional
                                     : RegimeRule::stationary;
  }
  return sched;
}

// Checks the switching-point property at every breakpoint: the two adjacent
// regimes' overall efficiencies agree, or some unit sits at its cap.
inline BreakpointReport verify_breakpoints(const SwitchingSchedule& sched,
                                           const Fleet& fleet,
                                           const AllocatorOptions& opt = {}) {
  BreakpointReport report;
  for (std::size_t k = 0; k < sched.breakpoints.size(); ++k) {
    const double bp = sched.breakpoints[k];
    const auto& left = sched.regimes[k];
    const auto& right = sched.regimes[k + 1];
    BreakpointCheck check;
    check.p_t = bp;
    bool at_cap = false;
    double etas[2] = {0.0, 0.0};
    const std::vector<std::size_t>* sets[2] = {&left.active, &right.active};
    for (int side = 0; side < 2; ++side) {
      const auto units = detail::subset_units(fleet, *sets[side]);
      double cap = 0.0;
      for (const auto& u : units) cap += u.curve.p_max;
      const Allocation a = allocate_best(units, std::min(bp, cap), opt);
      etas[side] = a.eta_t;
      for (std::size_t i = 0; i < units.size(); ++i) {
        if (std::abs(a.loads[i] - units[i].curve.p_max) <= 1e-6) at_cap = true;
      }
    }
    check.eta_left = etas[0];
    check.eta_right = etas[1];
    check.equal_eta = std::abs(etas[0] - etas[1]) <= 1e-4;
    check.at_cap = at_cap;
    check.pass = check.equal_eta || check.at_cap;
    report.checks.push_back(check);
  }
  return report;
}

// One best_commitment row per grid point, ordered by total input.
inline std::vector<SweepRow> sweep(const Fleet& fleet, double p_min,
                                   double p_max, double step,
                                   const AllocatorOptions& opt = {}) {
  detail::check_fleet_size(fleet);
  if (!(p_min >= 0.0) || !(p_min < p_max)) {
    throw DomainError("need 0 <= p_min < p_max, got [" +
                      detail::num_str(p_min) + ", " + detail::num_str(p_max) +
                      "]");
  }
  if (!(step > 0.0) || step > (p_max - p_min)) {
    throw DomainError("step must lie in (0, p_max - p_min], got " +
                      detail::num_str(step));
  }
  std::vector<SweepRow> rows;
  const auto count = static_cast<std::size_t>((p_max - p_min) / step + 1e-9);
  for (std::size_t k = 0; k <= count; ++k) {
    const double p = std::min(p_min + step * static_cast<double>(k), p_max);
    const CommitmentResult r = best_commitment(fleet, p, opt);
    SweepRow row;
    row.p_t = p;
    row.subset = r.subset;
    row.fleet_loads.assign(fleet.units.size(), 0.0);
    for (std::size_t i = 0; i < r.subset.size(); ++i) {
      row.fleet_loads[r.subset[i]] = r.allocation.loads[i];
    }
    row.w_t = r.allocation.w_t;
    row.eta_t = r.allocation.eta_t;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace effdispatch
