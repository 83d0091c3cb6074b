#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

#include "effdispatch/curves.hpp"

namespace effdispatch {

// Load split across a set of units. `loads` is positionally aligned with the
// unit list the operation was called with; p_t is the total input, w_t the
// total output, eta_t = w_t / p_t (0 at p_t = 0 by convention).
struct Allocation {
  std::vector<double> loads;
  double p_t = 0.0;
  double w_t = 0.0;
  double eta_t = 0.0;
};

enum class MarginalBranch { rising, falling, at_bound };

// First-order point of the load-split problem: interior units share the
// marginal output `multiplier`; the rest sit at a bound.
struct StationaryCandidate {
  Allocation allocation;
  double multiplier = 0.0;
  std::vector<MarginalBranch> branches;
};

struct AllocatorOptions {
  double root_tol = 1e-9;         // absolute tolerance on loads
  double sum_tol = 1e-9;          // absolute tolerance on the load sum
  int grid_points = 200;          // safety-net grid per free dimension
  double polish_min_step = 1e-9;  // final coordinate-ascent step
  int lambda_scan = 64;           // brackets scanned per branch signature
};

namespace detail {

inline double total_output(std::span<const Unit> units,
                           std::span<const double> loads) {
  double w = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& c = units[i].curve;
    const double p = loads[i];
    w += (c.a * p - c.b * p * p) * p;  // unchecked: callers keep loads in range
  }
  return w;
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Root of 2ap - 3bp^2 = lambda on the requested side of the marginal's
// vertex a/(3b). No root when lambda exceeds the vertex value a^2/(3b),
// and the rising root is negative for lambda < 0.
inline std::optional<double> marginal_root(const EfficiencyCurve& c,
                                           double lambda, Branch side) {
  const double disc = c.a * c.a - 3.0 * c.b * lambda;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double root = (side == Branch::rising) ? (c.a - sq) / (3.0 * c.b)
                                               : (c.a + sq) / (3.0 * c.b);
  if (root < 0.0) return std::nullopt;
  return root;
}

// Shifts `residual` onto units that have slack, preferring the largest
// slack first. Keeps loads within [0, cap].
inline bool absorb_residual(std::span<const Unit> units,
                            std::vector<double>& loads, double residual) {
  for (int pass = 0; pass < 4 && residual != 0.0; ++pass) {
    std::size_t pick = units.size();
    double best_slack = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i) {
      const double slack = residual > 0.0 ? units[i].curve.p_max - loads[i]
                                          : loads[i];
      if (slack > best_slack) {
        best_slack = slack;
        pick = i;
      }
    }
    if (pick == units.size()) return false;
    const double delta = residual > 0.0 ? std::min(residual, best_slack)
                                        : -std::min(-residual, best_slack);
    loads[pick] += delta;
    residual -= delta;
  }
  return std::abs(residual) < 1e-12;
}

}  // namespace detail

inline Allocation make_allocation(std::span<const Unit> units,
                                  std::vector<double> loads) {
  Allocation a;
  for (auto& p : loads) {
    if (p < 0.0 && p > -1e-12) p = 0.0;
  }
  a.p_t = detail::sum(loads);
  a.w_t = detail::total_output(units, loads);
  a.eta_t = a.p_t > 0.0 ? a.w_t / a.p_t : 0.0;
  a.loads = std::move(loads);
  return a;
}

// All first-order points of  max sum_i output_i(P_i)  s.t. sum P_i = p_t,
// 0 <= P_i <= cap_i, with every listed unit treated as operating. Found by a
// multiplier sweep: for each rising/falling branch signature the per-unit
// response is the closed-form root of marginal(P) = lambda clamped to the
// cap, and lambda is solved so the responses sum to p_t. Capped units must
// be KKT-consistent (marginal at the cap >= lambda). The marginal is not
// monotone, so every branch signature is enumerated rather than assuming a
// single root per unit.
inline std::vector<StationaryCandidate> stationary_candidates(
    std::span<const Unit> units, double p_t,
    const AllocatorOptions& opt = {}) {
  const std::size_t n = units.size();
  if (n == 0) throw DomainError("at least one unit required");
  if (p_t <= 0.0) {
    throw DomainError("total input must be positive, got " +
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

  std::vector<StationaryCandidate> out;
  auto emit = [&](std::vector<double> loads, double lambda) {
    double residual = p_t - detail::sum(loads);
    if (std::abs(residual) > 1e-6) return;
    if (!detail::absorb_residual(units, loads, residual)) return;
    // KKT at the caps and dedupe against previous candidates.
    StationaryCandidate cand;
    cand.multiplier = lambda;
    cand.branches.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = units[i].curve;
      const double p = loads[i];
      if (p >= c.p_max - opt.root_tol) {
        const double g_cap = 2.0 * c.a * c.p_max - 3.0 * c.b * c.p_max * c.p_max;
        if (g_cap < lambda - 1e-7 * std::max(1.0, std::abs(lambda))) return;
        cand.branches[i] = MarginalBranch::at_bound;
      } else {
        cand.branches[i] = p < c.a / (3.0 * c.b) ? MarginalBranch::rising
                                                 : MarginalBranch::falling;
      }
    }
    for (const auto& prev : out) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d = std::max(d, std::abs(prev.allocation.loads[i] - loads[i]));
      }
      if (d < 1e-6) return;
    }
    cand.allocation = make_allocation(units, std::move(loads));
    out.push_back(std::move(cand));
  };

  if (n == 1) {
    const auto& c = units[0].curve;
    emit({p_t}, 2.0 * c.a * p_t - 3.0 * c.b * p_t * p_t);
    return out;
  }

  std::vector<double> loads(n);
  auto response = [&](std::uint32_t mask, double lambda,
                      std::vector<double>& r) -> bool {
    for (std::size_t i = 0; i < n; ++i) {
      const Branch side = (mask >> i) & 1u ? Branch::falling : Branch::rising;
      auto root = detail::marginal_root(units[i].curve, lambda, side);
      if (!root) return false;
      r[i] = std::min(*root, units[i].curve.p_max);
    }
    return true;
  };

  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double lambda_hi = std::numeric_limits<double>::infinity();
    double lambda_lo = 0.0;
    bool any_rising = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = units[i].curve;
      lambda_hi = std::min(lambda_hi, c.a * c.a / (3.0 * c.b));
      if (((mask >> i) & 1u) == 0) {
        any_rising = true;
      } else {
        const double g_cap = 2.0 * c.a * c.p_max - 3.0 * c.b * c.p_max * c.p_max;
        lambda_lo = std::min(lambda_lo, g_cap - 1.0);
      }
    }
    if (any_rising) lambda_lo = 0.0;
    if (!(lambda_lo < lambda_hi)) continue;

    // Scan for brackets of sum(lambda) = p_t, then bisect each one. Mixed
    // signatures are not monotone in lambda, so a plain bisection from the
    // ends would miss roots.
    const int m = opt.lambda_scan;
    double prev_lambda = lambda_lo;
    double prev_diff = std::numeric_limits<double>::quiet_NaN();
    if (response(mask, lambda_lo, loads)) {
      prev_diff = detail::sum(loads) - p_t;
    }
    for (int k = 1; k <= m; ++k) {
      const double lambda = lambda_lo + (lambda_hi - lambda_lo) * k / m;
      double diff = std::numeric_limits<double>::quiet_NaN();
      if (response(mask, lambda, loads)) diff = detail::sum(loads) - p_t;
      if (!std::isnan(prev_diff) && !std::isnan(diff) &&
          (prev_diff <= 0.0) != (diff <= 0.0)) {
        double lo = prev_lambda, hi = lambda, f_lo = prev_diff;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (!response(mask, mid, loads)) break;
          const double f_mid = detail::sum(loads) - p_t;
          if ((f_lo <= 0.0) == (f_mid <= 0.0)) {
            lo = mid;
            f_lo = f_mid;
          } else {
            hi = mid;
          }
          if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
        }
        const double lambda_star = 0.5 * (lo + hi);
        if (response(mask, lambda_star, loads)) emit(loads, lambda_star);
      }
      if (!std::isnan(diff) && std::abs(diff) < opt.sum_tol) emit(loads, lambda);
      prev_lambda = lambda;
      prev_diff = diff;
    }
  }
  return out;
}

// Equal-efficiency split for a similar family (loads proportional to beta),
// with capped units fixed at their cap and the remainder re-split until
// feasible. Interior units end at pairwise equal efficiency.
inline Allocation allocate_similar(const SimilarFamily& family,
                                   std::span<const double> caps, double p_t) {
  const std::size_t n = family.betas.size();
  if (caps.size() != n) {
    throw DomainError("caps size does not match the family size");
  }
  if (p_t <= 0.0) {
    throw DomainError("total input must be positive, got " +
                      detail::num_str(p_t));
  }
  double cap_sum = 0.0;
  for (double c : caps) cap_sum += c;
  if (!detail::within_upper(p_t, cap_sum)) {
    throw InfeasibleError("total input " + detail::num_str(p_t) +
                              " exceeds the combined capacity " +
                              detail::num_str(cap_sum),
                          cap_sum);
  }

  std::vector<double> loads(n, 0.0);
  std::vector<bool> capped(n, false);
  double remaining = p_t;
  for (std::size_t round = 0; round <= n; ++round) {
    double beta_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!capped[i]) beta_sum += family.betas[i];
    }
    if (beta_sum <= 0.0) break;
    bool newly_capped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) continue;
      loads[i] = family.betas[i] * remaining / beta_sum;
      if (loads[i] > caps[i]) {
        loads[i] = caps[i];
        capped[i] = true;
        remaining -= caps[i];
        newly_capped = true;
      }
    }
    if (!newly_capped) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (!capped[i]) loads[i] = 0.0;
    }
  }

  Allocation a;
  a.loads = std::move(loads);
  a.p_t = detail::sum(a.loads);
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = a.loads[i] / family.betas[i];
    w += a.loads[i] * (family.reference.a * scaled -
                       family.reference.b * scaled * scaled);
  }
  a.w_t = w;
  a.eta_t = a.p_t > 0.0 ? a.w_t / a.p_t : 0.0;
  return a;
}

namespace detail {

// Pairwise-transfer coordinate ascent, step halving down to min_step.
// Preserves the load sum exactly and respects the caps.
inline void polish(std::span<const Unit> units, std::vector<double>& loads,
                   const AllocatorOptions& opt, double p_t) {
  const std::size_t n = units.size();
  if (n < 2) return;
  double w = total_output(units, loads);
  double h = std::max(p_t / opt.grid_points, opt.polish_min_step);
  while (h >= opt.polish_min_step) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d =
            std::min({h, units[i].curve.p_max - loads[i], loads[j]});
        if (d <= 0.0) continue;
        loads[i] += d;
        loads[j] -= d;
        const double w_new = total_output(units, loads);
        if (w_new > w + 1e-15 * std::max(1.0, std::abs(w))) {
          w = w_new;
          improved = true;
        } else {
          loads[i] -= d;
          loads[j] += d;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
}

enum class Pin : std::uint8_t { free_unit, zero, cap };

}  // namespace detail

// Output-maximizing split of p_t across the given units (all of 0 <= P_i <=
// cap_i allowed, including boundary loads the operating assumption of
// stationary_candidates excludes). Candidates: stationary points for every
// pinned-at-zero / pinned-at-cap assignment of the remaining units, a coarse
// grid for up to two free dimensions, and a final coordinate-ascent polish
// of the winner. Ties keep the earliest candidate, so stationary interior
// points win over grid duplicates and the result is deterministic.
inline Allocation allocate_best(std::span<const Unit> units, double p_t,
                                const AllocatorOptions& opt = {}) {
  const std::size_t n = units.size();
  if (n == 0) throw DomainError("at least one unit required");
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
  if (p_t <= 0.0) return make_allocation(units, std::vector<double>(n, 0.0));
  p_t = std::min(p_t, cap_sum);

  std::vector<double> best_loads;
  std::vector<double> scratch;
  double best_w = -std::numeric_limits<double>::infinity();
  // Candidates are repaired onto the exact simplex before comparison; a
  // load vector whose sum exceeds p_t by an ulp would otherwise outrank a
  // genuinely tied allocation that respects the budget.
  auto consider = [&](const std::vector<double>& loads) {
    scratch = loads;
    for (std::size_t i = 0; i < n; ++i) {
      scratch[i] = std::clamp(scratch[i], 0.0, units[i].curve.p_max);
    }
    const double residual = p_t - detail::sum(scratch);
    if (residual != 0.0 &&
        !detail::absorb_residual(units, scratch, residual)) {
      return;
    }
    const double w = detail::total_output(units, scratch);
    if (w > best_w) {
      best_w = w;
      best_loads = scratch;
    }
  };

  // Pinned assignments enumerated in base 3 with all-free first; the free
  // remainder is solved by the stationary sweep.
  std::vector<detail::Pin> pins(n, detail::Pin::free_unit);
  std::vector<std::size_t> free_idx;
  std::vector<Unit> free_units;
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n && combos <= 60000; ++i) combos *= 3;
  if (n > 10) combos = 1 + 2 * n;  // all-free plus single pins for large n

  for (std::size_t code = 0; code < combos; ++code) {
    if (n > 10) {
      std::fill(pins.begin(), pins.end(), detail::Pin::free_unit);
      if (code > 0) {
        pins[(code - 1) / 2] =
            (code - 1) % 2 ? detail::Pin::cap : detail::Pin::zero;
      }
    } else {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i) {
        pins[i] = static_cast<detail::Pin>(c % 3);
        c /= 3;
      }
    }
    double fixed = 0.0;
    free_idx.clear();
    free_units.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (pins[i] == detail::Pin::cap) {
        fixed += units[i].curve.p_max;
      } else if (pins[i] == detail::Pin::free_unit) {
        free_idx.push_back(i);
        free_units.push_back(units[i]);
      }
    }
    const double rem = p_t - fixed;
    if (rem < -opt.sum_tol) continue;
    double free_cap = 0.0;
    for (const auto& u : free_units) free_cap += u.curve.p_max;
    if (rem > free_cap + opt.sum_tol) continue;

    std::vector<double> loads(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (pins[i] == detail::Pin::cap) loads[i] = units[i].curve.p_max;
    }
    if (free_idx.empty() || rem <= opt.sum_tol) {
      if (std::abs(rem) <= opt.sum_tol) consider(loads);
      continue;
    }
    if (free_idx.size() == 1) {
      loads[free_idx[0]] = rem;
      consider(loads);
      continue;
    }
    for (const auto& cand :
         stationary_candidates(free_units, std::min(rem, free_cap), opt)) {
      for (std::size_t k = 0; k < free_idx.size(); ++k) {
        loads[free_idx[k]] = cand.allocation.loads[k];
      }
      consider(loads);
    }
  }

  // Safety net: the stationary system can be crossed by a feasibility jump,
  // so a coarse grid plus polish backs up the candidate set. Grid endpoints
  // are skipped: they duplicate pinned candidates up to rounding, and the
  // rounded twins inject ulp-level noise into boundary ties.
  if (n == 2) {
    const double lo = std::max(0.0, p_t - units[1].curve.p_max);
    const double hi = std::min(units[0].curve.p_max, p_t);
    std::vector<double> loads(2);
    for (int k = 1; k < opt.grid_points; ++k) {
      loads[0] = lo + (hi - lo) * k / opt.grid_points;
      loads[1] = p_t - loads[0];
      consider(loads);
    }
  } else if (n == 3) {
    std::vector<double> loads(3);
    const double cap2 = units[1].curve.p_max, cap3 = units[2].curve.p_max;
    const double lo1 = std::max(0.0, p_t - cap2 - cap3);
    const double hi1 = std::min(units[0].curve.p_max, p_t);
    for (int k = 1; k < opt.grid_points; ++k) {
      loads[0] = lo1 + (hi1 - lo1) * k / opt.grid_points;
      const double rest = p_t - loads[0];
      const double lo2 = std::max(0.0, rest - cap3);
      const double hi2 = std::min(cap2, rest);
      if (lo2 > hi2) continue;
      for (int l = 1; l < opt.grid_points; ++l) {
        loads[1] = lo2 + (hi2 - lo2) * l / opt.grid_points;
        loads[2] = rest - loads[1];
        consider(loads);
      }
    }
  } else {
    // Proportional-to-cap start for fleets too large to grid.
    std::vector<double> loads(n);
    for (std::size_t i = 0; i < n; ++i) {
      loads[i] = units[i].curve.p_max * p_t / cap_sum;
    }
    consider(loads);
  }

  detail::polish(units, best_loads, opt, p_t);
  const double residual = p_t - detail::sum(best_loads);
  if (std::abs(residual) > 0.0) {
    detail::absorb_residual(units, best_loads, residual);
  }
  return make_allocation(units, std::move(best_loads));
}

}  // namespace effdispatch
