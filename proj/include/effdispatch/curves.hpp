#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace effdispatch {

// Argument outside an operation's stated domain (maps to a usage error
// at the CLI boundary).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Request exceeds what the fleet or curve can deliver. `limit` carries the
// binding bound (capacity, peak level, ...) so callers can report it.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& msg, double limit)
      : std::runtime_error(msg), limit_(limit) {}
  double limit() const noexcept { return limit_; }

 private:
  double limit_ = 0.0;
};

namespace detail {

inline std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Slack used when checking a value against a bound that was computed in
// floating point (e.g. p_max set to a/b).
inline constexpr double kBoundSlack = 1e-9;

inline bool within_upper(double value, double bound) {
  return value <= bound + kBoundSlack * std::max(1.0, std::abs(bound));
}

}  // namespace detail

enum class Branch { rising, falling };

// Quadratic input->efficiency map eta(p) = a*p - b*p^2 on [0, p_max].
// eta(0) = 0, eta'' = -2b < 0; peak a^2/(4b) at p = a/(2b).
// The delivered output is p*eta(p) = a*p^2 - b*p^3, which rises until
// p = 2a/(3b) and falls back to zero at p = a/b.
struct EfficiencyCurve {
  double a = 0.0;      // linear coefficient, 1/power
  double b = 0.0;      // curvature coefficient, 1/power^2
  double p_max = 0.0;  // admissible input cap

  double efficiency(double p) const {
    check_domain(p);
    return a * p - b * p * p;
  }

  double output(double p) const {
    check_domain(p);
    return (a * p - b * p * p) * p;
  }

  // d/dp of output: eta(p) + p*eta'(p) = 2ap - 3bp^2. Equalized across
  // interior units at a constrained optimum.
  double marginal_output(double p) const {
    check_domain(p);
    return 2.0 * a * p - 3.0 * b * p * p;
  }

  double peak_input() const { return std::clamp(a / (2.0 * b), 0.0, p_max); }
  double peak_efficiency() const { return efficiency(peak_input()); }

  // Input maximizing the output on [0, p_max], and that output.
  double max_output_input() const {
    return std::min(2.0 * a / (3.0 * b), p_max);
  }
  double max_output() const { return output(max_output_input()); }

  // Largest marginal output, attained at p = a/(3b).
  double max_marginal() const { return a * a / (3.0 * b); }

  // Root of eta(p) = level on the requested side of the peak.
  // level must lie in (0, peak_efficiency]; the root must respect p_max.
  double inverse_efficiency(double level, Branch branch) const {
    const double peak = a * a / (4.0 * b);
    if (level <= 0.0) {
      throw DomainError("efficiency level must be positive, got " +
                        detail::num_str(level));
    }
    if (!detail::within_upper(level, peak)) {
      throw DomainError("no root: level " + detail::num_str(level) +
                        " is above the peak efficiency " +
                        detail::num_str(peak));
    }
    const double disc = std::max(0.0, a * a - 4.0 * b * level);
    const double sq = std::sqrt(disc);
    const double root =
        (branch == Branch::rising) ? (a - sq) / (2.0 * b) : (a + sq) / (2.0 * b);
    if (!detail::within_upper(root, p_max)) {
      throw InfeasibleError("root " + detail::num_str(root) +
                                " for level " + detail::num_str(level) +
                                " exceeds p_max " + detail::num_str(p_max),
                            p_max);
    }
    return std::clamp(root, 0.0, p_max);
  }

 private:
  void check_domain(double p) const {
    const double slack = detail::kBoundSlack * std::max(1.0, p_max);
    if (p < -slack) {
      throw DomainError("input " + detail::num_str(p) +
                        " below the lower bound 0");
    }
    if (p > p_max + slack) {
      throw DomainError("input " + detail::num_str(p) +
                        " exceeds the upper bound p_max = " +
                        detail::num_str(p_max));
    }
  }
};

struct Unit {
  std::string id;
  EfficiencyCurve curve;
};

struct Fleet {
  std::vector<Unit> units;

  std::size_t size() const { return units.size(); }
  double total_cap() const {
    double s = 0.0;
    for (const auto& u : units) s += u.curve.p_max;
    return s;
  }
};

// Per-unit horizontal scalings of a reference curve:
// eta_i(p) = eta_ref(p / beta_i), beta[0] = 1.
struct SimilarFamily {
  EfficiencyCurve reference;
  std::vector<double> betas;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

// Reports every violated curve invariant; empty report iff valid.
inline ValidationReport validate(const EfficiencyCurve& c) {
  ValidationReport r;
  if (!(c.a > 0.0)) {
    r.violations.push_back("a must be positive, got " + detail::num_str(c.a));
  }
  if (!(c.b > 0.0)) {
    r.violations.push_back("b must be positive, got " + detail::num_str(c.b));
  }
  if (!(c.p_max > 0.0)) {
    r.violations.push_back("p_max must be positive, got " +
                           detail::num_str(c.p_max));
  }
  if (!r.valid()) return r;
  const double zero_cross = c.a / c.b;
  if (!detail::within_upper(c.p_max, zero_cross)) {
    r.violations.push_back("p_max " + detail::num_str(c.p_max) +
                           " exceeds a/b = " + detail::num_str(zero_cross) +
                           " where efficiency turns negative");
  }
  const double peak = c.a * c.a / (4.0 * c.b);
  if (!detail::within_upper(peak, 1.0)) {
    r.violations.push_back("peak efficiency a^2/(4b) = " +
                           detail::num_str(peak) + " exceeds 1");
  }
  return r;
}

// Fleet-level checks: per-unit curves, non-empty ids, unique ids, and the
// size cap that keeps exhaustive subset enumeration tractable.
inline constexpr std::size_t kMaxFleetSize = 16;

inline ValidationReport validate(const Fleet& fleet) {
  ValidationReport r;
  if (fleet.units.empty()) {
    r.violations.push_back("fleet must contain at least one unit");
    return r;
  }
  if (fleet.units.size() > kMaxFleetSize) {
    r.violations.push_back("fleet has " + std::to_string(fleet.units.size()) +
                           " units, more than the supported " +
                           std::to_string(kMaxFleetSize));
  }
  for (std::size_t i = 0; i < fleet.units.size(); ++i) {
    const Unit& u = fleet.units[i];
    if (u.id.empty()) {
      r.violations.push_back("unit #" + std::to_string(i) + " has an empty id");
    }
    for (std::size_t j = i + 1; j < fleet.units.size(); ++j) {
      if (!u.id.empty() && u.id == fleet.units[j].id) {
        r.violations.push_back("duplicate unit id \"" + u.id + "\"");
      }
    }
    for (const auto& v : validate(u.curve).violations) {
      r.violations.push_back("unit \"" + u.id + "\": " + v);
    }
  }
  return r;
}

// Scale factor beta with eta_other(p) = eta_ref(p / beta), if one exists.
// For quadratics this needs a_other = a_ref/beta and b_other = b_ref/beta^2
// for a single beta; checked on the coefficient ratios at rel_tol.
inline std::optional<double> similarity_factor(const EfficiencyCurve& ref,
                                               const EfficiencyCurve& other,
                                               double rel_tol = 1e-9) {
  const double beta_a = ref.a / other.a;
  const double beta_b = std::sqrt(ref.b / other.b);
  if (beta_a <= 0.0 || !std::isfinite(beta_a) || !std::isfinite(beta_b)) {
    return std::nullopt;
  }
  if (std::abs(beta_a - beta_b) > rel_tol * std::max(beta_a, beta_b)) {
    return std::nullopt;
  }
  return beta_a;
}

// Family with the first unit as reference, or nullopt when any unit is not
// a scaled copy of it.
inline std::optional<SimilarFamily> detect_family(const Fleet& fleet,
                                                  double rel_tol = 1e-9) {
  if (fleet.units.empty()) return std::nullopt;
  SimilarFamily fam;
  fam.reference = fleet.units.front().curve;
  fam.betas.reserve(fleet.units.size());
  fam.betas.push_back(1.0);
  for (std::size_t i = 1; i < fleet.units.size(); ++i) {
    auto beta = similarity_factor(fam.reference, fleet.units[i].curve, rel_tol);
    if (!beta) return std::nullopt;
    fam.betas.push_back(*beta);
  }
  return fam;
}

}  // namespace effdispatch
