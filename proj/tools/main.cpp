// Command-line front end: fleet-file ingestion, solver dispatch, and
// CSV/report emission. Exit codes: 0 success, 1 infeasible or verification
// failure, 2 usage or parse error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "effdispatch/fleet_io.hpp"
#include "effdispatch/oracle.hpp"

namespace {

using namespace effdispatch;

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;

Fleet load_valid_fleet(const std::string& path) {
  Fleet fleet = load_fleet_file(path);
  const auto report = validate(fleet);
  if (!report.valid()) {
    std::string msg = "invalid fleet \"" + path + "\":";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw InfeasibleError(msg, 0.0);
  }
  return fleet;
}

void print_allocation(const Fleet& fleet,
                      const std::vector<std::size_t>& subset,
                      const Allocation& a) {
  std::printf("active_set: %s\n", subset_label(fleet, subset).c_str());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    std::printf("  p_%s = %s\n", fleet.units[subset[k]].id.c_str(),
                format_number(a.loads[k]).c_str());
  }
  std::printf("p_t = %s\nw_t = %s\neta_t = %s\n", format_number(a.p_t).c_str(),
              format_number(a.w_t).c_str(), format_number(a.eta_t).c_str());

  // Shared marginal output, shown when the optimum is interior.
  double sum = 0.0, lo = 0.0, hi = 0.0;
  std::size_t interior = 0;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const auto& c = fleet.units[subset[k]].curve;
    const double p = a.loads[k];
    if (p > 1e-9 && p < c.p_max - 1e-9) {
      const double g = c.marginal_output(p);
      if (interior == 0) lo = hi = g;
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      sum += g;
      ++interior;
    }
  }
  if (interior > 0 && interior == subset.size() &&
      hi - lo <= 1e-6 * std::max(1.0, std::abs(sum / interior))) {
    std::printf("marginal_output = %s\n",
                format_number(sum / interior).c_str());
  }
}

int cmd_validate(const std::string& path) {
  const Fleet fleet = load_fleet_file(path);
  bool all_ok = true;
  const auto fleet_report = validate(fleet);
  for (const auto& u : fleet.units) {
    const auto r = validate(u.curve);
    if (r.valid()) {
      std::printf("unit %s: ok (peak %s at p = %s, cap %s)\n", u.id.c_str(),
                  format_number(u.curve.peak_efficiency()).c_str(),
                  format_number(u.curve.peak_input()).c_str(),
                  format_number(u.curve.p_max).c_str());
    } else {
      all_ok = false;
      for (const auto& v : r.violations) {
        std::printf("unit %s: INVALID: %s\n", u.id.c_str(), v.c_str());
      }
    }
  }
  for (const auto& v : fleet_report.violations) {
    if (v.find("unit \"") != 0) {  // per-unit lines already printed
      std::printf("fleet: INVALID: %s\n", v.c_str());
      all_ok = false;
    }
  }
  return all_ok ? kOk : kInfeasible;
}

int cmd_allocate(const std::string& path, double pt,
                 const std::vector<std::string>& unit_ids) {
  const Fleet fleet = load_valid_fleet(path);
  if (unit_ids.empty()) {
    const CommitmentResult r = best_commitment(fleet, pt);
    print_allocation(fleet, r.subset, r.allocation);
    return kOk;
  }
  std::vector<std::size_t> subset;
  for (const auto& id : unit_ids) {
    auto it = std::find_if(fleet.units.begin(), fleet.units.end(),
                           [&](const Unit& u) { return u.id == id; });
    if (it == fleet.units.end()) {
      throw DomainError("unknown unit id \"" + id + "\"");
    }
    subset.push_back(static_cast<std::size_t>(it - fleet.units.begin()));
  }
  std::sort(subset.begin(), subset.end());
  if (std::adjacent_find(subset.begin(), subset.end()) != subset.end()) {
    throw DomainError("--units lists a unit more than once");
  }
  std::vector<Unit> units;
  for (std::size_t i : subset) units.push_back(fleet.units[i]);
  const Allocation a = allocate_best(units, pt);
  print_allocation(fleet, subset, a);
  return kOk;
}

int cmd_schedule(const std::string& path, double pt_min, double pt_max,
                 double scan_step) {
  const Fleet fleet = load_valid_fleet(path);
  if (scan_step <= 0.0) scan_step = (pt_max - pt_min) / 1000.0;
  const SwitchingSchedule sched =
      switching_schedule(fleet, pt_min, pt_max, scan_step);
  std::printf("%zu regime(s), %zu breakpoint(s)\n", sched.regimes.size(),
              sched.breakpoints.size());
  for (const auto& regime : sched.regimes) {
    std::printf("  [%s, %s%c  %s  (%s)\n", format_number(regime.lo).c_str(),
                format_number(regime.hi).c_str(),
                &regime == &sched.regimes.back() ? ']' : ')',
                subset_label(fleet, regime.active).c_str(),
                regime.rule == RegimeRule::similar_proportional
                    ? "proportional split"
                    : "stationary split");
  }
  const BreakpointReport report = verify_breakpoints(sched, fleet);
  for (const auto& c : report.checks) {
    std::printf("breakpoint %s: eta_left = %s, eta_right = %s%s -> %s\n",
                format_number(c.p_t).c_str(),
                format_number(c.eta_left).c_str(),
                format_number(c.eta_right).c_str(),
                c.at_cap ? ", at capacity" : "",
                c.pass ? "ok" : "MISMATCH");
  }
  return report.all_pass() ? kOk : kInfeasible;
}

int cmd_sweep(const std::string& path, double pt_min, double pt_max,
              double step, const std::string& out_path) {
  const Fleet fleet = load_valid_fleet(path);
  const auto rows = sweep(fleet, pt_min, pt_max, step);
  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot write \"%s\"\n", out_path.c_str());
    return kUsage;
  }
  out << format_sweep_csv(fleet, rows);
  if (!out) {
    std::fprintf(stderr, "write failed for \"%s\"\n", out_path.c_str());
    return kUsage;
  }
  std::printf("rows: %zu\n", rows.size());
  std::string changes;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].subset != rows[k - 1].subset) {
      if (!changes.empty()) changes += ", ";
      changes += format_number(0.5 * (rows[k - 1].p_t + rows[k].p_t));
    }
  }
  std::printf("breakpoints encountered: %s\n",
              changes.empty() ? "none" : changes.c_str());
  return kOk;
}

int cmd_min_input(const std::string& path, double wt) {
  const Fleet fleet = load_valid_fleet(path);
  const MinInputResult r = min_input_for_output(fleet, wt);
  std::printf("p_t = %s\n", format_number(r.p_t).c_str());
  print_allocation(fleet, r.commitment.subset, r.commitment.allocation);
  return kOk;
}

int cmd_oracle_check(const std::string& path, double pt, double step) {
  const Fleet fleet = load_valid_fleet(path);
  if (fleet.units.size() > 3) {
    throw DomainError("oracle supports at most 3 units, fleet has " +
                      std::to_string(fleet.units.size()));
  }
  if (step <= 0.0) step = pt > 0.0 ? pt / 1000.0 : 1.0;
  const CommitmentResult solver = best_commitment(fleet, pt);
  const OracleCommitment oracle = oracle_commitment(fleet, pt, step);
  auto loads_str = [&](const std::vector<std::size_t>& subset,
                       const Allocation& a) {
    std::string s;
    for (std::size_t k = 0; k < subset.size(); ++k) {
      if (k) s += ", ";
      s += "p_" + fleet.units[subset[k]].id + " = " +
           format_number(a.loads[k]);
    }
    return s.empty() ? std::string("idle") : s;
  };
  std::printf("solver: set %s, w_t = %s (%s)\n",
              subset_label(fleet, solver.subset).c_str(),
              format_number(solver.allocation.w_t).c_str(),
              loads_str(solver.subset, solver.allocation).c_str());
  std::printf("oracle: set %s, w_t = %s (%s; step %s, depth %d)\n",
              subset_label(fleet, oracle.subset).c_str(),
              format_number(oracle.result.allocation.w_t).c_str(),
              loads_str(oracle.subset, oracle.result.allocation).c_str(),
              format_number(oracle.result.grid_step).c_str(),
              oracle.result.refinement_depth);
  const double wo = oracle.result.allocation.w_t;
  const double rel = std::abs(solver.allocation.w_t - wo) /
                     std::max(1.0, std::abs(wo));
  std::printf("relative w_t gap: %s\n", format_number(rel).c_str());
  if (rel > 1e-4) {
    std::fprintf(stderr, "solver and oracle disagree beyond 1e-4\n");
    return kInfeasible;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Energy-efficiency-optimal load distribution and unit switching for "
      "fleets of devices with concave efficiency curves"};
  app.require_subcommand(1);

  std::string file, out_path, units_csv;
  double pt = 0.0, wt = 0.0, pt_min = 0.0, pt_max = 0.0;
  double step = 0.0, scan_step = 0.0;

  auto* validate_cmd = app.add_subcommand("validate", "Check a fleet file");
  validate_cmd->add_option("file", file, "fleet file")->required();

  auto* allocate_cmd =
      app.add_subcommand("allocate", "Optimal split for a total input");
  allocate_cmd->add_option("file", file)->required();
  allocate_cmd->add_option("--pt", pt, "total input")->required();
  allocate_cmd->add_option("--units", units_csv,
                           "comma-separated unit ids (default: choose the "
                           "best subset)");

  auto* schedule_cmd =
      app.add_subcommand("schedule", "Switching schedule over an input range");
  schedule_cmd->add_option("file", file)->required();
  schedule_cmd->add_option("--pt-min", pt_min)->required();
  schedule_cmd->add_option("--pt-max", pt_max)->required();
  schedule_cmd->add_option("--scan-step", scan_step,
                           "grid step (default: range/1000)");

  auto* sweep_cmd = app.add_subcommand("sweep", "CSV table over an input range");
  sweep_cmd->add_option("file", file)->required();
  sweep_cmd->add_option("--pt-min", pt_min)->required();
  sweep_cmd->add_option("--pt-max", pt_max)->required();
  sweep_cmd->add_option("--step", step)->required();
  sweep_cmd->add_option("--out", out_path, "output CSV path")->required();

  auto* min_input_cmd =
      app.add_subcommand("min-input", "Smallest input for a target output");
  min_input_cmd->add_option("file", file)->required();
  min_input_cmd->add_option("--wt", wt, "target output")->required();

  auto* oracle_cmd =
      app.add_subcommand("oracle-check", "Solver vs brute-force comparison");
  oracle_cmd->add_option("file", file)->required();
  oracle_cmd->add_option("--pt", pt)->required();
  oracle_cmd->add_option("--step", step, "oracle grid step (default: pt/1000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(file);
    if (*allocate_cmd) {
      std::vector<std::string> ids;
      std::stringstream ss(units_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) ids.push_back(tok);
      }
      return cmd_allocate(file, pt, ids);
    }
    if (*schedule_cmd) return cmd_schedule(file, pt_min, pt_max, scan_step);
    if (*sweep_cmd) return cmd_sweep(file, pt_min, pt_max, step, out_path);
    if (*min_input_cmd) return cmd_min_input(file, wt);
    if (*oracle_cmd) return cmd_oracle_check(file, pt, step);
  } catch (const FleetParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    if (e.limit() > 0.0) {
      std::fprintf(stderr, "limit: %s\n", format_number(e.limit()).c_str());
    }
    return kInfeasible;
  }
  return kUsage;
}
