#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "effdispatch/commitment.hpp"

namespace effdispatch {

// Malformed or structurally invalid fleet file. The message carries the
// parser's line/column for syntax errors and the element path otherwise.
class FleetParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 9 significant digits everywhere output is rendered, so identical inputs
// produce byte-identical reports and CSV files.
inline std::string format_number(double v) { return detail::num_str(v); }

// Fleet files are JSON documents with a single top-level key:
//
//   {
//     "units": [
//       { "id": "u1", "a": 0.022, "b": 0.0001375, "p_max": 160.0 },
//       ...
//     ]
//   }
//
// `p_max` may be omitted and defaults to a/b, the second zero of the
// efficiency curve. Line comments (//, /* */) are permitted. Unknown keys
// are rejected, naming the offending element.
inline Fleet parse_fleet_json(const std::string& text,
                              const std::string& origin = "<string>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw FleetParseError(origin + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw FleetParseError(origin + ": top level must be an object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "units") {
      throw FleetParseError(origin + ": unknown top-level key \"" + key +
                            "\" (expected only \"units\")");
    }
  }
  if (!doc.contains("units") || !doc["units"].is_array()) {
    throw FleetParseError(origin + ": missing \"units\" array");
  }

  Fleet fleet;
  std::size_t index = 0;
  for (const auto& item : doc["units"]) {
    const std::string where = origin + ": units[" + std::to_string(index) + "]";
    if (!item.is_object()) {
      throw FleetParseError(where + " must be an object");
    }
    for (const auto& [key, _] : item.items()) {
      if (key != "id" && key != "a" && key != "b" && key != "p_max") {
        throw FleetParseError(where + ": unknown key \"" + key +
                              "\" (allowed: id, a, b, p_max)");
      }
    }
    Unit unit;
    if (!item.contains("id") || !item["id"].is_string()) {
      throw FleetParseError(where + ": \"id\" must be a string");
    }
    unit.id = item["id"].get<std::string>();
    for (const char* key : {"a", "b"}) {
      if (!item.contains(key) || !item[key].is_number()) {
        throw FleetParseError(where + ": \"" + key + "\" must be a number");
      }
    }
    unit.curve.a = item["a"].get<double>();
    unit.curve.b = item["b"].get<double>();
    if (item.contains("p_max")) {
      if (!item["p_max"].is_number()) {
        throw FleetParseError(where + ": \"p_max\" must be a number");
      }
      unit.curve.p_max = item["p_max"].get<double>();
    } else {
      unit.curve.p_max = unit.curve.a / unit.curve.b;
    }
    fleet.units.push_back(std::move(unit));
    ++index;
  }
  return fleet;
}

inline Fleet load_fleet_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FleetParseError("cannot open fleet file \"" + path + "\"");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_fleet_json(buf.str(), path);
}

inline std::string subset_label(const Fleet& fleet,
                                const std::vector<std::size_t>& subset) {
  std::string s;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (k) s += '+';
    s += fleet.units[subset[k]].id;
  }
  return s;
}

// CSV wire format: header `pt,active_set,p_<id>...,w_t,eta_t`, one row per
// sweep grid point, inactive units rendered as 0.
inline std::string format_sweep_csv(const Fleet& fleet,
                                    const std::vector<SweepRow>& rows) {
  std::string out = "pt,active_set";
  for (const auto& u : fleet.units) out += ",p_" + u.id;
  out += ",w_t,eta_t\n";
  for (const auto& row : rows) {
    out += format_number(row.p_t);
    out += ',';
    out += subset_label(fleet, row.subset);
    for (double p : row.fleet_loads) {
      out += ',';
      out += format_number(p);
    }
    out += ',';
    out += format_number(row.w_t);
    out += ',';
    out += format_number(row.eta_t);
    out += '\n';
  }
  return out;
}

}  // namespace effdispatch
