/*
 *            Copyright 2026 The mlr Development Team
 *
 *      Licensed under the Apache License, Version 2.0 (the "License")
 *
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *              http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mlr/errors.hpp"

namespace mlr::runner {

enum class Kind { real, integer, text, list, flag };

struct KeySpec {
  std::string section;
  std::string key;
  Kind kind;
  std::string fallback;            // empty: no default
  std::vector<std::string> kinds;  // probe kinds that accept the key; empty means all
  std::string help;
};

inline const std::vector<std::string>& probe_kinds() {
  static const std::vector<std::string> k{"wf",     "ik",          "one-sided", "local-decay",
                                          "prop31", "escape",      "free-kernel"};
  return k;
}

// Every accepted key with its default.  Order here is the order of the
// manifest.
inline const std::vector<KeySpec>& schema() {
  using K = Kind;
  const std::vector<std::string> kp{"wf", "prop31"}, cones{"ik", "one-sided"}, lapk{"wf", "ik", "one-sided", "free-kernel"};
  static const std::vector<KeySpec> s{
      {"model", "dim", K::integer, "1", {}, "lattice dimension"},
      {"model", "potential", K::text, "power_law", {}, "zero | power_law | dipole"},
      {"model", "amplitude", K::real, "0.5", {}, "potential amplitude"},
      {"model", "mu", K::real, "0.5", {}, "decay order of the potential"},
      {"model", "cap_fraction", K::real, "0.125", {}, "absorbing layer width over L"},
      {"model", "cap_strength", K::real, "1", {}, "absorbing layer height"},
      {"model", "boundary", K::text, "dirichlet", {}, "dirichlet | periodic"},

      {"probe", "kind", K::text, "", {}, "wf | ik | one-sided | local-decay | prop31 | escape | free-kernel"},
      {"probe", "lambda", K::real, "1", {}, "energy"},
      {"probe", "branch", K::text, "plus", lapk, "plus | minus"},
      {"probe", "x", K::list, "", kp, "position of the left bump (scale h)"},
      {"probe", "xi", K::list, "", kp, "momentum of the left bump"},
      {"probe", "y", K::list, "", kp, "kernel point y"},
      {"probe", "eta", K::list, "", kp, "kernel point eta"},
      {"probe", "h_list", K::list, "0.125,0.0625,0.03125,0.015625", kp, "semiclassical scales"},
      {"probe", "delta1", K::real, "0.2", {"wf", "prop31", "escape"}, "position radius"},
      {"probe", "delta2", K::real, "0.2", {"wf", "prop31", "escape"}, "momentum radius"},
      {"probe", "expectation", K::text, "decay", kp, "decay | control | unchecked"},
      {"probe", "min_radius", K::integer, "64", kp, "smallest box radius"},
      {"probe", "max_radius", K::integer, "4096", kp, "largest box radius"},
      {"probe", "gamma_minus", K::real, "-0.3", {"ik"}, "incoming cone opening"},
      {"probe", "gamma_plus", K::real, "0.3", {"ik"}, "outgoing cone opening"},
      {"probe", "weight", K::real, "1", {"ik"}, "weight order N"},
      {"probe", "gamma", K::real, "-0.4", {"one-sided"}, "cone opening"},
      {"probe", "nu", K::real, "3", {"one-sided", "local-decay"}, "weight decay order"},
      {"probe", "s", K::real, "1", {"one-sided"}, "weight growth order"},
      {"probe", "radii", K::list, "128,256,512", cones, "box radii"},
      {"probe", "r0", K::real, "4", cones, "radial cutoff of the cone symbols"},
      {"probe", "window_half_width", K::real, "0.4", cones, "energy window half-width"},
      {"probe", "taper", K::flag, "true", cones, "keep cone symbols off the absorbing layer"},
      {"probe", "bounded_factor", K::real, "1.2", cones, "allowed growth across radii"},
      {"probe", "eps_f", K::real, "0.2", {"local-decay", "prop31"}, "energy cutoff half-width"},
      {"probe", "radius", K::integer, "512", {"local-decay", "free-kernel"}, "box radius"},
      {"probe", "t_min", K::real, "10", {"local-decay"}, "first time"},
      {"probe", "t_max", K::real, "200", {"local-decay"}, "last time"},
      {"probe", "t_points", K::integer, "8", {"local-decay"}, "log-spaced times"},
      {"probe", "reflection_fraction", K::real, "0.8", {"local-decay", "prop31"}, "usable fraction of the box"},
      {"probe", "time_points", K::integer, "32", {"prop31"}, "log-spaced times per h"},
      {"probe", "horizon_exponent", K::real, "2", {"prop31"}, "T(h) = h^-exponent"},
      {"probe", "x2", K::list, "3", {"escape"}, "base position (scale h)"},
      {"probe", "xi2", K::list, "1.5707963267948966", {"escape"}, "base momentum"},
      {"probe", "h", K::real, "0.125", {"escape"}, "scale of the transport check"},
      {"probe", "depth", K::integer, "2", {"escape"}, "ladder depth m"},
      {"probe", "constants", K::list, "1,1", {"escape"}, "C_1 .. C_m"},
      {"probe", "control_delta2", K::real, "1", {"escape"}, "momentum radius of the negative control"},
      {"probe", "energy_radius", K::integer, "48", {"escape"}, "dense ring radius"},
      {"probe", "energy_delta1", K::real, "1.5", {"escape"}, "position radius on the ring"},
      {"probe", "energy_delta2", K::real, "1", {"escape"}, "momentum radius on the ring"},
      {"probe", "energy_h_list", K::list, "0.25,0.125,0.0625", {"escape"}, "scales of the energy check"},
      {"probe", "energy_t", K::list, "0,1,5", {"escape"}, "times of the energy check"},
      {"probe", "monotonicity_h", K::real, "0.125", {"escape"}, "scale of the monotonicity check"},
      {"probe", "monotonicity_t", K::list, "1,5,20", {"escape"}, "times of the monotonicity check"},
      {"probe", "n_target", K::real, "1", {"escape"}, "target order N"},

      {"numerics", "seed", K::integer, "24301", {}, "seed of every random start"},
      {"numerics", "norm_tol", K::real, "0.001", {}, "power iteration tolerance"},
      {"numerics", "norm_max_iter", K::integer, "3000", {}, "power iteration cap"},
      {"numerics", "lap_tol", K::real, "0.001", {}, "epsilon sequence convergence"},
      {"numerics", "eps_first", K::integer, "3", {}, "first epsilon 2^-k"},
      {"numerics", "eps_last", K::integer, "30", {}, "last epsilon 2^-k"},
      {"numerics", "solver", K::text, "automatic", {}, "automatic | banded | dense | iterative"},
      {"numerics", "resolution", K::text, "", {}, "enforce | warn_only | off (default depends on the probe)"},
      {"numerics", "chebyshev_tol", K::real, "1e-10", {}, "Chebyshev truncation"},
      {"numerics", "classify_grid", K::integer, "4096", {}, "momentum grid of the classifier"},
      {"numerics", "jobs", K::integer, "1", {}, "worker threads"},

      {"output", "dir", K::text, ".", {}, "output directory"},
      {"output", "formats", K::list, "csv,json", {}, "csv, json"},

      {"criteria", "min_slope", K::real, "", {"wf", "prop31"}, "fitted h-slope at least"},
      {"criteria", "max_slope", K::real, "", {"wf", "prop31"}, "fitted h-slope at most"},
      {"criteria", "max_residual", K::real, "", {"wf", "prop31"}, "largest log10 fit residual"},
      {"criteria", "max_ratio", K::real, "", cones, "largest norm over smallest norm"},
      {"criteria", "min_kappa", K::real, "", {"local-decay"}, "fitted time decay at least"},
      {"criteria", "max_error", K::real, "", {"free-kernel"}, "relative error against the closed form"},
      {"criteria", "transport", K::flag, "", {"escape"}, "every ladder step passes the transport check"},
      {"criteria", "control_fails", K::flag, "", {"escape"}, "the wide momentum window breaks transport"},
      {"criteria", "min_energy_exponent", K::real, "", {"escape"}, "energy defect exponent at least"},
      {"criteria", "monotonicity", K::flag, "", {"escape"}, "margins respect the fitted bound"},
  };
  return s;
}

inline bool accepts(const KeySpec& k, const std::string& kind) {
  return k.kinds.empty() || std::find(k.kinds.begin(), k.kinds.end(), kind) != k.kinds.end();
}

// A validated config: every accepted key of the probe kind, defaults
// filled in.  Criteria appear only when declared.
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return from_tree(tree);
  }

  static Config parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config from_tree(const boost::property_tree::ptree& tree) {
    Config c;
    std::string kind;
    if (auto probe = tree.get_child_optional("probe")) kind = probe->get<std::string>("kind", "");
    if (kind.empty()) throw ConfigError("config: [probe] needs a kind");
    if (std::find(probe_kinds().begin(), probe_kinds().end(), kind) == probe_kinds().end())
      throw ConfigError("config: unknown probe kind '" + kind + "'");
    c.kind_ = kind;

    for (const auto& [section, body] : tree) {
      if (!body.data().empty() && body.empty())
        throw ConfigError("config: key '" + section + "' outside a section");
      bool known_section = false;
      for (const auto& k : schema()) known_section |= k.section == section;
      if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
      for (const auto& [key, value] : body) {
        auto it = std::find_if(schema().begin(), schema().end(),
                               [&](const KeySpec& k) { return k.section == section && k.key == key; });
        if (it == schema().end()) throw ConfigError("config: unknown key " + section + "." + key);
        if (!accepts(*it, kind))
          throw ConfigError("config: " + section + "." + key + " does not apply to probe kind " + kind);
        std::string v = value.data();
        check_value(*it, v);
        c.values_[section][key] = v;
      }
    }
    for (const auto& k : schema()) {
      if (!accepts(k, kind) || k.section == "criteria") continue;
      auto& sec = c.values_[k.section];
      if (!sec.count(k.key)) {
        if (k.fallback.empty() && k.key != "resolution")
          throw ConfigError("config: " + k.section + "." + k.key + " is required for probe kind " + kind);
        sec[k.key] = k.fallback;
      }
    }
    if (c.text("numerics", "resolution").empty())
      c.values_["numerics"]["resolution"] = (kind == "ik" || kind == "one-sided") ? "warn_only" : "enforce";
    c.validate();
    return c;
  }

  const std::string& kind() const { return kind_; }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key);
  }

  const std::string& text(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    if (s == values_.end() || !s->second.count(key))
      throw ConfigError("config: " + section + "." + key + " is not set");
    return s->second.at(key);
  }

  double real(const std::string& section, const std::string& key) const { return to_real(text(section, key)); }
  long integer(const std::string& section, const std::string& key) const { return to_integer(text(section, key)); }
  bool flag(const std::string& section, const std::string& key) const { return to_flag(text(section, key)); }
  std::vector<double> list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split(text(section, key))) out.push_back(to_real(p));
    return out;
  }
  std::vector<std::string> words(const std::string& section, const std::string& key) const {
    return split(text(section, key));
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    auto it = std::find_if(schema().begin(), schema().end(),
                           [&](const KeySpec& k) { return k.section == section && k.key == key; });
    if (it == schema().end()) throw ConfigError("config: unknown key " + section + "." + key);
    check_value(*it, value);
    values_[section][key] = value;
  }

  // Sections in schema order, keys in schema order.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> resolved() const {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
    for (const auto& k : schema()) {
      if (!has(k.section, k.key)) continue;
      if (out.empty() || out.back().first != k.section) out.push_back({k.section, {}});
      out.back().second.emplace_back(k.key, text(k.section, k.key));
    }
    return out;
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s + ",") {
      if (ch == ',') {
        auto b = cur.find_first_not_of(" \t"), e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    return out;
  }

  static double to_real(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError("config: '" + s + "' is not a number");
    return v;
  }

  static long to_integer(const std::string& s) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("config: '" + s + "' is not an integer");
    return v;
  }

  static bool to_flag(const std::string& s) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ConfigError("config: '" + s + "' is not true or false");
  }

 private:
  static void check_value(const KeySpec& k, const std::string& v) {
    switch (k.kind) {
      case Kind::real: to_real(v); break;
      case Kind::integer: to_integer(v); break;
      case Kind::flag: to_flag(v); break;
      case Kind::list:
        if (k.section != "output")
          for (const auto& p : split(v)) to_real(p);
        break;
      case Kind::text: break;
    }
  }

  void require(bool ok, const std::string& msg) const {
    if (!ok) throw ConfigError("config: " + msg);
  }

  void one_of(const std::string& section, const std::string& key, std::initializer_list<const char*> options) const {
    const auto& v = text(section, key);
    for (const char* o : options)
      if (v == o) return;
    throw ConfigError("config: " + section + "." + key + " = '" + v + "' is not allowed");
  }

  void validate() const {
    one_of("model", "potential", {"zero", "power_law", "dipole"});
    one_of("model", "boundary", {"dirichlet", "periodic"});
    one_of("numerics", "solver", {"automatic", "banded", "dense", "iterative"});
    one_of("numerics", "resolution", {"enforce", "warn_only", "off"});
    for (const auto& f : words("output", "formats"))
      require(f == "csv" || f == "json", "output.formats takes csv and json");
    require(integer("model", "dim") >= 1 && integer("model", "dim") <= 3, "model.dim must be 1, 2 or 3");
    require(real("model", "mu") > 0.0, "model.mu must be positive");
    require(integer("numerics", "jobs") >= 1, "numerics.jobs must be >= 1");
    require(real("numerics", "norm_tol") > 0.0 && real("numerics", "norm_tol") <= 0.1,
            "numerics.norm_tol must lie in (0, 0.1]");
    require(integer("numerics", "eps_first") <= integer("numerics", "eps_last"), "empty epsilon sequence");
    require(integer("numerics", "seed") >= 0, "numerics.seed must be non-negative");

    const auto& k = kind_;
    if (has("probe", "branch")) one_of("probe", "branch", {"plus", "minus"});
    if (k == "wf" || k == "prop31") {
      one_of("probe", "expectation", {"decay", "control", "unchecked"});
      const auto d = static_cast<std::size_t>(integer("model", "dim"));
      for (const char* c : {"x", "xi", "y", "eta"})
        require(list("probe", c).size() == d, std::string("probe.") + c + " needs one entry per dimension");
      auto hs = list("probe", "h_list");
      require(!hs.empty(), "probe.h_list is empty");
      for (double h : hs) require(h > 0.0 && h <= 1.0, "probe.h_list entries must lie in (0, 1]");
      require(real("probe", "delta1") > 0.0 && real("probe", "delta2") > 0.0, "bump radii must be positive");
    }
    if (k == "ik" || k == "one-sided") {
      auto radii = list("probe", "radii");
      require(!radii.empty(), "probe.radii is empty");
      for (double r : radii) require(r >= 8 && r == std::floor(r), "probe.radii must be integers >= 8");
    }
    if (k == "ik") {
      double gm = real("probe", "gamma_minus"), gp = real("probe", "gamma_plus");
      require(-1.0 < gm && gm < gp && gp < 1.0, "need -1 < gamma_minus < gamma_plus < 1");
    }
    if (k == "one-sided") {
      double nu = real("probe", "nu"), s = real("probe", "s");
      require(nu > 1.0, "one-sided probe needs nu > 1");
      require(s > 0.0 && s < nu - 1.0, "one-sided probe needs 0 < s < nu - 1");
      require(std::fabs(real("probe", "gamma")) < 1.0, "probe.gamma must lie in (-1, 1)");
    }
    if (k == "local-decay") {
      require(real("probe", "nu") >= 0.0, "probe.nu must be non-negative");
      require(real("probe", "t_min") > 0.0 && real("probe", "t_max") > real("probe", "t_min"), "need 0 < t_min < t_max");
      require(integer("probe", "t_points") >= 2, "probe.t_points must be >= 2");
    }
    if (k == "escape") {
      require(integer("probe", "depth") >= 0, "probe.depth must be >= 0");
      require(list("probe", "constants").size() == static_cast<std::size_t>(integer("probe", "depth")),
              "probe.constants needs one entry per ladder step");
      require(list("probe", "energy_h_list").size() >= 2, "probe.energy_h_list needs two scales");
      require(integer("probe", "energy_radius") <= 64, "the energy check runs on boxes of radius <= 64");
    }
    if (k == "free-kernel" || k == "local-decay")
      require(integer("probe", "radius") >= 16, "probe.radius must be >= 16");
  }

  std::string kind_;
  std::map<std::string, Section> values_;
};

}  // namespace mlr::runner
