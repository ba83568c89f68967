// Copyright 2026 The dtg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dtg/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dtg/constants.hpp"

namespace dtg {

namespace {

constexpr std::string_view kRelative = "relative-to-omega_z";
constexpr std::string_view kAbsolute = "absolute";

[[noreturn]] void parse_fail(const std::string& what) {
  throw ConfigError(ConfigError::Kind::parse, what);
}

[[noreturn]] void invalid(const std::string& what) {
  throw ConfigError(ConfigError::Kind::validation, what);
}

double number_field(const nlohmann::json& doc, const char* key) {
  const auto& value = doc.at(key);
  if (!value.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
  return value.get<double>();
}

double required(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) parse_fail(std::string("missing required field '") + key + "'");
  return number_field(doc, key);
}

double optional(const nlohmann::json& doc, const char* key, double fallback) {
  return doc.contains(key) ? number_field(doc, key) : fallback;
}

void check_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0) {
    invalid(std::string(name) + " must be finite and strictly positive");
  }
}

}  // namespace

std::string_view to_string(DetuningConvention convention) {
  return convention == DetuningConvention::absolute ? kAbsolute : kRelative;
}

DetuningConvention detuning_convention_from_string(std::string_view text) {
  if (text == kRelative || text == "relative") return DetuningConvention::relative_to_omega_z;
  if (text == kAbsolute) return DetuningConvention::absolute;
  parse_fail("unknown detuning_convention '" + std::string(text) + "'");
}

double PhysicalConfig::coulomb_constant() const { return constants::coulomb_constant(ion_charge); }

double PhysicalConfig::drive_frequency(double mu) const {
  return detuning_convention == DetuningConvention::absolute ? mu : omega_z + mu;
}

double PhysicalConfig::ground_state_width() const {
  return std::sqrt(constants::hbar / (2.0 * ion_mass * omega_z));
}

double PhysicalConfig::lamb_dicke_parameter() const { return k_eff * ground_state_width(); }

void validate(const PhysicalConfig& c) {
  check_positive(c.ion_mass, "ion_mass");
  // Zero charge is accepted: it is the decoupled reference case.
  if (!std::isfinite(c.ion_charge) || c.ion_charge < 0) {
    invalid("ion_charge must be finite and non-negative");
  }
  check_positive(c.omega_x, "omega_x");
  check_positive(c.omega_y, "omega_y");
  check_positive(c.omega_z, "omega_z");
  check_positive(c.d, "d");
  check_positive(c.v, "v");
  check_positive(c.w, "w");
  check_positive(c.k_eff, "k_eff");
  for (double n : c.nbar) {
    if (!std::isfinite(n) || n < 0) invalid("nbar entries must be finite and non-negative");
  }
  const double softening = 2.0 * c.coulomb_constant() / (c.ion_mass * c.d * c.d * c.d);
  if (!(c.omega_z * c.omega_z > softening)) {
    invalid("omega_z^2 <= 2K/(m d^3): the zigzag mode is unstable at closest approach");
  }
}

PhysicalConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) parse_fail("configuration must be a JSON object");
  static const char* const known[] = {"description", "species",  "ion_mass", "ion_charge",
                                      "omega_x",     "omega_y",  "omega_xy", "omega_z",
                                      "d",           "v",        "w",        "k_eff",
                                      "nbar",        "detuning_convention"};
  for (const auto& item : doc.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) parse_fail("unknown field '" + item.key() + "'");
  }

  PhysicalConfig c;
  try {
    if (doc.contains("ion_mass")) {
      c.ion_mass = number_field(doc, "ion_mass");
    } else if (doc.contains("species")) {
      const auto species = doc.at("species").get<std::string>();
      if (species != "171Yb+" && species != "Yb171") parse_fail("unknown species '" + species + "'");
      c.ion_mass = constants::yb171_mass;
    } else {
      parse_fail("one of 'ion_mass' or 'species' is required");
    }
    c.ion_charge = optional(doc, "ion_charge", constants::elementary_charge);
    if (doc.contains("omega_xy")) {
      if (doc.contains("omega_x") || doc.contains("omega_y")) {
        parse_fail("'omega_xy' cannot be combined with 'omega_x'/'omega_y'");
      }
      c.omega_x = c.omega_y = number_field(doc, "omega_xy");
    } else {
      c.omega_x = required(doc, "omega_x");
      c.omega_y = required(doc, "omega_y");
    }
    c.omega_z = required(doc, "omega_z");
    c.d = required(doc, "d");
    c.v = required(doc, "v");
    c.w = required(doc, "w");
    c.k_eff = optional(doc, "k_eff", constants::default_k_eff);
    c.nbar = {constants::default_nbar, constants::default_nbar};
    if (doc.contains("nbar")) {
      const auto& n = doc.at("nbar");
      if (n.is_number()) {
        c.nbar = {n.get<double>(), n.get<double>()};
      } else if (n.is_array() && n.size() == 2 && n[0].is_number() && n[1].is_number()) {
        c.nbar = {n[0].get<double>(), n[1].get<double>()};
      } else {
        parse_fail("'nbar' must be a number or an array of two numbers");
      }
    }
    if (doc.contains("detuning_convention")) {
      c.detuning_convention =
          detuning_convention_from_string(doc.at("detuning_convention").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("malformed configuration: ") + e.what());
  }
  validate(c);
  return c;
}

PhysicalConfig load_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail(std::string("configuration is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

PhysicalConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_fail("cannot open configuration file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

nlohmann::json config_to_json(const PhysicalConfig& c) {
  nlohmann::json doc;
  doc["ion_mass"] = c.ion_mass;
  doc["ion_charge"] = c.ion_charge;
  doc["omega_x"] = c.omega_x;
  doc["omega_y"] = c.omega_y;
  doc["omega_z"] = c.omega_z;
  doc["d"] = c.d;
  doc["v"] = c.v;
  doc["w"] = c.w;
  doc["k_eff"] = c.k_eff;
  doc["nbar"] = {c.nbar[0], c.nbar[1]};
  doc["detuning_convention"] = std::string(to_string(c.detuning_convention));
  return doc;
}

std::string serialize_config(const PhysicalConfig& config) {
  return config_to_json(config).dump(2);
}

PhysicalConfig with_override(const PhysicalConfig& config, std::string_view key, double value) {
  nlohmann::json doc = config_to_json(config);
  const std::string k(key);
  if (k == "omega_xy") {
    doc["omega_x"] = value;
    doc["omega_y"] = value;
  } else if (k == "nbar") {
    doc["nbar"] = {value, value};
  } else if (k == "nbar1" || k == "nbar2") {
    doc["nbar"][k == "nbar1" ? 0 : 1] = value;
  } else if (doc.contains(k) && doc[k].is_number()) {
    doc[k] = value;
  } else {
    parse_fail("cannot override '" + k + "'");
  }
  return config_from_json(doc);
}

PhysicalConfig reference_config(double v) {
  PhysicalConfig c;
  c.ion_mass = constants::yb171_mass;
  c.ion_charge = constants::elementary_charge;
  c.omega_x = c.omega_y = 2.0 * constants::pi * 2.5e6;
  c.omega_z = 2.0 * constants::pi * 5.0e6;
  c.d = 10e-6;
  c.w = 10e-6;
  c.v = v;
  c.k_eff = constants::default_k_eff;
  c.nbar = {constants::default_nbar, constants::default_nbar};
  validate(c);
  return c;
}

FrequencyScales frequency_scales(const PhysicalConfig& c) {
  FrequencyScales s;
  s.f1 = c.v / c.d;
  s.f2 = std::sqrt(c.coulomb_constant() / (c.ion_mass * c.d * c.d * c.d));
  // Sweeps and the heatmap use the x axis (direction of closest approach).
  s.f3 = c.omega_x;
  return s;
}

GateWindow gate_window(const PhysicalConfig& c) { return {-c.w / (2.0 * c.v), c.w / c.v}; }

}  // namespace dtg
