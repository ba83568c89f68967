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

#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dtg {

/// How the pulse detuning `mu` maps onto the carrier angular frequency.
///   relative_to_omega_z: carrier = omega_z + mu (mu = -0.06 omega_z drives at 0.94 omega_z)
///   absolute:            carrier = mu
enum class DetuningConvention { relative_to_omega_z, absolute };

std::string_view to_string(DetuningConvention convention);
DetuningConvention detuning_convention_from_string(std::string_view text);

/// Two identical ions: ion 1 in a stationary trap at the origin, ion 2 in a
/// trap moving along y at speed v, offset by d along x. SI units, angular
/// frequencies in rad/s.
struct PhysicalConfig {
  double ion_mass = 0;
  double ion_charge = 0;
  double omega_x = 0;
  double omega_y = 0;
  double omega_z = 0;
  double d = 0;
  double v = 0;
  double w = 0;
  double k_eff = 0;
  std::array<double, 2> nbar{0, 0};
  DetuningConvention detuning_convention = DetuningConvention::relative_to_omega_z;

  /// K = e^2 / (4 pi eps0) evaluated with ion_charge.
  double coulomb_constant() const;
  /// Carrier angular frequency for detuning mu under the configured convention.
  double drive_frequency(double mu) const;
  /// sqrt(hbar / (2 m omega_z)).
  double ground_state_width() const;
  /// k_eff * ground_state_width().
  double lamb_dicke_parameter() const;

  bool operator==(const PhysicalConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { parse, validation };
  ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws ConfigError(validation) if any invariant fails.
void validate(const PhysicalConfig& config);

/// Parses a JSON configuration document. Applies defaults for ion_charge,
/// k_eff, nbar and detuning_convention, then validates.
PhysicalConfig load_config(std::string_view text);
PhysicalConfig load_config_file(const std::filesystem::path& path);

nlohmann::json config_to_json(const PhysicalConfig& config);
PhysicalConfig config_from_json(const nlohmann::json& doc);
/// Canonical serialization; load_config(serialize_config(c)) == c.
std::string serialize_config(const PhysicalConfig& config);

/// Sets one scalar field (any top-level key accepted by load_config, plus
/// "omega_xy" and a scalar "nbar") and revalidates.
PhysicalConfig with_override(const PhysicalConfig& config, std::string_view key, double value);

/// 171Yb+, omega_xy = 2pi x 2.5 MHz, omega_z = 2pi x 5 MHz, d = w = 10 um.
PhysicalConfig reference_config(double v = 0.2);

struct FrequencyScales {
  double f1 = 0;  // v / d
  double f2 = 0;  // sqrt(K / (m d^3))
  double f3 = 0;  // in-plane trap frequency
};

FrequencyScales frequency_scales(const PhysicalConfig& config);

/// Gate window [t0, t0 + T], symmetric about closest approach at t = 0.
struct GateWindow {
  double t0 = 0;
  double T = 0;
  double end() const { return t0 + T; }
  bool contains(double t) const { return t >= t0 && t <= t0 + T; }
};

GateWindow gate_window(const PhysicalConfig& config);

}  // namespace dtg
