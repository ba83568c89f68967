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

#include "dtg/modes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtg/constants.hpp"
#include "dtg/errors.hpp"

namespace dtg {

std::string_view to_string(Mode mode) { return mode == Mode::com ? "com" : "zigzag"; }

Eigen::Matrix2d stiffness_matrix(const PhysicalConfig& config, double R) {
  if (!(R > 0)) throw std::invalid_argument("stiffness_matrix: R must be positive");
  const double diag = config.ion_mass * config.omega_z * config.omega_z;
  const double coupling = config.coulomb_constant() / (R * R * R);
  Eigen::Matrix2d g;
  g << diag - coupling, coupling, coupling, diag - coupling;
  return g;
}

double zigzag_frequency_sq(const PhysicalConfig& config, double R) {
  return config.omega_z * config.omega_z - 2.0 * config.coulomb_constant() / (config.ion_mass * R * R * R);
}

namespace {

double checked_sqrt(double omega_sq, double t) {
  if (!(omega_sq > 0)) {
    throw ImaginaryFrequencyError("zigzag frequency is imaginary at t = " + std::to_string(t));
  }
  return std::sqrt(omega_sq);
}

}  // namespace

ModeFrequencies mode_frequencies(const PhysicalConfig& config, double t, SeparationMode separation_mode) {
  const double R = separation(config, t, separation_mode);
  return {t, config.omega_z, checked_sqrt(zigzag_frequency_sq(config, R), t)};
}

double ModeBasis::pair_weight(Mode mode) const {
  const int n = index_of(mode);
  return 2.0 * b(n, 0) * b(n, 1);
}

double ModeBasis::drive_weight(Mode mode, int s1, int s2) const {
  const int n = index_of(mode);
  return b(n, 0) * s1 + b(n, 1) * s2;
}

ModeBasis participation_matrix() {
  ModeBasis basis;
  const double h = 1.0 / std::sqrt(2.0);
  basis.b << h, h, h, -h;
  return basis;
}

ModeFrequencyProfile::ModeFrequencyProfile(const PhysicalConfig& config, SeparationMode separation_mode)
    : config_(config), separation_mode_(separation_mode) {
  softening_ = 2.0 * config.coulomb_constant() / config.ion_mass;
  const GateWindow window = gate_window(config);
  window_mid_ = window.t0 + 0.5 * window.T;
  window_half_ = 0.5 * window.T;
  if (separation_mode == SeparationMode::equilibrium && softening_ > 0) {
    // R(t) ~ sqrt(d^2 + v^2 t^2) has branch points at t = +-i d/v; size the
    // expansion from the Bernstein ellipse through them.
    const double s = (config.d / config.v) / window_half_;
    const double rho = s + std::sqrt(s * s + 1.0);
    const auto order = static_cast<std::size_t>(std::clamp(std::ceil(38.0 / std::log(rho)) + 8.0, 24.0, 4000.0));
    std::vector<double> samples(order);
    for (std::size_t k = 0; k < order; ++k) {
      const double x = std::cos(constants::pi * (k + 0.5) / order);
      samples[k] = solve_equilibrium(config, window_mid_ + window_half_ * x).R;
    }
    coefficients_.assign(order, 0.0);
    for (std::size_t j = 0; j < order; ++j) {
      double sum = 0;
      for (std::size_t k = 0; k < order; ++k) sum += samples[k] * std::cos(constants::pi * j * (k + 0.5) / order);
      coefficients_[j] = 2.0 * sum / order;
    }
    coefficients_[0] *= 0.5;
  }
  checked_sqrt(omega_sq(Mode::zigzag, 0.0), 0.0);
}

ModeFrequencyProfile ModeFrequencyProfile::frozen(const PhysicalConfig& config, double omega2) {
  ModeFrequencyProfile p;
  p.config_ = config;
  p.frozen_ = true;
  p.frozen_omega2_sq_ = omega2 * omega2;
  const GateWindow window = gate_window(config);
  p.window_mid_ = window.t0 + 0.5 * window.T;
  p.window_half_ = 0.5 * window.T;
  return p;
}

double ModeFrequencyProfile::separation(double t) const {
  if (coefficients_.empty()) return std::hypot(config_.d, config_.v * t);
  const double x = (t - window_mid_) / window_half_;
  if (std::abs(x) > 1.0 + 1e-12) return solve_equilibrium(config_, t).R;
  // Clenshaw recurrence.
  double b1 = 0, b2 = 0;
  for (std::size_t j = coefficients_.size() - 1; j >= 1; --j) {
    const double b0 = 2.0 * x * b1 - b2 + coefficients_[j];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + coefficients_[0];
}

double ModeFrequencyProfile::omega_sq(Mode mode, double t) const {
  const double wz2 = config_.omega_z * config_.omega_z;
  if (mode == Mode::com) return wz2;
  if (frozen_) return frozen_omega2_sq_;
  const double R = separation(t);
  return wz2 - softening_ / (R * R * R);
}

double ModeFrequencyProfile::omega(Mode mode, double t) const {
  return checked_sqrt(omega_sq(mode, t), t);
}

}  // namespace dtg
