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
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dtg/config.hpp"
#include "dtg/transport.hpp"

namespace dtg {

/// Transverse (z) dynamical normal modes. Mode 1 is center-of-mass, mode 2 zigzag.
enum class Mode { com = 0, zigzag = 1 };

inline constexpr std::array<Mode, 2> kModes{Mode::com, Mode::zigzag};
inline constexpr int index_of(Mode m) { return static_cast<int>(m); }
std::string_view to_string(Mode mode);

/// G_ij = m omega_z^2 delta_ij - (K / R^3) (-1)^(i+j), in N/m.
Eigen::Matrix2d stiffness_matrix(const PhysicalConfig& config, double R);

/// omega_z^2 - 2K / (m R^3).
double zigzag_frequency_sq(const PhysicalConfig& config, double R);

struct ModeFrequencies {
  double t = 0;
  double omega1 = 0;
  double omega2 = 0;
};

/// Throws ImaginaryFrequencyError if Omega_2^2 <= 0 at t.
ModeFrequencies mode_frequencies(const PhysicalConfig& config, double t,
                                 SeparationMode separation_mode = SeparationMode::equilibrium);

struct ModeBasis {
  /// Row n holds the participation of each ion in mode n.
  Eigen::Matrix2d b;
  std::array<std::string_view, 2> labels{"center-of-mass", "zigzag"};

  /// sum_{j != l} b_j^n b_l^n.
  double pair_weight(Mode mode) const;
  /// sum_j b_j^n s_j for spin values s_j = +-1.
  double drive_weight(Mode mode, int s1, int s2) const;
};

ModeBasis participation_matrix();

/// Omega_n(t)^2 over a gate window, evaluated cheaply enough for inner ODE
/// loops. The equilibrium separation is tabulated once on Chebyshev nodes;
/// the interpolant is accurate to ~1e-15 relative across the window.
class ModeFrequencyProfile {
 public:
  ModeFrequencyProfile(const PhysicalConfig& config, SeparationMode separation_mode);

  /// Zigzag frequency held fixed (test and diagnostic use).
  static ModeFrequencyProfile frozen(const PhysicalConfig& config, double omega2);

  double omega_sq(Mode mode, double t) const;
  double omega(Mode mode, double t) const;
  double separation(double t) const;

  SeparationMode separation_mode() const { return separation_mode_; }
  bool is_frozen() const { return frozen_; }
  const PhysicalConfig& config() const { return config_; }
  std::size_t chebyshev_order() const { return coefficients_.size(); }

 private:
  ModeFrequencyProfile() = default;

  PhysicalConfig config_;
  SeparationMode separation_mode_ = SeparationMode::trap_center;
  bool frozen_ = false;
  double frozen_omega2_sq_ = 0;
  double softening_ = 0;  // 2K/m
  double window_mid_ = 0;
  double window_half_ = 0;
  std::vector<double> coefficients_;
};

}  // namespace dtg
