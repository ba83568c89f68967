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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dtg/config.hpp"

namespace dtg {

using Vec3 = Eigen::Vector3d;

struct TrapCenters {
  Vec3 q1;  // stationary trap, always the origin
  Vec3 q2;  // moving trap, (d, v t, 0)
};

TrapCenters trap_centers(const PhysicalConfig& config, double t);

struct EquilibriumOptions {
  /// Convergence target on |grad U| relative to the Coulomb force scale K/R^2.
  double relative_force_tol = 1e-13;
  int max_iterations = 60;
};

/// Instantaneous force-balance configuration of both ions.
struct EquilibriumState {
  double t = 0;
  Vec3 q1_0 = Vec3::Zero();
  Vec3 q2_0 = Vec3::Zero();
  /// |q1_0 - q2_0|.
  double R = 0;
  /// Shifts of each ion from its own trap center.
  Vec3 shift1 = Vec3::Zero();
  Vec3 shift2 = Vec3::Zero();
  /// Time derivative of the shifts (implicit-function derivative of force balance).
  Vec3 shift1_rate = Vec3::Zero();
  Vec3 shift2_rate = Vec3::Zero();
  double residual_force = 0;  // N
  int iterations = 0;

  double max_shift() const { return std::max(shift1.norm(), shift2.norm()); }
};

/// Damped Newton iteration on the coupled 6D force balance (anisotropic
/// harmonic traps plus Coulomb repulsion), starting at the trap centers.
/// Throws ConvergenceError when the iteration stalls.
EquilibriumState solve_equilibrium(const PhysicalConfig& config, double t,
                                   const EquilibriumOptions& options = {});

enum class SeparationMode { equilibrium, trap_center };

std::string_view to_string(SeparationMode mode);
SeparationMode separation_mode_from_string(std::string_view text);

/// R(t). Trap-center mode is sqrt(d^2 + (v t)^2).
double separation(const PhysicalConfig& config, double t, SeparationMode mode);

/// Classical in-plane dynamics sampled about the instantaneous equilibria.
struct OscillationRecord {
  std::vector<double> t;
  std::vector<Vec3> xi1;
  std::vector<Vec3> xi2;
  /// Per-axis maximum of |xi| over both ions, restricted to the gate window.
  Vec3 xi_max = Vec3::Zero();
  /// Same maximum over the whole record.
  Vec3 xi_max_record = Vec3::Zero();
  GateWindow window;
  double tol = 0;
  std::size_t steps = 0;

  /// Larger of the two in-plane maxima in the gate window.
  double xi_max_in_plane() const { return std::max(xi_max.x(), xi_max.y()); }
};

struct ClassicalMotionOptions {
  /// Output samples per period of the stiffest trap axis.
  double samples_per_period = 16;
  std::size_t max_samples = 400'000;
};

/// Ions start at their instantaneous equilibria, at rest relative to them,
/// at t_begin; Newton's equations with the full Coulomb force are integrated
/// in trap-relative coordinates with relative tolerance `tol`.
OscillationRecord integrate_classical_motion(const PhysicalConfig& config, double t_begin,
                                             double t_end, double tol = 1e-10,
                                             const ClassicalMotionOptions& options = {});

/// Symmetric span starting 20 d (or the half window, if larger) before
/// closest approach.
std::pair<double, double> default_motion_span(const PhysicalConfig& config);

struct SweepCell {
  double x = 0;  // f1/f3 for the oscillation sweep, f2/f3 for the equilibrium sweep
  double y = 0;  // f2/f3 for the oscillation sweep, unused otherwise
  double value = 0;
  bool converged = false;
  std::string error;
  double v = 0;
  double d = 0;
  double w = 0;
  /// Time at which the equilibrium displacement peaks (equilibrium sweep only).
  double t_at_max = 0;
};

struct SweepResult {
  std::string kind;  // "oscillation" or "equilibrium"
  std::string x_name;
  std::string y_name;
  std::string value_name;
  std::vector<double> x_values;
  std::vector<double> y_values;
  /// Row-major: index = iy * x_values.size() + ix.
  std::vector<SweepCell> cells;
  nlohmann::json metadata;

  const SweepCell& at(std::size_t ix, std::size_t iy = 0) const {
    return cells.at(iy * x_values.size() + ix);
  }
};

struct SweepOptions {
  double tol = 1e-10;
  /// Equilibrium sweep: samples across the gate window.
  std::size_t window_samples = 401;
  unsigned workers = 0;
};

/// Realizes a frequency-ratio pair at fixed in-plane trap frequency: d from
/// f2/f3, v from f1/f3, and w scaled with d so w/d matches the base config.
PhysicalConfig config_for_ratios(const PhysicalConfig& base, double f1_ratio, double f2_ratio);

/// xi_{x,max}/d over an f1/f3 x f2/f3 grid. Failed cells are recorded, not thrown.
SweepResult sweep_oscillation(const PhysicalConfig& base, const std::vector<double>& f1_ratios,
                              const std::vector<double>& f2_ratios, const SweepOptions& options = {});

/// q_max^(0)/d over f2/f3 (v kept from the base config).
SweepResult sweep_equilibrium(const PhysicalConfig& base, const std::vector<double>& f2_ratios,
                              const SweepOptions& options = {});

}  // namespace dtg
