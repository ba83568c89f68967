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
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dtg/config.hpp"
#include "dtg/errors.hpp"
#include "dtg/gate.hpp"
#include "dtg/modes.hpp"

namespace dtg {

/// Truncation too small: population reached the top of the number basis.
class LeakageError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

/// Spin pair (s1, s2) and the drive weight c_n = sum_j b_j^n s_j per mode.
struct BranchSpec {
  int s1 = 1;
  int s2 = 1;
  std::array<double, 2> c{0, 0};

  static BranchSpec make(int s1, int s2);
};

/// (+,+), (+,-), (-,+), (-,-).
std::array<BranchSpec, 4> all_branches();

/// Motional state of one mode at the gate end in the Schroedinger picture,
/// number basis |0> .. |n_max - 1>. No phase is removed.
struct BranchState {
  Mode mode = Mode::com;
  std::size_t n_max = 0;
  Eigen::VectorXcd amplitudes;
  double norm_error = 0;
  /// Largest population seen in the top two levels during the window.
  double top_population = 0;
};

struct OracleOptions {
  std::size_t n_max = 40;
  double leakage_threshold = 1e-8;
  double tol = 1e-11;
  /// Cumulative thermal weight kept per mode.
  double thermal_weight = 0.999;
  /// Grow n_max (by n_max_step) when leakage is detected instead of failing.
  bool auto_n_max = true;
  std::size_t n_max_step = 20;
  std::size_t n_max_limit = 400;
  /// Repeat the run at n_max + 10 and report the differences.
  bool convergence_check = true;
  /// Overlaps below this make the branch phase ill-conditioned.
  double min_overlap = 1e-9;
  unsigned workers = 0;
};

/// Solves i hbar d|psi>/dt = [P^2/2m + m Omega_n(t)^2 Z^2/2 + f(t) c Z]|psi>
/// over the gate window from |initial_level>.
BranchState propagate_branch(const ModeFrequencyProfile& profile, const PulseShape& pulse, double c, Mode mode,
                             std::size_t n_max, double tol = 1e-11, std::size_t initial_level = 0,
                             double leakage_threshold = 1e-8);

/// Coherent-state centre of a branch state at the gate end.
struct PhaseSpaceCentre {
  double z = 0;  // <Z>, m
  double p = 0;  // <P>, kg m/s
};

PhaseSpaceCentre phase_space_centre(const PhysicalConfig& config, const BranchState& state);

/// Truncated thermal distribution: smallest prefix with cumulative weight
/// >= `weight`, renormalized.
std::vector<double> thermal_populations(double nbar, double weight);

struct DisplacementCheck {
  int s1 = 1;
  int s2 = 1;
  Mode mode = Mode::com;
  double c = 0;
  double z = 0;           // oracle <Z> / x0
  double p = 0;           // oracle <P> / (m omega_z x0)
  double z_expected = 0;  // -c u_n(t0 + T) / x0 from the classical response
  double p_expected = 0;  // -c u_n'(t0 + T) / (omega_z x0)
  double error = 0;       // max of the two deviations, in x0
};

struct ConvergenceRow {
  std::array<std::size_t, 2> n_max{0, 0};
  double phi_ent = 0;
  double fidelity = 0;
};

struct OracleReport {
  double phi_ent = 0;
  /// theta_{s1 s2} for (+,+), (+,-), (-,+), (-,-), unwrapped in time.
  std::array<double, 4> branch_phases{0, 0, 0, 0};
  /// Decomposition theta_s = global + b1 s1 + b2 s2 + phi_ent s1 s2.
  double global_phase = 0;
  std::array<double, 2> single_qubit_phases{0, 0};

  double oracle_fidelity = 0;
  double model_fidelity = 0;  // quadratic model on the classical residuals
  double model_phi = 0;
  double fidelity_delta = 0;  // |oracle - model|
  double phi_delta = 0;       // |phi_ent - (-pi/4)|

  std::vector<DisplacementCheck> displacements;
  double max_displacement_error = 0;

  std::array<std::size_t, 2> n_max{0, 0};
  std::array<std::size_t, 2> thermal_levels{0, 0};
  double max_top_population = 0;
  double max_norm_error = 0;
  double min_overlap = 0;

  std::vector<ConvergenceRow> convergence;
  double convergence_phi_delta = 0;
  double convergence_fidelity_delta = 0;
};

/// Phi_ent = (theta_{++} + theta_{--} - theta_{+-} - theta_{-+}) / 4 from
/// ground-state branches. Throws PhysicsError when an overlap is too small.
double entangling_phase_from_oracle(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                                    const OracleOptions& options = {});

/// Thermal-averaged fidelity of the spin state reached from |++> against
/// exp(-i (pi/4) s1 s2) |++>.
double oracle_gate_fidelity(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                            const OracleOptions& options = {});

/// Full cross-check of the classical construction.
OracleReport verify(const ModeFrequencyProfile& profile, const PulseShape& pulse, const OracleOptions& options = {});
OracleReport verify(const PhysicalConfig& config, const PulseShape& pulse, const OracleOptions& options = {});

}  // namespace dtg
