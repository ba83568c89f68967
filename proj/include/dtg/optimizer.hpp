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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtg/config.hpp"
#include "dtg/gate.hpp"
#include "dtg/modes.hpp"

namespace dtg {

struct OptimizationOptions {
  std::size_t segments = 5;
  /// Closure-search budget per start.
  std::size_t max_evaluations = 400;
  /// Budget of the final joint polish on 1 - F.
  std::size_t polish_evaluations = 60;
  /// Convergence target on 1 - F.
  double infidelity_tol = 1e-6;
  /// Target on the normalized closure residual of the shape search.
  double closure_tol = 1e-6;
  std::size_t starts = 8;
  std::uint64_t seed = 20240611;
  /// |chi_k| <= chi_bound (rad/s).
  double chi_bound = 1e9;
  /// |chi_k / chi_1| <= ratio_bound during the shape search.
  double ratio_bound = 10;
  /// Detuning search range, as (omega_d - omega_z) / omega_z.
  double mu_min = -0.15;
  double mu_max = -0.005;
  /// Integrator tolerance inside the search loops.
  double tol = 1e-10;
  /// Integrator tolerance of the reported final evaluation.
  double report_tol = 1e-12;
  unsigned workers = 0;
};

/// Throws std::invalid_argument when options are inconsistent.
void validate(const OptimizationOptions& options);

/// 1 - F from the quadratic fidelity model, summed from its motional and
/// phase terms; integration failures score +inf.
double objective(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol = 1e-12);
double objective(const PhysicalConfig& config, const PulseShape& pulse, double tol = 1e-12);

/// Detuning offset (omega_d - omega_z) / omega_z of a pulse and its inverse.
double relative_detuning(const PhysicalConfig& config, const PulseShape& pulse);
double detuning_from_relative(const PhysicalConfig& config, double mu_rel);

/// Endpoint map of one detuning: column k holds (u1, u1'/omega_z, u2,
/// u2'/omega_z) / x0 per unit rad/s of chi_k. Exact up to integrator
/// tolerance because the mode equations are linear in the drive.
Eigen::MatrixXd endpoint_matrix(const ModeFrequencyProfile& profile, std::size_t segments, double mu, double tol);

/// Component of `chi` in the numerical null space of `B`; falls back to the
/// weakest right singular vector when `chi` is nearly orthogonal to it.
Eigen::VectorXd project_to_closure(const Eigen::MatrixXd& B, const Eigen::VectorXd& chi);

struct ClosureSearch {
  PulseShape pulse;
  double closure_residual = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Shape search over segment ratios chi_k / chi_1 and detuning minimizing
/// the scale-invariant closure residual, then an exact projection onto the
/// closing subspace at the found detuning. Precondition: >= 2 segments.
ClosureSearch optimize_closure(const ModeFrequencyProfile& profile, const PulseShape& guess,
                               const OptimizationOptions& options);
ClosureSearch optimize_closure(const PhysicalConfig& config, const PulseShape& guess,
                               const OptimizationOptions& options);

/// sqrt((pi/4) / |phi|).
double phase_scale_factor(double phi);

/// Rescales the amplitudes so phi = -pi/4. Throws PhysicsError when the pulse
/// accumulates no phase or a phase of the wrong sign.
PulseShape calibrate_phase(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol = 1e-12);
PulseShape calibrate_phase(const PhysicalConfig& config, const PulseShape& pulse, double tol = 1e-12);

struct Candidate {
  std::size_t start_index = 0;
  bool ok = false;
  std::string error;
  double start_mu_rel = 0;
  PulseShape pulse;
  GateResult result;
  double objective = 0;
  /// Normalized closure residual at the end of the shape search.
  double closure_residual = 0;
  /// Infidelity before the polish stage, at the reporting tolerance.
  double objective_before_polish = 0;
  bool polish_accepted = false;
  std::size_t evaluations = 0;
};

struct OptimizedPulse {
  PulseShape pulse;
  GateResult result;
  std::size_t evaluations = 0;
  bool converged = false;
  std::size_t start_index = 0;
  std::vector<Candidate> candidates;
};

/// Multistart closure search, phase calibration and polish. Starts are
/// stratified over the detuning range and seeded deterministically; the
/// winner has the lowest objective (ties go to the lower start index).
/// Throws ConvergenceError if every start fails.
OptimizedPulse optimize(const PhysicalConfig& config, const OptimizationOptions& options = {});

/// Deterministic stream of uniform doubles in [0, 1).
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  /// Top 53 bits of the engine output; identical on every platform.
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dtg
