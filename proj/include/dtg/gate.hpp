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
#include <optional>
#include <vector>

#include <json.hpp>

#include "dtg/config.hpp"
#include "dtg/modes.hpp"
#include "dtg/transport.hpp"

namespace dtg {

/// Piecewise-constant Rabi envelope over the gate window plus the detuning.
struct PulseShape {
  /// Segment amplitudes chi_k in rad/s; equal durations T / chi.size().
  std::vector<double> chi;
  /// Detuning in rad/s, interpreted by PhysicalConfig::detuning_convention.
  double mu = 0;

  std::size_t segment_count() const { return chi.size(); }
  PulseShape scaled(double alpha) const;
  /// Amplitude at t; zero outside the window.
  double envelope(const GateWindow& window, double t) const;

  static PulseShape constant(std::size_t segments, double chi, double mu);
};

/// Throws std::invalid_argument for an empty or non-finite pulse.
void validate(const PulseShape& pulse);

nlohmann::json pulse_to_json(const PulseShape& pulse, const PhysicalConfig& config);
/// Accepts {"chi": [...], "mu": rad/s} or {"chi": [...], "mu_over_omega_z": x}.
PulseShape pulse_from_json(const nlohmann::json& doc, const PhysicalConfig& config);

/// f(t) = -hbar k chi(t) sin(omega_d t), zero outside the gate window.
double force(const PhysicalConfig& config, const PulseShape& pulse, double t);

struct GateIntegrationOptions {
  double tol = 1e-12;
  /// Record samples on a grid aligned with segment boundaries; otherwise only
  /// the endpoint and the peak excursion are kept.
  bool dense = true;
  double samples_per_cycle = 64;
};

/// Classical response of one dynamical mode,
///   u'' + Omega_n(t)^2 u = f(t) / m,  u(t0) = u'(t0) = 0,
/// with the phase integral (1/2hbar) int f u_n and the mode phase int Omega_n
/// carried as extra ODE components.
struct ModeTrajectory {
  Mode mode = Mode::com;
  std::vector<double> t;
  std::vector<double> u;            // m
  std::vector<double> u_dot;        // m/s
  std::vector<double> phi_partial;  // rad, (1/2hbar) int f u_n (no pair weight)
  std::vector<double> mode_phase;   // rad, int Omega_n dt
  std::vector<double> omega;        // rad/s
  /// max_t sqrt(u^2 + (u'/omega_z)^2) in ground-state widths.
  double peak_excursion = 0;
  std::size_t steps = 0;

  double final_u() const { return u.back(); }
  double final_u_dot() const { return u_dot.back(); }
  double final_phi_partial() const { return phi_partial.back(); }
};

ModeTrajectory integrate_mode_response(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode,
                                       const GateIntegrationOptions& options = {});
ModeTrajectory integrate_mode_response(const PhysicalConfig& config, const PulseShape& pulse, Mode mode,
                                       const GateIntegrationOptions& options = {});

using TrajectoryPair = std::array<ModeTrajectory, 2>;

/// phi(t0 + T) = (1/2hbar) int f sum_n u_n sum_{j!=l} b_j^n b_l^n.
/// Throws std::invalid_argument if the trajectories are not on one grid.
double geometric_phase(const TrajectoryPair& trajectories);
/// phi(t) at every sample of the common grid.
std::vector<double> geometric_phase_series(const TrajectoryPair& trajectories);

struct ClosureResiduals {
  std::array<double, 2> delta_u{0, 0};      // m
  std::array<double, 2> delta_u_dot{0, 0};  // m/s
  double delta_phi = 0;                     // rad, phi + pi/4
};

ClosureResiduals closure_residuals(const TrajectoryPair& trajectories, double phi);

struct FidelityEstimate {
  double value = 1;     // clamped to [0, 1]
  double raw = 1;       // unclamped quadratic model
  bool clamped = false; // the quadratic model left [0, 1]
  double motional_infidelity = 0;
  double phase_infidelity = 0;
};

/// F = 1 - (m/2hbar) sum_n (|du'_n|^2/omega_z + omega_z |du_n|^2)(2 nbar_n + 1) - |dphi|^2.
FidelityEstimate fidelity(const ClosureResiduals& residuals, const PhysicalConfig& config);

/// 1 - F summed from its two terms, so values far below machine epsilon stay
/// resolved; 1 when the quadratic model drops below zero.
double infidelity(const FidelityEstimate& f);

struct ErrorBudget {
  double dF1 = 0;  // closure and phase error from the quadratic fidelity model
  double dF2 = 0;  // (pi/2) (xi_max / w)^4 from in-plane shuttling motion
  double dF3 = 0;  // beyond-Lamb-Dicke estimate (scaled order of magnitude)
  bool dF3_is_estimate = true;
};

ErrorBudget error_budget(const PhysicalConfig& config, const ClosureResiduals& residuals,
                         const OscillationRecord& oscillation);

struct GateResult {
  ClosureResiduals residuals;
  double phi = 0;
  FidelityEstimate fidelity;
  std::optional<ErrorBudget> budget;
  /// Residuals in ground-state units: du / x0 and du' / (omega_z x0).
  std::array<double, 2> delta_u_normalized{0, 0};
  std::array<double, 2> delta_u_dot_normalized{0, 0};
  std::array<double, 2> peak_excursion{0, 0};
  /// sqrt(sum_n |du_n|^2 + |du'_n|^2 / omega_z^2) / (x0 * peak excursion).
  double closure_residual = 0;
};

struct GateEvaluation {
  GateResult result;
  TrajectoryPair trajectories;
};

GateEvaluation evaluate_gate(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                             const GateIntegrationOptions& options = {});
/// Endpoint-only evaluation (no dense output), as used in optimizer loops.
/// Endpoint-only evaluation for optimizer loops (no dense output).
GateResult evaluate_gate_fast(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol = 1e-12);

/// Interaction-picture phase-space coordinates (Z~, P~) of one mode in
/// ground-state widths: (u + i u'/Omega_n) / x0 rotated by exp(i int Omega_n).
struct PhaseSpaceTrack {
  std::vector<double> z;
  std::vector<double> p;
};

PhaseSpaceTrack interaction_picture(const PhysicalConfig& config, const ModeTrajectory& trajectory);

}  // namespace dtg
