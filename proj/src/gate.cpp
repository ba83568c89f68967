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

#include "dtg/gate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "dtg/constants.hpp"
#include "dtg/ode.hpp"

namespace dtg {

PulseShape PulseShape::scaled(double alpha) const {
  PulseShape out = *this;
  for (double& c : out.chi) c *= alpha;
  return out;
}

double PulseShape::envelope(const GateWindow& window, double t) const {
  if (chi.empty() || t < window.t0 || t > window.end()) return 0;
  const auto n = chi.size();
  auto k = static_cast<std::size_t>((t - window.t0) / window.T * static_cast<double>(n));
  return chi[std::min(k, n - 1)];
}

PulseShape PulseShape::constant(std::size_t segments, double chi, double mu) {
  PulseShape p;
  p.chi.assign(segments, chi);
  p.mu = mu;
  return p;
}

void validate(const PulseShape& pulse) {
  if (pulse.chi.empty()) throw std::invalid_argument("pulse needs at least one segment");
  for (double c : pulse.chi) {
    if (!std::isfinite(c)) throw std::invalid_argument("pulse amplitude is not finite");
  }
  if (!std::isfinite(pulse.mu)) throw std::invalid_argument("pulse detuning is not finite");
}

nlohmann::json pulse_to_json(const PulseShape& pulse, const PhysicalConfig& config) {
  nlohmann::json doc;
  doc["chi"] = pulse.chi;
  doc["mu"] = pulse.mu;
  doc["mu_over_omega_z"] = pulse.mu / config.omega_z;
  doc["segment_count"] = pulse.segment_count();
  doc["detuning_convention"] = std::string(to_string(config.detuning_convention));
  return doc;
}

PulseShape pulse_from_json(const nlohmann::json& doc, const PhysicalConfig& config) {
  if (!doc.is_object() || !doc.contains("chi")) throw std::invalid_argument("pulse document needs a \"chi\" array");
  PulseShape p;
  p.chi = doc.at("chi").get<std::vector<double>>();
  if (doc.contains("mu")) {
    p.mu = doc.at("mu").get<double>();
  } else if (doc.contains("mu_over_omega_z")) {
    p.mu = doc.at("mu_over_omega_z").get<double>() * config.omega_z;
  } else {
    throw std::invalid_argument("pulse document needs \"mu\" or \"mu_over_omega_z\"");
  }
  validate(p);
  return p;
}

double force(const PhysicalConfig& config, const PulseShape& pulse, double t) {
  const double chi = pulse.envelope(gate_window(config), t);
  if (chi == 0) return 0;
  return -constants::hbar * config.k_eff * chi * std::sin(config.drive_frequency(pulse.mu) * t);
}

namespace {

using State = Eigen::Vector4d;  // u / x0, u' / (omega_z x0), phase partial, int Omega

struct SegmentGrid {
  std::vector<double> times;      // includes t0 and every segment boundary
  std::vector<std::size_t> ends;  // index into times of each segment end
};

SegmentGrid make_grid(const GateWindow& window, std::size_t segments, double carrier, double omega_z,
                      const GateIntegrationOptions& options) {
  SegmentGrid grid;
  const double seg = window.T / static_cast<double>(segments);
  std::size_t per_segment = 1;
  if (options.dense) {
    const double freq = std::abs(carrier) > 0 ? std::abs(carrier) : omega_z;
    const double dt = 2 * constants::pi / freq / std::max(options.samples_per_cycle, 1.0);
    per_segment = static_cast<std::size_t>(std::ceil(seg / dt));
    per_segment = std::max<std::size_t>(per_segment, 1);
  }
  grid.times.reserve(segments * per_segment + 1);
  grid.times.push_back(window.t0);
  for (std::size_t k = 0; k < segments; ++k) {
    const double a = window.t0 + seg * static_cast<double>(k);
    for (std::size_t j = 1; j <= per_segment; ++j) {
      grid.times.push_back(j == per_segment ? (k + 1 == segments ? window.end() : a + seg)
                                            : a + seg * static_cast<double>(j) / static_cast<double>(per_segment));
    }
    grid.ends.push_back(grid.times.size() - 1);
  }
  return grid;
}

}  // namespace

ModeTrajectory integrate_mode_response(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode,
                                       const GateIntegrationOptions& options) {
  validate(pulse);
  const PhysicalConfig& config = profile.config();
  const GateWindow window = gate_window(config);
  const double wz = config.omega_z;
  const double x0 = config.ground_state_width();
  const double carrier = config.drive_frequency(pulse.mu);
  const double drive_scale = -constants::hbar * config.k_eff / (config.ion_mass * wz * x0);
  const double phase_scale = -0.5 * config.k_eff * x0;

  const SegmentGrid grid = make_grid(window, pulse.segment_count(), carrier, wz, options);

  ModeTrajectory traj;
  traj.mode = mode;
  const bool keep = options.dense;
  auto record = [&](double t, const State& y) {
    traj.t.push_back(t);
    traj.u.push_back(y[0] * x0);
    traj.u_dot.push_back(y[1] * wz * x0);
    traj.phi_partial.push_back(y[2]);
    traj.mode_phase.push_back(y[3]);
    traj.omega.push_back(profile.omega(mode, t));
  };

  State y = State::Zero();
  double t = window.t0;
  record(t, y);
  OdeOptions ode;
  ode.rtol = options.tol;
  ode.atol = options.tol;
  double h = 0;
  double peak_sq = 0;
  auto observe = [&](double, const State& s) { peak_sq = std::max(peak_sq, s[0] * s[0] + s[1] * s[1]); };

  std::size_t cursor = 1;
  for (std::size_t k = 0; k < pulse.segment_count(); ++k) {
    const double chi = pulse.chi[k];
    auto rhs = [&, chi](double tt, const State& s, State& ds) {
      const double w2 = profile.omega_sq(mode, tt);
      const double drive = chi * std::sin(carrier * tt);
      ds[0] = wz * s[1];
      ds[1] = -(w2 / wz) * s[0] + drive_scale * drive;
      ds[2] = phase_scale * drive * s[0];
      ds[3] = std::sqrt(w2);
    };
    auto stepper = make_dopri<State>(rhs, ode, h);
    for (; cursor <= grid.ends[k]; ++cursor) {
      stepper.advance(t, y, grid.times[cursor], observe);
      if (keep || cursor == grid.ends.back()) record(t, y);
    }
    traj.steps += stepper.accepted_steps();
    h = stepper.suggested_step();
  }
  traj.peak_excursion = std::sqrt(peak_sq);
  return traj;
}

ModeTrajectory integrate_mode_response(const PhysicalConfig& config, const PulseShape& pulse, Mode mode,
                                       const GateIntegrationOptions& options) {
  return integrate_mode_response(ModeFrequencyProfile(config, SeparationMode::equilibrium), pulse, mode, options);
}

namespace {

void check_common_grid(const TrajectoryPair& tr) {
  const auto& a = tr[0].t;
  const auto& b = tr[1].t;
  if (a.empty() || a.size() != b.size() || tr[0].phi_partial.size() != a.size() ||
      tr[1].phi_partial.size() != b.size()) {
    throw std::invalid_argument("mode trajectories are not on a common grid");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) throw std::invalid_argument("mode trajectories are not on a common grid");
  }
}

}  // namespace

double geometric_phase(const TrajectoryPair& trajectories) {
  check_common_grid(trajectories);
  const ModeBasis basis = participation_matrix();
  double phi = 0;
  for (const auto& tr : trajectories) phi += basis.pair_weight(tr.mode) * tr.final_phi_partial();
  return phi;
}

std::vector<double> geometric_phase_series(const TrajectoryPair& trajectories) {
  check_common_grid(trajectories);
  const ModeBasis basis = participation_matrix();
  std::vector<double> phi(trajectories[0].t.size(), 0.0);
  for (const auto& tr : trajectories) {
    const double w = basis.pair_weight(tr.mode);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] += w * tr.phi_partial[i];
  }
  return phi;
}

ClosureResiduals closure_residuals(const TrajectoryPair& trajectories, double phi) {
  ClosureResiduals r;
  for (const auto& tr : trajectories) {
    const int n = index_of(tr.mode);
    r.delta_u[n] = tr.final_u();
    r.delta_u_dot[n] = tr.final_u_dot();
  }
  r.delta_phi = phi + constants::pi / 4;
  return r;
}

FidelityEstimate fidelity(const ClosureResiduals& residuals, const PhysicalConfig& config) {
  FidelityEstimate f;
  const double wz = config.omega_z;
  const double pref = config.ion_mass / (2 * constants::hbar);
  for (int n = 0; n < 2; ++n) {
    const double du = residuals.delta_u[n];
    const double dv = residuals.delta_u_dot[n];
    f.motional_infidelity += pref * (dv * dv / wz + wz * du * du) * (2 * config.nbar[n] + 1);
  }
  f.phase_infidelity = residuals.delta_phi * residuals.delta_phi;
  f.raw = 1 - f.motional_infidelity - f.phase_infidelity;
  f.clamped = !(f.raw >= 0 && f.raw <= 1);
  f.value = std::clamp(std::isfinite(f.raw) ? f.raw : 0.0, 0.0, 1.0);
  return f;
}

double infidelity(const FidelityEstimate& f) {
  if (f.clamped) return f.raw > 1 ? 0.0 : 1.0;
  return f.motional_infidelity + f.phase_infidelity;
}

ErrorBudget error_budget(const PhysicalConfig& config, const ClosureResiduals& residuals,
                         const OscillationRecord& oscillation) {
  ErrorBudget b;
  const FidelityEstimate f = fidelity(residuals, config);
  b.dF1 = f.motional_infidelity + f.phase_infidelity;
  const double ratio = oscillation.xi_max_in_plane() / config.w;
  b.dF2 = constants::pi / 2 * std::pow(ratio, 4);

  const PhysicalConfig ref = reference_config();
  const double eta = config.lamb_dicke_parameter();
  const double eta0 = ref.lamb_dicke_parameter();
  const double nbar = 0.5 * (config.nbar[0] + config.nbar[1]);
  const double nbar0 = 0.5 * (ref.nbar[0] + ref.nbar[1]);
  b.dF3 = 1e-4 * (eta * eta * (2 * nbar + 1)) / (eta0 * eta0 * (2 * nbar0 + 1));
  return b;
}

namespace {

GateResult assemble(const PhysicalConfig& config, const TrajectoryPair& trajectories) {
  GateResult r;
  r.phi = geometric_phase(trajectories);
  r.residuals = closure_residuals(trajectories, r.phi);
  r.fidelity = fidelity(r.residuals, config);
  const double x0 = config.ground_state_width();
  double sq = 0;
  double peak = 0;
  for (int n = 0; n < 2; ++n) {
    r.delta_u_normalized[n] = r.residuals.delta_u[n] / x0;
    r.delta_u_dot_normalized[n] = r.residuals.delta_u_dot[n] / (config.omega_z * x0);
    r.peak_excursion[n] = trajectories[n].peak_excursion;
    sq += r.delta_u_normalized[n] * r.delta_u_normalized[n] +
          r.delta_u_dot_normalized[n] * r.delta_u_dot_normalized[n];
    peak = std::max(peak, r.peak_excursion[n]);
  }
  r.closure_residual = peak > 0 ? std::sqrt(sq) / peak : 0;
  return r;
}

}  // namespace

GateEvaluation evaluate_gate(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                             const GateIntegrationOptions& options) {
  GateEvaluation ev;
  for (Mode m : kModes) ev.trajectories[index_of(m)] = integrate_mode_response(profile, pulse, m, options);
  ev.result = assemble(profile.config(), ev.trajectories);
  return ev;
}

GateResult evaluate_gate_fast(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol) {
  GateIntegrationOptions options;
  options.tol = tol;
  options.dense = false;
  TrajectoryPair tr;
  for (Mode m : kModes) tr[index_of(m)] = integrate_mode_response(profile, pulse, m, options);
  return assemble(profile.config(), tr);
}

PhaseSpaceTrack interaction_picture(const PhysicalConfig& config, const ModeTrajectory& trajectory) {
  PhaseSpaceTrack track;
  const double x0 = config.ground_state_width();
  const std::size_t n = trajectory.t.size();
  track.z.resize(n);
  track.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double re = trajectory.u[i] / x0;
    const double im = trajectory.u_dot[i] / (trajectory.omega[i] * x0);
    const double c = std::cos(trajectory.mode_phase[i]);
    const double s = std::sin(trajectory.mode_phase[i]);
    track.z[i] = re * c - im * s;
    track.p[i] = re * s + im * c;
  }
  return track;
}

}  // namespace dtg
