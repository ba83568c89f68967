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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "dtg/config.hpp"
#include "dtg/constants.hpp"
#include "dtg/gate.hpp"
#include "dtg/modes.hpp"
#include "dtg/transport.hpp"
#include "support.hpp"

namespace dtg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHbar = 1.054571817e-34;

// Closed-form response of u'' + W^2 u = f/m to a piecewise-constant
// amplitude times sin(w t), via the convolution u = (1/mW) int sin(W(t - s)) f(s) ds.
struct ConvolutionOracle {
  double m, W, w, t0, T, k;
  std::vector<double> chi;

  // Antiderivatives in s of sin(W(t - s)) sin(w s) and cos(W(t - s)) sin(w s).
  double Is(double t, double s) const {
    return 0.5 * (-std::sin(W * t - (W + w) * s) / (W + w) + std::sin(W * t - (W - w) * s) / (W - w));
  }
  double Ic(double t, double s) const {
    return 0.5 * (-std::cos(W * t + (w - W) * s) / (w - W) - std::cos((w + W) * s - W * t) / (w + W));
  }
  template <class F>
  double sum(double t, F&& anti) const {
    const double seg = T / chi.size();
    double acc = 0;
    for (std::size_t j = 0; j < chi.size(); ++j) {
      const double a = t0 + seg * j;
      const double b = std::min(t, t0 + seg * (j + 1));
      if (b <= a) break;
      acc += -kHbar * k * chi[j] * (anti(t, b) - anti(t, a));
    }
    return acc;
  }
  double u(double t) const {
    return sum(t, [this](double tt, double s) { return Is(tt, s); }) / (m * W);
  }
  double u_dot(double t) const {
    return sum(t, [this](double tt, double s) { return Ic(tt, s); }) / m;
  }
  double force(double t) const {
    if (t < t0 || t > t0 + T) return 0;
    const std::size_t j = std::min<std::size_t>(chi.size() - 1, static_cast<std::size_t>((t - t0) / T * chi.size()));
    return -kHbar * k * chi[j] * std::sin(w * t);
  }
  // (1/2hbar) int f u over the window, composite Simpson.
  double phase_partial(std::size_t n = 400000) const {
    const double h = T / n;
    double acc = 0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = t0 + h * i;
      const double wgt = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      acc += wgt * force(std::min(t, t0 + T)) * u(t);
    }
    return acc * h / 3 / (2 * kHbar);
  }
};

ConvolutionOracle oracle_for(const PhysicalConfig& c, const PulseShape& p, double W) {
  const GateWindow win = gate_window(c);
  return {c.ion_mass, W, c.drive_frequency(p.mu), win.t0, win.T, c.k_eff, p.chi};
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void expect_matches_oracle(const ModeTrajectory& tr, const ConvolutionOracle& o, double rel) {
  double eu = 0, ev = 0, su = 0, sv = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    eu = std::max(eu, std::abs(tr.u[i] - o.u(tr.t[i])));
    ev = std::max(ev, std::abs(tr.u_dot[i] - o.u_dot(tr.t[i])));
    su = std::max(su, std::abs(o.u(tr.t[i])));
    sv = std::max(sv, std::abs(o.u_dot(tr.t[i])));
  }
  EXPECT_LE(eu / su, rel);
  EXPECT_LE(ev / sv, rel);
}

TEST(Force, VanishesOutsideWindowAndAtClosestApproach) {
  const PhysicalConfig c = reference_config(0.2);
  const PulseShape p = PulseShape::constant(5, 3e7, -0.06 * c.omega_z);
  EXPECT_EQ(force(c, p, -25.0001e-6), 0.0);
  EXPECT_EQ(force(c, p, 25.0001e-6), 0.0);
  EXPECT_EQ(force(c, p, 0.0), 0.0);
  EXPECT_EQ(force(c, PulseShape::constant(5, 0.0, 0.0), 1e-6), 0.0);
  const double t = 3.3e-6;
  EXPECT_DOUBLE_EQ(force(c, p, t), -constants::hbar * c.k_eff * 3e7 * std::sin(0.94 * c.omega_z * t));
}

TEST(Pulse, EnvelopeSegmentsPartitionWindow) {
  const PhysicalConfig c = reference_config(0.2);
  const GateWindow w = gate_window(c);
  PulseShape p;
  p.chi = {1, 2, 3, 4, 5};
  for (int k = 0; k < 5; ++k) EXPECT_EQ(p.envelope(w, w.t0 + (k + 0.5) * w.T / 5), k + 1.0);
  EXPECT_EQ(p.envelope(w, w.end()), 5.0);
  EXPECT_EQ(p.envelope(w, w.t0 - 1e-9), 0.0);
}

TEST(Pulse, ValidationAndJson) {
  const PhysicalConfig c = reference_config(0.2);
  PulseShape bad;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad.chi = {1.0, std::nan("")};
  EXPECT_THROW(validate(bad), std::invalid_argument);
  PulseShape p;
  p.chi = {1.5e7, -2e7, 3e7};
  p.mu = -0.06 * c.omega_z;
  const PulseShape q = pulse_from_json(pulse_to_json(p, c), c);
  EXPECT_EQ(q.chi, p.chi);
  EXPECT_EQ(q.mu, p.mu);
  const PulseShape r = pulse_from_json(nlohmann::json{{"chi", {1.0, 2.0}}, {"mu_over_omega_z", -0.02}}, c);
  EXPECT_DOUBLE_EQ(r.mu, -0.02 * c.omega_z);
}

TEST(ModeResponse, ZeroDriveStaysAtRest) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  for (Mode m : kModes) {
    const ModeTrajectory tr = integrate_mode_response(prof, PulseShape::constant(5, 0.0, -0.06 * c.omega_z), m);
    EXPECT_EQ(max_abs(tr.u), 0.0);
    EXPECT_EQ(max_abs(tr.u_dot), 0.0);
    EXPECT_EQ(max_abs(tr.phi_partial), 0.0);
  }
}

TEST(ModeResponse, CenterOfMassMatchesConvolutionSingleSegment) {
  const PhysicalConfig c = reference_config(0.2);
  const PulseShape p = PulseShape::constant(1, 2e7, -0.06 * c.omega_z);
  const ModeTrajectory tr = integrate_mode_response(c, p, Mode::com);
  EXPECT_EQ(tr.u.front(), 0.0);
  EXPECT_EQ(tr.u_dot.front(), 0.0);
  expect_matches_oracle(tr, oracle_for(c, p, c.omega_z), 1e-8);
}

TEST(ModeResponse, CenterOfMassMatchesConvolutionFiveSegments) {
  const PhysicalConfig c = reference_config(0.5);
  PulseShape p;
  p.chi = {-6e6, -1.8e7, -2.5e7, 1.1e7, 4e6};
  p.mu = -0.02 * c.omega_z;
  expect_matches_oracle(integrate_mode_response(c, p, Mode::com), oracle_for(c, p, c.omega_z), 1e-8);
}

TEST(ModeResponse, FrozenZigzagMatchesConvolution) {
  const PhysicalConfig c = reference_config(0.2);
  const double w2 = mode_frequencies(c, 0.0, SeparationMode::equilibrium).omega2;
  const ModeFrequencyProfile frozen = ModeFrequencyProfile::frozen(c, w2);
  PulseShape p;
  p.chi = {1e7, 3e7, -2e7, 2.5e7, 1e7};
  p.mu = -0.06 * c.omega_z;
  expect_matches_oracle(integrate_mode_response(frozen, p, Mode::zigzag), oracle_for(c, p, w2), 1e-8);
}

TEST(ModeResponse, SamplesResolveTheCarrier) {
  const PhysicalConfig c = reference_config(0.2);
  const PulseShape p = PulseShape::constant(5, 1e7, -0.06 * c.omega_z);
  const ModeTrajectory tr = integrate_mode_response(c, p, Mode::com);
  const double period = 2 * kPi / c.drive_frequency(p.mu);
  for (std::size_t i = 1; i < tr.t.size(); ++i) ASSERT_LE(tr.t[i] - tr.t[i - 1], period / 50);
  EXPECT_EQ(tr.t.front(), gate_window(c).t0);
  EXPECT_EQ(tr.t.back(), gate_window(c).end());
}

TEST(ModeResponse, PhaseQuadratureMatchesIndependentIntegral) {
  const PhysicalConfig c = reference_config(0.2);
  PulseShape p;
  p.chi = {-2.4e6, 2.9e7, 6.2e7, 2.9e7, -2.4e6};
  p.mu = -0.07 * c.omega_z;
  const ModeTrajectory tr = integrate_mode_response(c, p, Mode::com);
  const double expected = oracle_for(c, p, c.omega_z).phase_partial();
  EXPECT_GT(std::abs(expected), 1.0);
  EXPECT_NEAR(tr.final_phi_partial(), expected, 1e-6);
}

TEST(ModeResponse, Superposition) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  PulseShape a, b, ab;
  a.chi = {1e7, -2e7, 3e7, 0.5e7, 1e7};
  b.chi = {-0.3e7, 1e7, 2e7, -1e7, 4e7};
  a.mu = b.mu = ab.mu = -0.05 * c.omega_z;
  for (int k = 0; k < 5; ++k) ab.chi.push_back(a.chi[k] + b.chi[k]);
  for (Mode m : kModes) {
    const auto ta = integrate_mode_response(prof, a, m);
    const auto tb = integrate_mode_response(prof, b, m);
    const auto tab = integrate_mode_response(prof, ab, m);
    ASSERT_EQ(ta.t, tab.t);
    const double su = max_abs(tab.u), sv = max_abs(tab.u_dot);
    double eu = 0, ev = 0;
    for (std::size_t i = 0; i < tab.t.size(); ++i) {
      eu = std::max(eu, std::abs(tab.u[i] - ta.u[i] - tb.u[i]));
      ev = std::max(ev, std::abs(tab.u_dot[i] - ta.u_dot[i] - tb.u_dot[i]));
    }
    EXPECT_LE(eu / su, 1e-9);
    EXPECT_LE(ev / sv, 1e-9);
  }
}

TEST(GeometricPhase, ScalesQuadratically) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  PulseShape p;
  p.chi = {1e7, 2e7, 3e7, 2e7, 1e7};
  p.mu = -0.06 * c.omega_z;
  const double phi1 = evaluate_gate(prof, p).result.phi;
  const double phi2 = evaluate_gate(prof, p.scaled(2.0)).result.phi;
  EXPECT_NE(phi1, 0.0);
  EXPECT_LE(std::abs(phi2 / (4 * phi1) - 1), 1e-9);
}

TEST(GeometricPhase, ReducesToModeDifference) {
  const PhysicalConfig c = reference_config(0.2);
  PulseShape p = PulseShape::constant(5, 2e7, -0.06 * c.omega_z);
  const GateEvaluation ev = evaluate_gate(ModeFrequencyProfile(c, SeparationMode::equilibrium), p);
  const double diff = ev.trajectories[0].final_phi_partial() - ev.trajectories[1].final_phi_partial();
  EXPECT_NEAR(geometric_phase(ev.trajectories), diff, 1e-13 * std::abs(ev.trajectories[0].final_phi_partial()));
  const auto series = geometric_phase_series(ev.trajectories);
  EXPECT_EQ(series.front(), 0.0);
  EXPECT_EQ(series.back(), geometric_phase(ev.trajectories));
}

TEST(GeometricPhase, IdenticalResponsesCancel) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeTrajectory com = integrate_mode_response(c, PulseShape::constant(5, 2e7, -0.06 * c.omega_z), Mode::com);
  ModeTrajectory twin = com;
  twin.mode = Mode::zigzag;
  EXPECT_NEAR(geometric_phase({com, twin}), 0.0, 1e-15 * std::abs(com.final_phi_partial()));
}

TEST(GeometricPhase, RejectsGridMismatch) {
  const PhysicalConfig c = reference_config(0.2);
  const PulseShape p = PulseShape::constant(5, 2e7, -0.06 * c.omega_z);
  GateIntegrationOptions coarse;
  coarse.samples_per_cycle = 60;
  const ModeTrajectory a = integrate_mode_response(c, p, Mode::com);
  const ModeTrajectory b = integrate_mode_response(c, p, Mode::zigzag, coarse);
  EXPECT_THROW(geometric_phase({a, b}), std::invalid_argument);
}

TEST(Closure, ZeroPulseResiduals) {
  const PhysicalConfig c = reference_config(0.2);
  const GateEvaluation ev =
      evaluate_gate(ModeFrequencyProfile(c, SeparationMode::equilibrium), PulseShape::constant(5, 0.0, -0.06 * c.omega_z));
  for (int n = 0; n < 2; ++n) {
    EXPECT_EQ(ev.result.residuals.delta_u[n], 0.0);
    EXPECT_EQ(ev.result.residuals.delta_u_dot[n], 0.0);
  }
  EXPECT_DOUBLE_EQ(ev.result.residuals.delta_phi, kPi / 4);
  EXPECT_NEAR(ev.result.fidelity.value, 1 - kPi * kPi / 16, 1e-15);
  EXPECT_NEAR(1 - kPi * kPi / 16, 0.3832, 1e-4);
}

TEST(Fidelity, QuadraticModel) {
  const PhysicalConfig c = reference_config(0.2);
  ClosureResiduals r;
  EXPECT_EQ(fidelity(r, c).value, 1.0);
  EXPECT_FALSE(fidelity(r, c).clamped);

  // Doubling (2 nbar + 1): nbar 2 -> 4.5.
  r.delta_u = {1e-10, 2e-10};
  r.delta_u_dot = {3e-4, -1e-4};
  PhysicalConfig hot = c;
  hot.nbar = {4.5, 4.5};
  EXPECT_NEAR(fidelity(r, hot).motional_infidelity / fidelity(r, c).motional_infidelity, 2.0, 1e-14);

  // Term by term: (m/2hbar)(du'^2/wz + wz du^2)(2n+1).
  const double m = c.ion_mass, wz = c.omega_z;
  double expected = 0;
  for (int n = 0; n < 2; ++n) {
    expected += m / (2 * kHbar) * (r.delta_u_dot[n] * r.delta_u_dot[n] / wz + wz * r.delta_u[n] * r.delta_u[n]) * 5;
  }
  EXPECT_NEAR(fidelity(r, c).motional_infidelity / expected, 1.0, 1e-14);

  ClosureResiduals big;
  big.delta_phi = 2.0;
  const FidelityEstimate f = fidelity(big, c);
  EXPECT_TRUE(f.clamped);
  EXPECT_EQ(f.value, 0.0);
  EXPECT_LT(f.raw, 0.0);
  EXPECT_EQ(infidelity(f), 1.0);
}

TEST(ErrorBudget, Terms) {
  const PhysicalConfig c = reference_config(0.2);
  OscillationRecord rec;
  rec.xi_max = Vec3(0.01 * c.w, 0.004 * c.w, 0.0);
  ErrorBudget b = error_budget(c, ClosureResiduals{}, rec);
  EXPECT_NEAR(b.dF2, 1.5707963267948966e-8, 1e-20);
  EXPECT_EQ(b.dF1, 0.0);
  EXPECT_NEAR(b.dF3, 1e-4, 1e-18);
  EXPECT_TRUE(b.dF3_is_estimate);
  rec.xi_max = Vec3::Zero();
  EXPECT_EQ(error_budget(c, ClosureResiduals{}, rec).dF2, 0.0);
  // dF3 follows eta^2 (2 nbar + 1).
  PhysicalConfig cold = c;
  cold.nbar = {0, 0};
  EXPECT_NEAR(error_budget(cold, ClosureResiduals{}, rec).dF3, 1e-4 / 5, 1e-18);
}

TEST(Closure, ClosedPulseAndScaleInvariance) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  const PulseShape p = testing::closed_pulse(prof, -0.06);
  const GateResult r = evaluate_gate_fast(prof, p);
  EXPECT_LE(r.closure_residual, 1e-6);
  EXPECT_NEAR(r.phi, -kPi / 4, 1e-8);
  EXPECT_GE(r.fidelity.value, 1 - 1e-6);
  for (double alpha : {0.3, 1.7}) {
    EXPECT_LE(evaluate_gate_fast(prof, p.scaled(alpha)).closure_residual, 1e-6) << alpha;
  }
}

TEST(Closure, InteractionPictureLoopsReturnToOrigin) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  const GateEvaluation ev = evaluate_gate(prof, testing::closed_pulse(prof, -0.06));
  for (const auto& tr : ev.trajectories) {
    const PhaseSpaceTrack track = interaction_picture(c, tr);
    EXPECT_EQ(track.z.front(), 0.0);
    EXPECT_EQ(track.p.front(), 0.0);
    double peak = 0;
    for (std::size_t i = 0; i < track.z.size(); ++i) peak = std::max(peak, std::hypot(track.z[i], track.p[i]));
    EXPECT_GT(peak, 0.5);
    EXPECT_LE(std::hypot(track.z.back(), track.p.back()), 1e-3 * peak);
  }
}

TEST(Closure, FastAndDenseEvaluationsAgree) {
  const PhysicalConfig c = reference_config(0.2);
  const ModeFrequencyProfile prof(c, SeparationMode::equilibrium);
  PulseShape p;
  p.chi = {1e7, 2e7, -3e7, 2e7, 1e7};
  p.mu = -0.05 * c.omega_z;
  const GateResult fast = evaluate_gate_fast(prof, p);
  const GateResult dense = evaluate_gate(prof, p).result;
  EXPECT_NEAR(fast.phi, dense.phi, 1e-8 * std::abs(dense.phi));
  for (int n = 0; n < 2; ++n) {
    EXPECT_NEAR(fast.delta_u_normalized[n], dense.delta_u_normalized[n], 1e-8 * dense.peak_excursion[n]);
    EXPECT_NEAR(fast.peak_excursion[n], dense.peak_excursion[n], 1e-3 * dense.peak_excursion[n]);
  }
}

}  // namespace
}  // namespace dtg
