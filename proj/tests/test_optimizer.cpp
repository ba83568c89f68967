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

#include <gtest/gtest.h>

#include "dtg/config.hpp"
#include "dtg/errors.hpp"
#include "dtg/gate.hpp"
#include "dtg/optimizer.hpp"
#include "support.hpp"

namespace dtg {
namespace {

constexpr double kPi = std::numbers::pi;

const ModeFrequencyProfile& profile_v02() {
  static const ModeFrequencyProfile p(reference_config(0.2), SeparationMode::equilibrium);
  return p;
}

TEST(Objective, ZeroPulseIsPhaseTermOnly) {
  const PhysicalConfig c = reference_config(0.2);
  EXPECT_NEAR(objective(profile_v02(), PulseShape::constant(5, 0.0, -0.06 * c.omega_z)), kPi * kPi / 16, 1e-15);
}

TEST(Objective, FailedIntegrationScoresInfinity) {
  const PhysicalConfig c = reference_config(0.2);
  PulseShape bad = PulseShape::constant(5, 1e7, -0.06 * c.omega_z);
  bad.chi[2] = std::nan("");
  EXPECT_TRUE(std::isinf(objective(profile_v02(), bad)));
}

TEST(Detuning, RelativeRoundTrip) {
  PhysicalConfig c = reference_config(0.2);
  PulseShape p;
  p.mu = detuning_from_relative(c, -0.06);
  EXPECT_DOUBLE_EQ(c.drive_frequency(p.mu), 0.94 * c.omega_z);
  EXPECT_NEAR(relative_detuning(c, p), -0.06, 1e-15);
  c.detuning_convention = DetuningConvention::absolute;
  p.mu = detuning_from_relative(c, -0.06);
  EXPECT_DOUBLE_EQ(p.mu, 0.94 * c.omega_z);
  EXPECT_NEAR(relative_detuning(c, p), -0.06, 1e-15);
}

TEST(Calibration, ScaleFactor) {
  EXPECT_DOUBLE_EQ(phase_scale_factor(-kPi / 16), 2.0);
  EXPECT_DOUBLE_EQ(phase_scale_factor(-kPi / 4), 1.0);
  EXPECT_DOUBLE_EQ(phase_scale_factor(-kPi), 0.5);
}

TEST(Calibration, HitsTargetAndIsIdempotent) {
  const PhysicalConfig c = reference_config(0.2);
  PulseShape p;
  p.chi = {1e7, 2e7, 3e7, 2e7, 1e7};
  p.mu = -0.06 * c.omega_z;
  const PulseShape once = calibrate_phase(profile_v02(), p);
  EXPECT_NEAR(evaluate_gate_fast(profile_v02(), once).phi, -kPi / 4, 1e-8);
  const PulseShape twice = calibrate_phase(profile_v02(), once);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(twice.chi[k] / once.chi[k], 1.0, 1e-8);
  // Pure rescaling keeps the shape.
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(once.chi[k] / once.chi[0], p.chi[k] / p.chi[0], 1e-12);
}

TEST(Calibration, RejectsZeroAndWrongSign) {
  const PhysicalConfig c = reference_config(0.2);
  EXPECT_THROW(calibrate_phase(profile_v02(), PulseShape::constant(5, 0.0, -0.06 * c.omega_z)), PhysicsError);
  PulseShape p;
  p.chi = {1e7, 2e7, 3e7, 2e7, 1e7};
  p.mu = -0.06 * c.omega_z;
  const double phi_red = evaluate_gate_fast(profile_v02(), p).phi;
  // Driving between the two mode frequencies flips the sign.
  p.mu = -0.0004 * c.omega_z;
  const double phi_blue = evaluate_gate_fast(profile_v02(), p).phi;
  ASSERT_LT(phi_red, 0.0);
  ASSERT_GT(phi_blue, 0.0);
  EXPECT_THROW(calibrate_phase(profile_v02(), p), PhysicsError);
}

TEST(EndpointMatrix, LinearInAmplitudes) {
  const PhysicalConfig c = reference_config(0.2);
  const double mu = -0.06 * c.omega_z;
  const Eigen::MatrixXd B = endpoint_matrix(profile_v02(), 5, mu, 1e-12);
  ASSERT_EQ(B.rows(), 4);
  ASSERT_EQ(B.cols(), 5);
  PulseShape p;
  p.chi = {2e7, -1e7, 3e7, 0.5e7, -2.5e7};
  p.mu = mu;
  const Eigen::Map<const Eigen::VectorXd> chi(p.chi.data(), 5);
  const Eigen::Vector4d predicted = B * chi;
  const GateResult r = evaluate_gate_fast(profile_v02(), p);
  const Eigen::Vector4d direct(r.delta_u_normalized[0], r.delta_u_dot_normalized[0], r.delta_u_normalized[1],
                               r.delta_u_dot_normalized[1]);
  // Endpoints are small differences of large excursions; compare on that scale.
  EXPECT_LE((predicted - direct).norm(), 1e-9 * std::max(r.peak_excursion[0], r.peak_excursion[1]));
}

TEST(EndpointMatrix, ProjectionCloses) {
  const PhysicalConfig c = reference_config(0.2);
  const Eigen::MatrixXd B = endpoint_matrix(profile_v02(), 5, -0.06 * c.omega_z, 1e-10);
  Eigen::VectorXd x(5);
  x << 1, 2, 3, 4, 5;
  const Eigen::VectorXd y = project_to_closure(B, x);
  EXPECT_LE((B * y).norm(), 1e-10 * B.norm() * y.norm());
  EXPECT_GT(y.norm(), 0.0);
  // One-dimensional null space: y is along the weakest right singular vector.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  EXPECT_NEAR(std::abs(svd.matrixV().col(4).dot(y)) / y.norm(), 1.0, 1e-9);
  // Idempotent on the closing subspace.
  EXPECT_LE((project_to_closure(B, y) - y).norm(), 1e-10 * y.norm());
}

TEST(EndpointMatrix, SingleSegmentCenterOfMassClosesOnWholeLoops) {
  // With constant amplitude the center-of-mass loop closes when the detuning
  // fits a whole number of turns into the window: mu T = 2 pi j.
  const PhysicalConfig c = reference_config(0.2);
  const double T = gate_window(c).T;
  const auto com_endpoint = [&](double turns) {
    const Eigen::MatrixXd B = endpoint_matrix(profile_v02(), 1, -2 * kPi * turns / T, 1e-11);
    return std::hypot(B(0, 0), B(1, 0));
  };
  for (int j : {10, 15}) {
    EXPECT_LT(com_endpoint(j), 0.1 * com_endpoint(j + 0.5)) << j;
  }
}

TEST(Evaluation, GridAndToleranceRefinementInvariant) {
  const ModeFrequencyProfile& prof = profile_v02();
  const PulseShape p = testing::closed_pulse(prof, -0.06);
  GateIntegrationOptions fine;
  fine.samples_per_cycle = 128;
  fine.tol = 1e-12;
  const GateResult a = evaluate_gate(prof, p).result;
  const GateResult b = evaluate_gate(prof, p, fine).result;
  EXPECT_NEAR(a.phi, b.phi, 1e-7);
  EXPECT_NEAR(a.fidelity.value, b.fidelity.value, 1e-7);
  EXPECT_LE(b.closure_residual, 1e-6);
}

TEST(Options, Validation) {
  OptimizationOptions o;
  EXPECT_NO_THROW(validate(o));
  o.segments = 1;
  EXPECT_THROW(validate(o), std::invalid_argument);
  o = {};
  o.mu_min = 0.1;
  EXPECT_THROW(validate(o), std::invalid_argument);
  o = {};
  o.starts = 0;
  EXPECT_THROW(validate(o), std::invalid_argument);
}

TEST(UniformStream, DeterministicUnitInterval) {
  UniformStream a(7), b(7), other(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    differs |= x != other.next();
  }
  EXPECT_TRUE(differs);
}

TEST(ClosureSearch, DrivesResidualDown) {
  const PhysicalConfig c = reference_config(0.2);
  OptimizationOptions o;
  o.max_evaluations = 250;
  const PulseShape guess = PulseShape::constant(5, 1e7, detuning_from_relative(c, -0.05));
  const double before = evaluate_gate_fast(ModeFrequencyProfile(c, SeparationMode::trap_center), guess).closure_residual;
  const ClosureSearch s = optimize_closure(c, guess, o);
  EXPECT_LT(s.closure_residual, 1e-6);
  EXPECT_LT(s.closure_residual, before);
  EXPECT_LE(s.evaluations, o.max_evaluations + 10);
}

class SmallOptimize : public ::testing::Test {
 protected:
  static OptimizationOptions options() {
    OptimizationOptions o;
    o.starts = 2;
    o.max_evaluations = 200;
    o.polish_evaluations = 30;
    return o;
  }
  static const OptimizedPulse& result() {
    static const OptimizedPulse r = optimize(reference_config(0.2), options());
    return r;
  }
};

TEST_F(SmallOptimize, ConvergesToTargetGate) {
  const OptimizedPulse& r = result();
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.pulse.segment_count(), 5u);
  EXPECT_GE(r.result.fidelity.value, 1 - 1e-6);
  EXPECT_NEAR(r.result.phi, -kPi / 4, 1e-6);
  EXPECT_LE(r.result.closure_residual, 1e-6);
  ASSERT_EQ(r.candidates.size(), 2u);
  for (const auto& cand : r.candidates) {
    const double lo = options().mu_min, hi = options().mu_max;
    EXPECT_GE(cand.start_mu_rel, lo);
    EXPECT_LE(cand.start_mu_rel, hi);
    if (!cand.ok) continue;
    EXPECT_LE(cand.objective, cand.objective_before_polish);
    EXPECT_GE(r.candidates[r.start_index].objective, 0.0);
    EXPECT_LE(r.candidates[r.start_index].objective, cand.objective);
  }
}

TEST_F(SmallOptimize, Deterministic) {
  const OptimizedPulse again = optimize(reference_config(0.2), options());
  EXPECT_EQ(again.pulse.chi, result().pulse.chi);
  EXPECT_EQ(again.pulse.mu, result().pulse.mu);
  EXPECT_EQ(again.start_index, result().start_index);
}

}  // namespace
}  // namespace dtg
