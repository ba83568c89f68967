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

#include <Eigen/Dense>

#include "dtg/config.hpp"
#include "dtg/gate.hpp"
#include "dtg/modes.hpp"
#include "dtg/optimizer.hpp"

namespace dtg::testing {

/// Closing five-segment pulse at a fixed detuning, calibrated to -pi/4:
/// flat start shape projected onto the null space of the endpoint map.
inline PulseShape closed_pulse(const ModeFrequencyProfile& profile, double mu_rel, double tol = 1e-12) {
  const PhysicalConfig& c = profile.config();
  const double mu = detuning_from_relative(c, mu_rel);
  const Eigen::MatrixXd B = endpoint_matrix(profile, 5, mu, tol);
  const Eigen::VectorXd chi = project_to_closure(B, Eigen::VectorXd::Constant(5, 1e7));
  PulseShape p;
  p.chi.assign(chi.data(), chi.data() + chi.size());
  p.mu = mu;
  return calibrate_phase(profile, p, tol);
}

}  // namespace dtg::testing
