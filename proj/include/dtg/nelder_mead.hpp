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
#include <functional>

#include <Eigen/Dense>

namespace dtg {

struct NelderMeadOptions {
  std::size_t max_evaluations = 2000;
  /// Stop when the simplex spread in f falls below f_tol (absolute) ...
  double f_tol = 1e-14;
  /// ... and its largest edge below x_tol in the scaled coordinates.
  double x_tol = 1e-9;
  /// Rebuild the simplex around the best point this many times after
  /// convergence; guards against collapse onto a face.
  int restarts = 1;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Box-constrained Nelder-Mead. Trial points are projected onto
/// [lower, upper]; `step` sets the initial simplex edge per coordinate.
/// Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, const NelderMeadOptions& options = {});

}  // namespace dtg
