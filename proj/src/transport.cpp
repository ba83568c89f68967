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

#include "dtg/transport.hpp"

#include <cmath>
#include <limits>

#include "dtg/constants.hpp"
#include "dtg/errors.hpp"
#include "dtg/ode.hpp"
#include "dtg/parallel.hpp"

namespace dtg {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;

Vec3 trap_stiffness(const PhysicalConfig& c) {
  return c.ion_mass * Vec3(c.omega_x * c.omega_x, c.omega_y * c.omega_y, c.omega_z * c.omega_z);
}

// Gradient of the potential with respect to the trap-relative shifts (r1, r2).
Vec6 force_balance(const PhysicalConfig& c, const Vec3& stiffness, const Vec3& q2_center,
                   const Vec6& r) {
  const Vec3 delta = r.head<3>() - r.tail<3>() - q2_center;
  const double dist = delta.norm();
  const Vec3 coulomb = c.coulomb_constant() * delta / (dist * dist * dist);
  Vec6 g;
  g.head<3>() = stiffness.cwiseProduct(r.head<3>()) - coulomb;
  g.tail<3>() = stiffness.cwiseProduct(r.tail<3>()) + coulomb;
  return g;
}

// d(-K delta/|delta|^3)/d delta.
Mat3 coulomb_hessian(const PhysicalConfig& c, const Vec3& delta) {
  const double dist = delta.norm();
  const double d3 = dist * dist * dist;
  return c.coulomb_constant() * (3.0 * delta * delta.transpose() / (d3 * dist * dist) - Mat3::Identity() / d3);
}

Mat6 force_balance_jacobian(const PhysicalConfig& c, const Vec3& stiffness, const Vec3& q2_center,
                            const Vec6& r) {
  const Vec3 delta = r.head<3>() - r.tail<3>() - q2_center;
  const Mat3 h = coulomb_hessian(c, delta);
  Mat6 j = Mat6::Zero();
  j.diagonal().head<3>() = stiffness;
  j.diagonal().tail<3>() = stiffness;
  j.topLeftCorner<3, 3>() += h;
  j.topRightCorner<3, 3>() -= h;
  j.bottomLeftCorner<3, 3>() -= h;
  j.bottomRightCorner<3, 3>() += h;
  return j;
}

EquilibriumState solve_equilibrium_from(const PhysicalConfig& c, double t, const Vec6& guess,
                                        const EquilibriumOptions& options) {
  const TrapCenters centers = trap_centers(c, t);
  const Vec3 stiffness = trap_stiffness(c);
  EquilibriumState s;
  s.t = t;

  Vec6 r = guess;
  const double trap_distance = centers.q2.norm();
  const double force_scale = c.coulomb_constant() / (trap_distance * trap_distance);
  if (force_scale > 0) {
    Vec6 g = force_balance(c, stiffness, centers.q2, r);
    double gnorm = g.norm();
    const double target = options.relative_force_tol * force_scale;
    int it = 0;
    while (gnorm > target) {
      if (++it > options.max_iterations) {
        throw ConvergenceError("equilibrium solver did not converge at t = " + std::to_string(t) +
                               " (residual " + std::to_string(gnorm / force_scale) + " of K/R^2)");
      }
      const Mat6 j = force_balance_jacobian(c, stiffness, centers.q2, r);
      const Vec6 step = j.partialPivLu().solve(-g);
      double lambda = 1.0;
      Vec6 trial = r + step;
      Vec6 g_trial = force_balance(c, stiffness, centers.q2, trial);
      while (!(g_trial.norm() < gnorm) && lambda > 1e-6) {
        lambda *= 0.5;
        trial = r + lambda * step;
        g_trial = force_balance(c, stiffness, centers.q2, trial);
      }
      if (!(g_trial.norm() < gnorm)) {
        // Rounding floor: accept if it is already tight in absolute terms.
        if (gnorm <= 1e3 * target) break;
        throw ConvergenceError("equilibrium line search stalled at t = " + std::to_string(t));
      }
      r = trial;
      g = g_trial;
      gnorm = g.norm();
    }
    s.iterations = it;
    s.residual_force = gnorm;

    // Implicit derivative: J dr/dt = -dg/dt, with d(delta)/dt = -dQ2/dt.
    const Vec3 delta = r.head<3>() - r.tail<3>() - centers.q2;
    const Mat3 h = coulomb_hessian(c, delta);
    const Vec3 ddelta_dt(0.0, -c.v, 0.0);
    Vec6 dg_dt;
    dg_dt.head<3>() = h * ddelta_dt;
    dg_dt.tail<3>() = -h * ddelta_dt;
    const Vec6 rate = force_balance_jacobian(c, stiffness, centers.q2, r).partialPivLu().solve(-dg_dt);
    s.shift1_rate = rate.head<3>();
    s.shift2_rate = rate.tail<3>();
  }
  s.shift1 = r.head<3>();
  s.shift2 = r.tail<3>();
  s.q1_0 = centers.q1 + s.shift1;
  s.q2_0 = centers.q2 + s.shift2;
  s.R = (s.q1_0 - s.q2_0).norm();
  return s;
}

}  // namespace

TrapCenters trap_centers(const PhysicalConfig& config, double t) {
  return {Vec3::Zero(), Vec3(config.d, config.v * t, 0.0)};
}

EquilibriumState solve_equilibrium(const PhysicalConfig& config, double t,
                                   const EquilibriumOptions& options) {
  return solve_equilibrium_from(config, t, Vec6::Zero(), options);
}

std::string_view to_string(SeparationMode mode) {
  return mode == SeparationMode::trap_center ? "trap-center" : "equilibrium";
}

SeparationMode separation_mode_from_string(std::string_view text) {
  if (text == "equilibrium") return SeparationMode::equilibrium;
  if (text == "trap-center" || text == "trap_center") return SeparationMode::trap_center;
  throw std::invalid_argument("unknown separation mode '" + std::string(text) + "'");
}

double separation(const PhysicalConfig& config, double t, SeparationMode mode) {
  if (mode == SeparationMode::trap_center) return std::hypot(config.d, config.v * t);
  return solve_equilibrium(config, t).R;
}

std::pair<double, double> default_motion_span(const PhysicalConfig& config) {
  const double half = std::max(20.0 * config.d, 0.5 * config.w) / config.v;
  return {-half, half};
}

OscillationRecord integrate_classical_motion(const PhysicalConfig& c, double t_begin, double t_end,
                                             double tol, const ClassicalMotionOptions& options) {
  if (!(t_end > t_begin)) throw std::invalid_argument("integrate_classical_motion: empty span");
  if (!(tol > 0)) throw std::invalid_argument("integrate_classical_motion: tolerance must be positive");

  const double K = c.coulomb_constant();
  const double wx = c.omega_x;
  // Length unit: the closest-approach Coulomb shift scale; any length works when K = 0.
  const double length = K > 0 ? K / (c.ion_mass * wx * wx * c.d * c.d) : c.d;
  const Vec3 ratio_sq(1.0, (c.omega_y / wx) * (c.omega_y / wx), (c.omega_z / wx) * (c.omega_z / wx));
  const double coulomb_gain = K / (c.ion_mass * length * wx * wx);

  using State = Eigen::Matrix<double, 12, 1>;
  // Dimensionless time tau = omega_x t; positions in `length`, velocities in length * omega_x.
  auto rhs = [&](double tau, const State& y, State& dy) {
    const Vec3 q2_center(c.d, c.v * tau / wx, 0.0);
    const Vec3 delta = length * (y.segment<3>(0) - y.segment<3>(3)) - q2_center;
    const double dist = delta.norm();
    const Vec3 coulomb = coulomb_gain * delta / (dist * dist * dist);
    dy.segment<3>(0) = y.segment<3>(6);
    dy.segment<3>(3) = y.segment<3>(9);
    dy.segment<3>(6) = -ratio_sq.cwiseProduct(y.segment<3>(0)) + coulomb;
    dy.segment<3>(9) = -ratio_sq.cwiseProduct(y.segment<3>(3)) - coulomb;
  };

  const EquilibriumState start = solve_equilibrium(c, t_begin);
  State y;
  y.segment<3>(0) = start.shift1 / length;
  y.segment<3>(3) = start.shift2 / length;
  y.segment<3>(6) = start.shift1_rate / (length * wx);
  y.segment<3>(9) = start.shift2_rate / (length * wx);

  const double omega_max = std::max({c.omega_x, c.omega_y, c.omega_z});
  const double period = 2.0 * constants::pi / omega_max;
  const double span = t_end - t_begin;
  std::size_t intervals = static_cast<std::size_t>(std::ceil(span / period * options.samples_per_period));
  intervals = std::clamp<std::size_t>(intervals, 1000, std::max<std::size_t>(options.max_samples, 1000));

  OscillationRecord rec;
  rec.window = gate_window(c);
  rec.tol = tol;
  rec.t.reserve(intervals + 1);
  rec.xi1.reserve(intervals + 1);
  rec.xi2.reserve(intervals + 1);

  OdeOptions ode;
  ode.rtol = tol;
  ode.atol = tol;
  auto stepper = make_dopri<State>(rhs, ode);
  double tau = wx * t_begin;
  Vec6 warm = Vec6::Zero();
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double t = i == intervals ? t_end : t_begin + span * static_cast<double>(i) / intervals;
    stepper.advance(tau, y, wx * t);
    const EquilibriumState eq = solve_equilibrium_from(c, t, warm, {});
    warm.head<3>() = eq.shift1;
    warm.tail<3>() = eq.shift2;
    const Vec3 xi1 = length * y.segment<3>(0) - eq.shift1;
    const Vec3 xi2 = length * y.segment<3>(3) - eq.shift2;
    rec.t.push_back(t);
    rec.xi1.push_back(xi1);
    rec.xi2.push_back(xi2);
    const Vec3 local = xi1.cwiseAbs().cwiseMax(xi2.cwiseAbs());
    rec.xi_max_record = rec.xi_max_record.cwiseMax(local);
    if (rec.window.contains(t)) rec.xi_max = rec.xi_max.cwiseMax(local);
  }
  rec.steps = stepper.accepted_steps();
  return rec;
}

PhysicalConfig config_for_ratios(const PhysicalConfig& base, double f1_ratio, double f2_ratio) {
  if (!(f1_ratio > 0) || !(f2_ratio > 0)) throw std::invalid_argument("frequency ratios must be positive");
  const double f3 = frequency_scales(base).f3;
  const double f2 = f2_ratio * f3;
  PhysicalConfig c = base;
  c.d = std::cbrt(base.coulomb_constant() / (base.ion_mass * f2 * f2));
  c.w = base.w * (c.d / base.d);
  c.v = f1_ratio * f3 * c.d;
  validate(c);
  return c;
}

namespace {

void require_monotone(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument(std::string(name) + " grid must be strictly increasing");
  }
}

}  // namespace

SweepResult sweep_oscillation(const PhysicalConfig& base, const std::vector<double>& f1_ratios,
                              const std::vector<double>& f2_ratios, const SweepOptions& options) {
  require_monotone(f1_ratios, "f1/f3");
  require_monotone(f2_ratios, "f2/f3");
  SweepResult result;
  result.kind = "oscillation";
  result.x_name = "f1_over_f3";
  result.y_name = "f2_over_f3";
  result.value_name = "xi_x_max_over_d";
  result.x_values = f1_ratios;
  result.y_values = f2_ratios;
  result.cells.resize(f1_ratios.size() * f2_ratios.size());

  parallel_for(
      result.cells.size(),
      [&](std::size_t index) {
        SweepCell& cell = result.cells[index];
        cell.x = f1_ratios[index % f1_ratios.size()];
        cell.y = f2_ratios[index / f1_ratios.size()];
        try {
          const PhysicalConfig c = config_for_ratios(base, cell.x, cell.y);
          cell.v = c.v;
          cell.d = c.d;
          cell.w = c.w;
          const auto span = default_motion_span(c);
          const OscillationRecord rec = integrate_classical_motion(c, span.first, gate_window(c).end(), options.tol);
          cell.value = rec.xi_max.x() / c.d;
          cell.converged = true;
        } catch (const std::exception& e) {
          cell.value = std::numeric_limits<double>::quiet_NaN();
          cell.error = e.what();
        }
      },
      options.workers);

  result.metadata = {
      {"axis_mapping",
       {{"f1_over_f3", "v = (f1/f3) * f3 * d"},
        {"f2_over_f3", "d = (K / (m (f2/f3 * f3)^2))^(1/3)"},
        {"w", "scaled with d to keep w/d of the base configuration"},
        {"f3", "omega_x of the base configuration"}}},
      {"value", "max over the gate window of |xi_x| over both ions, divided by d"},
      {"integration",
       {{"method", "Dormand-Prince 5(4)"},
        {"relative_tolerance", options.tol},
        {"start", "t = -20 d / v at the instantaneous equilibrium"},
        {"end", "gate window end"}}}};
  return result;
}

SweepResult sweep_equilibrium(const PhysicalConfig& base, const std::vector<double>& f2_ratios,
                              const SweepOptions& options) {
  require_monotone(f2_ratios, "f2/f3");
  if (options.window_samples < 3) throw std::invalid_argument("window_samples must be >= 3");
  SweepResult result;
  result.kind = "equilibrium";
  result.x_name = "f2_over_f3";
  result.value_name = "q_max0_over_d";
  result.x_values = f2_ratios;
  result.cells.resize(f2_ratios.size());
  const double f1_ratio = frequency_scales(base).f1 / frequency_scales(base).f3;

  parallel_for(
      result.cells.size(),
      [&](std::size_t index) {
        SweepCell& cell = result.cells[index];
        cell.x = f2_ratios[index];
        try {
          PhysicalConfig c = config_for_ratios(base, f1_ratio, cell.x);
          c.v = base.v;
          validate(c);
          cell.v = c.v;
          cell.d = c.d;
          cell.w = c.w;
          const GateWindow window = gate_window(c);
          double best = -1;
          for (std::size_t i = 0; i < options.window_samples; ++i) {
            const double t = window.t0 + window.T * static_cast<double>(i) / (options.window_samples - 1);
            const double shift = solve_equilibrium(c, t).max_shift();
            if (shift > best) {
              best = shift;
              cell.t_at_max = t;
            }
          }
          cell.value = best / c.d;
          cell.converged = true;
        } catch (const std::exception& e) {
          cell.value = std::numeric_limits<double>::quiet_NaN();
          cell.error = e.what();
        }
      },
      options.workers);

  result.metadata = {
      {"axis_mapping",
       {{"f2_over_f3", "d = (K / (m (f2/f3 * f3)^2))^(1/3)"},
        {"v", "kept from the base configuration"},
        {"w", "scaled with d to keep w/d of the base configuration"},
        {"f3", "omega_x of the base configuration"}}},
      {"value", "max over the gate window of the larger ion's equilibrium shift from its trap center, divided by d"},
      {"window_samples", options.window_samples},
      {"equilibrium_solver", {{"method", "damped Newton"}, {"relative_force_tol", EquilibriumOptions{}.relative_force_tol}}}};
  return result;
}

}  // namespace dtg
