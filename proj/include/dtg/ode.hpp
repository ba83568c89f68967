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

// Adaptive Dormand-Prince 5(4) integrator over Eigen dense states.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "dtg/errors.hpp"

namespace dtg {

class StepUnderflowError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  /// Largest step; 0 means unbounded.
  double max_step = 0;
  std::size_t max_steps = 100'000'000;
};

struct NoObserver {
  template <class State>
  void operator()(double, const State&) const {}
};

/// `Rhs` is callable as rhs(t, y, dydt) writing dy/dt into a preallocated
/// state of the same shape. `State` is any Eigen dense object (real or
/// complex). The step-size controller state and the first-same-as-last stage
/// persist across advance() calls, so a single instance must only be used
/// while the right-hand side is continuous; start a new instance at a
/// discontinuity and pass the old suggested_step() along.
template <class State, class Rhs>
class DormandPrince45 {
 public:
  DormandPrince45(Rhs rhs, OdeOptions options, double initial_step = 0)
      : rhs_(std::move(rhs)), options_(options), h_(initial_step) {}

  /// Advances (t, y) to exactly t_end, calling observer(t, y) after every
  /// accepted step.
  template <class Observer = NoObserver>
  void advance(double& t, State& y, double t_end, Observer&& observer = {}) {
    if (t_end == t) return;
    if (!(t_end > t)) throw std::invalid_argument("DormandPrince45 integrates forward only");
    ensure_storage(y);
    if (!fsal_valid_) {
      rhs_(t, y, k1_);
      ++evaluations_;
      fsal_valid_ = true;
    }
    if (h_ <= 0) h_ = initial_step(t, y, t_end);

    while (t < t_end) {
      if (accepted_ + rejected_ >= options_.max_steps) {
        throw StepUnderflowError("ODE step budget exhausted at t = " + std::to_string(t));
      }
      double h = h_;
      if (options_.max_step > 0) h = std::min(h, options_.max_step);
      bool last = false;
      if (t + h >= t_end || (t_end - t - h) < 1e-12 * h) {
        h = t_end - t;
        last = true;
      }
      const double min_h = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), std::abs(t_end));
      if (h < min_h && !last) {
        throw StepUnderflowError("ODE step size underflow at t = " + std::to_string(t));
      }

      const double err = attempt(t, y, h);
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y.swap(y_new_);
        k1_.swap(k7_);
        ++accepted_;
        const double factor = err == 0 ? kMaxGrowth : std::clamp(kSafety * std::pow(err, -0.2), kMinShrink, kMaxGrowth);
        // Do not let the final clamped step shrink the controller's estimate.
        if (!last || h * factor > h_) h_ = h * factor;
        observer(t, static_cast<const State&>(y));
      } else {
        ++rejected_;
        h_ = h * std::max(kMinShrink, kSafety * std::pow(err, -0.2));
        if (h_ < min_h) throw StepUnderflowError("ODE step size underflow at t = " + std::to_string(t));
      }
    }
  }

  double suggested_step() const { return h_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  static constexpr double kSafety = 0.9;
  static constexpr double kMinShrink = 0.2;
  static constexpr double kMaxGrowth = 5.0;

  void ensure_storage(const State& y) {
    if (k1_.size() == y.size() && k1_.rows() == y.rows()) return;
    for (State* s : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y_new_}) s->resizeLike(y);
    fsal_valid_ = false;
  }

  double error_norm(const State& err, const State& y0, const State& y1) const {
    const auto scale = options_.atol + options_.rtol * y0.array().abs().max(y1.array().abs());
    return std::sqrt((err.array().abs() / scale).square().mean());
  }

  double initial_step(double t, const State& y, double t_end) {
    const auto scale = options_.atol + options_.rtol * y.array().abs();
    const double d0 = std::sqrt((y.array().abs() / scale).square().mean());
    const double d1 = std::sqrt((k1_.array().abs() / scale).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * (t_end - t) : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t);
    tmp_ = y + h0 * k1_;
    rhs_(t + h0, tmp_, k2_);
    ++evaluations_;
    const double d2 = std::sqrt(((k2_ - k1_).array().abs() / scale).square().mean()) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? 100.0 * h0 : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, t_end - t});
  }

  // One trial step; leaves the candidate in y_new_ and its derivative in k7_.
  double attempt(double t, const State& y, double h) {
    tmp_ = y + h * (1.0 / 5.0) * k1_;
    rhs_(t + h / 5.0, tmp_, k2_);
    tmp_ = y + h * ((3.0 / 40.0) * k1_ + (9.0 / 40.0) * k2_);
    rhs_(t + 3.0 * h / 10.0, tmp_, k3_);
    tmp_ = y + h * ((44.0 / 45.0) * k1_ - (56.0 / 15.0) * k2_ + (32.0 / 9.0) * k3_);
    rhs_(t + 4.0 * h / 5.0, tmp_, k4_);
    tmp_ = y + h * ((19372.0 / 6561.0) * k1_ - (25360.0 / 2187.0) * k2_ + (64448.0 / 6561.0) * k3_ -
                    (212.0 / 729.0) * k4_);
    rhs_(t + 8.0 * h / 9.0, tmp_, k5_);
    tmp_ = y + h * ((9017.0 / 3168.0) * k1_ - (355.0 / 33.0) * k2_ + (46732.0 / 5247.0) * k3_ +
                    (49.0 / 176.0) * k4_ - (5103.0 / 18656.0) * k5_);
    rhs_(t + h, tmp_, k6_);
    y_new_ = y + h * ((35.0 / 384.0) * k1_ + (500.0 / 1113.0) * k3_ + (125.0 / 192.0) * k4_ -
                      (2187.0 / 6784.0) * k5_ + (11.0 / 84.0) * k6_);
    rhs_(t + h, y_new_, k7_);
    evaluations_ += 6;
    tmp_ = h * ((71.0 / 57600.0) * k1_ - (71.0 / 16695.0) * k3_ + (71.0 / 1920.0) * k4_ -
                (17253.0 / 339200.0) * k5_ + (22.0 / 525.0) * k6_ - (1.0 / 40.0) * k7_);
    const double err = error_norm(tmp_, y, y_new_);
    return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
  }

  Rhs rhs_;
  OdeOptions options_;
  double h_;
  bool fsal_valid_ = false;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t evaluations_ = 0;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
};

template <class State, class Rhs>
DormandPrince45<State, Rhs> make_dopri(Rhs rhs, OdeOptions options, double initial_step = 0) {
  return DormandPrince45<State, Rhs>(std::move(rhs), options, initial_step);
}

}  // namespace dtg
