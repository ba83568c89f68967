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
#include <complex>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dtg/ode.hpp"

namespace dtg {
namespace {

TEST(DormandPrince, ExponentialDecay) {
  using S = Eigen::Matrix<double, 1, 1>;
  auto rhs = [](double, const S& y, S& dy) { dy = -y; };
  OdeOptions o;
  o.rtol = o.atol = 1e-12;
  auto solver = make_dopri<S>(rhs, o);
  S y;
  y << 1.0;
  double t = 0;
  solver.advance(t, y, 5.0);
  EXPECT_EQ(t, 5.0);
  EXPECT_NEAR(y[0], std::exp(-5.0), 1e-12);
}

TEST(DormandPrince, HarmonicOscillatorOverManyPeriods) {
  using S = Eigen::Vector2d;
  const double w = 3.0;
  auto rhs = [w](double, const S& y, S& dy) {
    dy[0] = y[1];
    dy[1] = -w * w * y[0];
  };
  OdeOptions o;
  o.rtol = o.atol = 1e-11;
  auto solver = make_dopri<S>(rhs, o);
  S y(1.0, 0.0);
  double t = 0;
  std::size_t calls = 0;
  solver.advance(t, y, 100.0, [&](double, const S&) { ++calls; });
  EXPECT_NEAR(y[0], std::cos(w * 100.0), 1e-8);
  EXPECT_NEAR(y[1], -w * std::sin(w * 100.0), 3e-8);
  EXPECT_EQ(calls, solver.accepted_steps());
}

TEST(DormandPrince, ResumesAcrossCalls) {
  using S = Eigen::Vector2d;
  auto rhs = [](double, const S& y, S& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeOptions o;
  o.rtol = o.atol = 1e-11;
  auto solver = make_dopri<S>(rhs, o);
  S y(0.0, 1.0);
  double t = 0;
  for (int k = 1; k <= 100; ++k) {
    solver.advance(t, y, 0.1 * k);
    ASSERT_EQ(t, 0.1 * k);
  }
  EXPECT_NEAR(y[0], std::sin(10.0), 1e-9);
}

TEST(DormandPrince, ComplexState) {
  using S = Eigen::VectorXcd;
  const std::complex<double> i(0, 1);
  auto rhs = [i](double, const S& y, S& dy) { dy = -i * 2.0 * y; };
  OdeOptions o;
  o.rtol = o.atol = 1e-12;
  auto solver = make_dopri<S>(rhs, o);
  S y = S::Ones(3);
  double t = 0;
  solver.advance(t, y, 10.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(std::abs(y[k] - std::exp(-i * 20.0)), 0.0, 1e-9);
}

TEST(DormandPrince, RejectsBackwardIntegration) {
  using S = Eigen::Vector2d;
  auto rhs = [](double, const S& y, S& dy) { dy = y; };
  auto solver = make_dopri<S>(rhs, OdeOptions{});
  S y(1, 1);
  double t = 1;
  EXPECT_THROW(solver.advance(t, y, 0.0), std::invalid_argument);
}

TEST(DormandPrince, StepBudgetExhaustion) {
  using S = Eigen::Vector2d;
  auto rhs = [](double, const S& y, S& dy) {
    dy[0] = y[1];
    dy[1] = -1e6 * y[0];
  };
  OdeOptions o;
  o.max_steps = 10;
  auto solver = make_dopri<S>(rhs, o);
  S y(1, 0);
  double t = 0;
  EXPECT_THROW(solver.advance(t, y, 100.0), StepUnderflowError);
}

}  // namespace
}  // namespace dtg
