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
#include <limits>

#include <gtest/gtest.h>

#include "dtg/nelder_mead.hpp"

namespace dtg {
namespace {

using Eigen::Vector2d;
using Eigen::VectorXd;

double rosenbrock(const VectorXd& x) {
  return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
}

TEST(NelderMead, Rosenbrock) {
  NelderMeadOptions o;
  o.max_evaluations = 5000;
  o.f_tol = 1e-20;
  o.x_tol = 1e-10;
  const auto r = nelder_mead(rosenbrock, Vector2d(-1.2, 1.0), Vector2d(0.5, 0.5), Vector2d(-5, -5), Vector2d(5, 5), o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_LT(r.f, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.evaluations, o.max_evaluations);
}

TEST(NelderMead, RespectsBounds) {
  const auto f = [](const VectorXd& x) { return std::pow(x[0] - 3, 2) + std::pow(x[1] + 2, 2); };
  const auto r = nelder_mead(f, Vector2d(0, 0), Vector2d(0.3, 0.3), Vector2d(-1, -1), Vector2d(1, 1));
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
  EXPECT_NEAR(r.x[1], -1.0, 1e-8);
}

TEST(NelderMead, NonFiniteValuesAreRejected) {
  const auto f = [](const VectorXd& x) {
    return x[0] < 0 ? std::numeric_limits<double>::quiet_NaN() : std::pow(x[0] - 0.5, 2);
  };
  VectorXd x0(1), step(1), lo(1), hi(1);
  x0 << 2;
  step << 1;
  lo << -10;
  hi << 10;
  const auto r = nelder_mead(f, x0, step, lo, hi);
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
  EXPECT_TRUE(std::isfinite(r.f));
}

TEST(NelderMead, BudgetAndDeterminism) {
  NelderMeadOptions o;
  o.max_evaluations = 50;
  const auto a = nelder_mead(rosenbrock, Vector2d(-1.2, 1.0), Vector2d(0.5, 0.5), Vector2d(-5, -5), Vector2d(5, 5), o);
  const auto b = nelder_mead(rosenbrock, Vector2d(-1.2, 1.0), Vector2d(0.5, 0.5), Vector2d(-5, -5), Vector2d(5, 5), o);
  EXPECT_LE(a.evaluations, 50u + 3u);
  EXPECT_FALSE(a.converged);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.f, b.f);
}

}  // namespace
}  // namespace dtg
