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

#include "dtg/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dtg {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  if (n == 0 || step.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("nelder_mead: dimension mismatch");
  }
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("nelder_mead: empty box");

  NelderMeadResult out;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(n + 1);
  std::vector<double> fv(n + 1);
  std::vector<std::size_t> order(n + 1);

  auto build = [&](const Eigen::VectorXd& centre, double centre_f) {
    simplex[0] = centre;
    fv[0] = centre_f;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd x = centre;
      x[i] += step[i];
      if (x[i] > upper[i]) x[i] = centre[i] - step[i];
      simplex[i + 1] = project(x);
      fv[i + 1] = eval(simplex[i + 1]);
    }
  };

  const Eigen::VectorXd start = project(x0);
  build(start, eval(start));
  int restarts_left = options.restarts;

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread_x = 0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      const Eigen::VectorXd d = (simplex[i] - simplex[best]).cwiseQuotient(step.cwiseAbs().cwiseMax(1e-300));
      spread_x = std::max(spread_x, d.cwiseAbs().maxCoeff());
    }
    const double spread_f = fv[worst] - fv[best];
    const bool small = spread_x <= options.x_tol || (std::isfinite(spread_f) && spread_f <= options.f_tol);
    if (small) {
      if (restarts_left-- > 0 && out.evaluations + n + 1 < options.max_evaluations) {
        const Eigen::VectorXd centre = simplex[best];
        const double cf = fv[best];
        build(centre, cf);
        continue;
      }
      out.converged = true;
      break;
    }
    if (out.evaluations >= options.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = project(centroid + (centroid - simplex[worst]));
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd xc =
        project(outside ? centroid + 0.5 * (xr - centroid) : centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      fv[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  out.x = simplex[static_cast<std::size_t>(it - fv.begin())];
  out.f = *it;
  return out;
}

}  // namespace dtg
