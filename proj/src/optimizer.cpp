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

#include "dtg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtg/constants.hpp"
#include "dtg/errors.hpp"
#include "dtg/nelder_mead.hpp"
#include "dtg/parallel.hpp"

namespace dtg {

namespace {

constexpr double kUnitChi = 1e7;  // rad/s; keeps endpoint columns well above atol
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void validate(const OptimizationOptions& o) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (o.segments < 2) throw std::invalid_argument("optimizer needs at least 2 segments");
  if (o.starts < 1) throw std::invalid_argument("optimizer needs at least one start");
  if (!finite(o.chi_bound) || o.chi_bound <= 0) throw std::invalid_argument("chi_bound must be finite and positive");
  if (!finite(o.ratio_bound) || o.ratio_bound <= 0) throw std::invalid_argument("ratio_bound must be finite and positive");
  if (!finite(o.mu_min) || !finite(o.mu_max) || o.mu_min >= o.mu_max) {
    throw std::invalid_argument("detuning bounds must be finite with mu_min < mu_max");
  }
  if (!(o.tol > 0) || !(o.report_tol > 0) || !(o.infidelity_tol > 0) || !(o.closure_tol > 0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
}

double objective(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol) {
  try {
    const GateResult r = evaluate_gate_fast(profile, pulse, tol);
    return infidelity(r.fidelity);
  } catch (const std::exception&) {
    return kInf;
  }
}

double objective(const PhysicalConfig& config, const PulseShape& pulse, double tol) {
  return objective(ModeFrequencyProfile(config, SeparationMode::equilibrium), pulse, tol);
}

double relative_detuning(const PhysicalConfig& config, const PulseShape& pulse) {
  return (config.drive_frequency(pulse.mu) - config.omega_z) / config.omega_z;
}

double detuning_from_relative(const PhysicalConfig& config, double mu_rel) {
  const double offset = mu_rel * config.omega_z;
  return config.detuning_convention == DetuningConvention::absolute ? config.omega_z + offset : offset;
}

Eigen::MatrixXd endpoint_matrix(const ModeFrequencyProfile& profile, std::size_t segments, double mu, double tol) {
  const PhysicalConfig& config = profile.config();
  const double x0 = config.ground_state_width();
  const double wz = config.omega_z;
  GateIntegrationOptions options;
  options.tol = tol;
  options.dense = false;
  Eigen::MatrixXd B(4, static_cast<Eigen::Index>(segments));
  for (std::size_t k = 0; k < segments; ++k) {
    PulseShape unit = PulseShape::constant(segments, 0.0, mu);
    unit.chi[k] = kUnitChi;
    for (Mode m : kModes) {
      const ModeTrajectory tr = integrate_mode_response(profile, unit, m, options);
      const int row = 2 * index_of(m);
      B(row, static_cast<Eigen::Index>(k)) = tr.final_u() / x0 / kUnitChi;
      B(row + 1, static_cast<Eigen::Index>(k)) = tr.final_u_dot() / (wz * x0) / kUnitChi;
    }
  }
  return B;
}

Eigen::VectorXd project_to_closure(const Eigen::MatrixXd& B, const Eigen::VectorXd& chi) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& V = svd.matrixV();
  const Eigen::Index n = V.cols();
  const double threshold = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
  Eigen::VectorXd projected = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool null_direction = i >= sv.size() || sv[i] <= threshold;
    if (null_direction) projected += V.col(i) * V.col(i).dot(chi);
  }
  if (projected.norm() >= 1e-3 * chi.norm() && projected.norm() > 0) return projected;
  Eigen::VectorXd weakest = V.col(n - 1);
  if (weakest.dot(chi) < 0) weakest = -weakest;
  return weakest * chi.norm();
}

ClosureSearch optimize_closure(const ModeFrequencyProfile& profile, const PulseShape& guess,
                               const OptimizationOptions& options) {
  validate(guess);
  const std::size_t S = guess.segment_count();
  if (S < 2) throw std::invalid_argument("closure search needs at least 2 segments");
  if (guess.chi[0] == 0) throw std::invalid_argument("closure search needs a nonzero first segment");
  const PhysicalConfig& config = profile.config();
  const double scale = guess.chi[0];

  const auto dim = static_cast<Eigen::Index>(S);  // S - 1 ratios plus the detuning
  Eigen::VectorXd x0(dim), step(dim), lower(dim), upper(dim);
  for (std::size_t k = 1; k < S; ++k) {
    const auto i = static_cast<Eigen::Index>(k - 1);
    x0[i] = guess.chi[k] / scale;
    step[i] = 0.25;
    lower[i] = -options.ratio_bound;
    upper[i] = options.ratio_bound;
  }
  x0[dim - 1] = relative_detuning(config, guess);
  step[dim - 1] = 2e-3;
  lower[dim - 1] = options.mu_min;
  upper[dim - 1] = options.mu_max;

  auto to_pulse = [&](const Eigen::VectorXd& x) {
    PulseShape p;
    p.chi.resize(S);
    p.chi[0] = scale;
    for (std::size_t k = 1; k < S; ++k) p.chi[k] = scale * x[static_cast<Eigen::Index>(k - 1)];
    p.mu = detuning_from_relative(config, x[dim - 1]);
    return p;
  };
  auto closure = [&](const Eigen::VectorXd& x) {
    try {
      return evaluate_gate_fast(profile, to_pulse(x), options.tol).closure_residual;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  nm.f_tol = 1e-16;
  nm.x_tol = 1e-8;
  const NelderMeadResult found = nelder_mead(closure, x0, step, lower, upper, nm);

  ClosureSearch out;
  out.evaluations = found.evaluations;
  PulseShape best = to_pulse(found.x);
  const Eigen::MatrixXd B = endpoint_matrix(profile, S, best.mu, options.tol);
  out.evaluations += S;
  const Eigen::VectorXd chi = Eigen::Map<const Eigen::VectorXd>(best.chi.data(), dim);
  const Eigen::VectorXd projected = project_to_closure(B, chi);
  PulseShape candidate = best;
  candidate.chi.assign(projected.data(), projected.data() + projected.size());

  const double before = found.f;
  double projected_residual = kInf;
  try {
    projected_residual = evaluate_gate_fast(profile, candidate, options.tol).closure_residual;
  } catch (const std::exception&) {
  }
  ++out.evaluations;
  if (projected_residual <= before) {
    out.pulse = candidate;
    out.closure_residual = projected_residual;
  } else {
    out.pulse = best;
    out.closure_residual = before;
  }
  out.converged = out.closure_residual <= options.closure_tol;
  return out;
}

ClosureSearch optimize_closure(const PhysicalConfig& config, const PulseShape& guess,
                               const OptimizationOptions& options) {
  return optimize_closure(ModeFrequencyProfile(config, SeparationMode::trap_center), guess, options);
}

double phase_scale_factor(double phi) { return std::sqrt((constants::pi / 4) / std::abs(phi)); }

namespace {

PulseShape calibrate_counted(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol,
                             std::size_t& evaluations) {
  PulseShape p = pulse;
  for (int iteration = 0; iteration < 4; ++iteration) {
    const double phi = evaluate_gate_fast(profile, p, tol).phi;
    ++evaluations;
    if (!std::isfinite(phi)) throw PhysicsError("pulse phase is not finite");
    if (std::abs(phi) <= 1e-14) throw PhysicsError("pulse accumulates no differential phase");
    if (phi > 0) throw PhysicsError("pulse accumulates a phase of the wrong sign for this detuning");
    if (std::abs(phi + constants::pi / 4) <= 1e-13) break;
    p = p.scaled(phase_scale_factor(phi));
  }
  return p;
}

}  // namespace

PulseShape calibrate_phase(const ModeFrequencyProfile& profile, const PulseShape& pulse, double tol) {
  validate(pulse);
  std::size_t evaluations = 0;
  return calibrate_counted(profile, pulse, tol, evaluations);
}

PulseShape calibrate_phase(const PhysicalConfig& config, const PulseShape& pulse, double tol) {
  return calibrate_phase(ModeFrequencyProfile(config, SeparationMode::equilibrium), pulse, tol);
}

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void run_start(const ModeFrequencyProfile& inner, const ModeFrequencyProfile& outer, const OptimizationOptions& options,
               const PulseShape& guess, Candidate& c) {
  const PhysicalConfig& config = outer.config();
  const std::size_t S = options.segments;
  const ClosureSearch shape = optimize_closure(inner, guess, options);
  c.closure_residual = shape.closure_residual;
  c.evaluations += shape.evaluations;

  // Redo the projection with the equilibrium separation, then fix the phase.
  const Eigen::MatrixXd B = endpoint_matrix(outer, S, shape.pulse.mu, options.tol);
  c.evaluations += S;
  const Eigen::VectorXd chi = Eigen::Map<const Eigen::VectorXd>(shape.pulse.chi.data(), static_cast<Eigen::Index>(S));
  const Eigen::VectorXd projected = project_to_closure(B, chi);
  PulseShape p = shape.pulse;
  p.chi.assign(projected.data(), projected.data() + projected.size());
  p = calibrate_counted(outer, p, options.tol, c.evaluations);

  c.pulse = p;
  c.objective = objective(outer, p, options.tol);
  ++c.evaluations;
  c.objective_before_polish = c.objective;

  if (options.polish_evaluations > 0 && std::isfinite(c.objective) && c.objective > 0) {
    const double scale = max_abs(p.chi);
    const auto dim = static_cast<Eigen::Index>(S + 1);
    Eigen::VectorXd x0(dim), step(dim), lower(dim), upper(dim);
    for (std::size_t k = 0; k < S; ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      x0[i] = p.chi[k] / scale;
      step[i] = 1e-7;
      lower[i] = -options.chi_bound / scale;
      upper[i] = options.chi_bound / scale;
    }
    x0[dim - 1] = relative_detuning(config, p);
    step[dim - 1] = 1e-9;
    lower[dim - 1] = options.mu_min;
    upper[dim - 1] = options.mu_max;
    auto to_pulse = [&](const Eigen::VectorXd& x) {
      PulseShape q;
      q.chi.resize(S);
      for (std::size_t k = 0; k < S; ++k) q.chi[k] = scale * x[static_cast<Eigen::Index>(k)];
      q.mu = detuning_from_relative(config, x[dim - 1]);
      return q;
    };
    NelderMeadOptions nm;
    nm.max_evaluations = options.polish_evaluations;
    nm.f_tol = 0;
    nm.x_tol = 1e-12;
    nm.restarts = 0;
    const NelderMeadResult polished =
        nelder_mead([&](const Eigen::VectorXd& x) { return objective(outer, to_pulse(x), options.tol); }, x0, step,
                    lower, upper, nm);
    c.evaluations += polished.evaluations;
    if (polished.f < c.objective) {
      c.pulse = to_pulse(polished.x);
      c.objective = polished.f;
      c.polish_accepted = true;
    }
  }

  if (max_abs(c.pulse.chi) > options.chi_bound) {
    throw PhysicsError("calibrated amplitude exceeds chi_bound");
  }
  // Final scores at the reporting tolerance; the polish is kept only if it
  // still wins there.
  const PulseShape unpolished = p;
  c.result = evaluate_gate_fast(outer, c.pulse, options.report_tol);
  ++c.evaluations;
  c.objective = infidelity(c.result.fidelity);
  if (c.polish_accepted) {
    const GateResult before = evaluate_gate_fast(outer, unpolished, options.report_tol);
    ++c.evaluations;
    c.objective_before_polish = infidelity(before.fidelity);
    if (!(c.objective < c.objective_before_polish)) {
      c.pulse = unpolished;
      c.result = before;
      c.objective = c.objective_before_polish;
      c.polish_accepted = false;
    }
  } else {
    c.objective_before_polish = c.objective;
  }
  c.ok = std::isfinite(c.objective);
  if (!c.ok) c.error = "objective is not finite";
}

}  // namespace

OptimizedPulse optimize(const PhysicalConfig& config, const OptimizationOptions& options) {
  validate(config);
  validate(options);
  const ModeFrequencyProfile inner(config, SeparationMode::trap_center);
  const ModeFrequencyProfile outer(config, SeparationMode::equilibrium);

  // Draw every start up front so the sequence does not depend on scheduling.
  UniformStream rng(options.seed);
  std::vector<PulseShape> guesses(options.starts);
  std::vector<double> start_mu(options.starts);
  for (std::size_t i = 0; i < options.starts; ++i) {
    const double u = (static_cast<double>(i) + rng.next()) / static_cast<double>(options.starts);
    start_mu[i] = options.mu_min + u * (options.mu_max - options.mu_min);
    PulseShape g;
    g.chi.resize(options.segments);
    g.chi[0] = kUnitChi;
    for (std::size_t k = 1; k < options.segments; ++k) g.chi[k] = kUnitChi * (2 * rng.next() - 0.5);
    g.mu = detuning_from_relative(config, start_mu[i]);
    guesses[i] = g;
  }

  std::vector<Candidate> candidates(options.starts);
  parallel_for(
      options.starts,
      [&](std::size_t i) {
        Candidate& c = candidates[i];
        c.start_index = i;
        c.start_mu_rel = start_mu[i];
        try {
          run_start(inner, outer, options, guesses[i], c);
        } catch (const std::exception& e) {
          c.ok = false;
          c.error = e.what();
        }
      },
      options.workers);

  OptimizedPulse out;
  const Candidate* best = nullptr;
  std::string failures;
  for (const Candidate& c : candidates) {
    out.evaluations += c.evaluations;
    if (!c.ok) {
      failures += "\n  start " + std::to_string(c.start_index) + ": " + c.error;
      continue;
    }
    if (best == nullptr || c.objective < best->objective) best = &c;
  }
  if (best == nullptr) throw ConvergenceError("every optimizer start failed:" + failures);
  out.pulse = best->pulse;
  out.result = best->result;
  out.start_index = best->start_index;
  out.converged = best->objective <= options.infidelity_tol;
  out.candidates = std::move(candidates);
  return out;
}

}  // namespace dtg
