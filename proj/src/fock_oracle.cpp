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

#include "dtg/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "dtg/constants.hpp"
#include "dtg/ode.hpp"
#include "dtg/parallel.hpp"

namespace dtg {

using cd = std::complex<double>;

BranchSpec BranchSpec::make(int s1, int s2) {
  if ((s1 != 1 && s1 != -1) || (s2 != 1 && s2 != -1)) throw std::invalid_argument("spin values must be +1 or -1");
  const ModeBasis basis = participation_matrix();
  BranchSpec b;
  b.s1 = s1;
  b.s2 = s2;
  for (Mode m : kModes) b.c[index_of(m)] = basis.drive_weight(m, s1, s2);
  return b;
}

std::array<BranchSpec, 4> all_branches() {
  return {BranchSpec::make(1, 1), BranchSpec::make(1, -1), BranchSpec::make(-1, 1), BranchSpec::make(-1, -1)};
}

std::vector<double> thermal_populations(double nbar, double weight) {
  if (!(nbar >= 0) || !std::isfinite(nbar)) throw std::invalid_argument("nbar must be finite and non-negative");
  if (!(weight > 0 && weight < 1)) throw std::invalid_argument("thermal weight must lie in (0, 1)");
  std::vector<double> p;
  if (nbar == 0) return {1.0};
  const double q = nbar / (nbar + 1);
  double pn = 1 / (nbar + 1);
  double total = 0;
  while (total < weight) {
    p.push_back(pn);
    total += pn;
    pn *= q;
    if (p.size() > 100000) throw PhysicsError("thermal distribution truncation did not converge");
  }
  for (double& x : p) x /= total;
  return p;
}

namespace {

/// Columns propagated together in one number basis. Phases are unwrapped
/// for pairs (reference column, column) at every accepted step.
struct ColumnRun {
  Eigen::MatrixXcd y;  // interaction picture w.r.t. hbar omega_z (N + 1/2)
  std::vector<double> phases;
  double min_overlap = 1;
  double top_population = 0;
  double norm_error = 0;
  std::size_t steps = 0;
};

struct ColumnSpec {
  std::vector<double> c;
  std::vector<std::size_t> level;
  std::vector<std::pair<std::size_t, std::size_t>> phase_pairs;
};

double wrap(double x) { return std::remainder(x, 2 * constants::pi); }

ColumnRun run_columns(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode, std::size_t dim,
                      const ColumnSpec& spec, double tol, double leakage_threshold) {
  validate(pulse);
  if (dim < 3) throw std::invalid_argument("number basis needs at least 3 levels");
  const PhysicalConfig& config = profile.config();
  const GateWindow window = gate_window(config);
  const double wz = config.omega_z;
  const double x0 = config.ground_state_width();
  const double carrier = config.drive_frequency(pulse.mu);
  const auto cols = static_cast<Eigen::Index>(spec.c.size());
  const auto D = static_cast<Eigen::Index>(dim);

  std::vector<double> sq(dim + 2);
  for (std::size_t n = 0; n < sq.size(); ++n) sq[n] = std::sqrt(static_cast<double>(n));
  std::vector<double> sq2(dim);  // sqrt((n + 1)(n + 2))
  for (std::size_t n = 0; n < dim; ++n) sq2[n] = sq[n + 1] * sq[n + 2];

  ColumnRun run;
  run.y = Eigen::MatrixXcd::Zero(D, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (spec.level[static_cast<std::size_t>(j)] >= dim) throw LeakageError("initial level outside the number basis");
    run.y(static_cast<Eigen::Index>(spec.level[static_cast<std::size_t>(j)]), j) = 1;
  }
  run.phases.assign(spec.phase_pairs.size(), 0.0);
  std::vector<double> last_arg(spec.phase_pairs.size(), 0.0);

  auto observe = [&](double, const Eigen::MatrixXcd& y) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double top = std::norm(y(D - 1, j)) + std::norm(y(D - 2, j));
      run.top_population = std::max(run.top_population, top);
    }
    for (std::size_t k = 0; k < spec.phase_pairs.size(); ++k) {
      const auto [ref, col] = spec.phase_pairs[k];
      const cd ov = y.col(static_cast<Eigen::Index>(ref)).dot(y.col(static_cast<Eigen::Index>(col)));
      run.min_overlap = std::min(run.min_overlap, std::abs(ov));
      const double a = std::arg(ov);
      run.phases[k] += wrap(a - last_arg[k]);
      last_arg[k] = a;
    }
  };

  OdeOptions ode;
  ode.rtol = tol;
  ode.atol = tol;
  const double seg = window.T / static_cast<double>(pulse.segment_count());
  double t = window.t0;
  double h = 0;
  for (std::size_t k = 0; k < pulse.segment_count(); ++k) {
    const double kappa0 = -config.k_eff * x0 * pulse.chi[k];
    auto rhs = [&, kappa0](double tt, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
      const double s = tt - window.t0;
      const double g = (profile.omega_sq(mode, tt) - wz * wz) / (4 * wz);
      const double kappa = kappa0 * std::sin(carrier * tt);
      const cd e1 = std::polar(1.0, -wz * s);
      const cd e2 = e1 * e1;
      const cd ge2 = g * e2;
      const cd ge2c = std::conj(ge2);
      const cd mi(0, -1);
      for (Eigen::Index j = 0; j < cols; ++j) {
        const cd* psi = y.col(j).data();
        cd* out = dy.col(j).data();
        const cd ke1 = spec.c[static_cast<std::size_t>(j)] * kappa * e1;
        const cd ke1c = std::conj(ke1);
        for (Eigen::Index n = 0; n < D; ++n) {
          const auto un = static_cast<std::size_t>(n);
          cd acc = g * (2.0 * static_cast<double>(n) + 1.0) * psi[n];
          if (n + 2 < D) acc += ge2 * sq2[un] * psi[n + 2];
          if (n >= 2) acc += ge2c * sq2[un - 2] * psi[n - 2];
          if (n + 1 < D) acc += ke1 * sq[un + 1] * psi[n + 1];
          if (n >= 1) acc += ke1c * sq[un] * psi[n - 1];
          out[n] = mi * acc;
        }
      }
    };
    auto stepper = make_dopri<Eigen::MatrixXcd>(rhs, ode, h);
    const double end = k + 1 == pulse.segment_count() ? window.end() : window.t0 + seg * static_cast<double>(k + 1);
    stepper.advance(t, run.y, end, observe);
    h = stepper.suggested_step();
    run.steps += stepper.accepted_steps();
    if (run.top_population > leakage_threshold) {
      throw LeakageError("population " + std::to_string(run.top_population) + " reached the top of a " +
                         std::to_string(dim) + "-level basis");
    }
  }
  for (Eigen::Index j = 0; j < cols; ++j) run.norm_error = std::max(run.norm_error, std::abs(run.y.col(j).norm() - 1));
  return run;
}

Eigen::VectorXcd to_schroedinger(const Eigen::VectorXcd& psi, double omega_z, double s) {
  Eigen::VectorXcd out(psi.size());
  for (Eigen::Index n = 0; n < psi.size(); ++n) {
    out[n] = std::polar(1.0, -omega_z * (static_cast<double>(n) + 0.5) * s) * psi[n];
  }
  return out;
}

cd lowering_expectation(const Eigen::VectorXcd& psi) {
  cd a = 0;
  for (Eigen::Index n = 0; n + 1 < psi.size(); ++n) {
    a += std::conj(psi[n]) * std::sqrt(static_cast<double>(n + 1)) * psi[n + 1];
  }
  return a;
}

// The three distinct drive weights per mode, in column-block order.
constexpr int kWeights = 3;

int weight_index(double c) {
  if (std::abs(c) < 1e-12) return 1;
  return c > 0 ? 0 : 2;
}

struct ModeSolution {
  ColumnRun run;
  std::size_t dim = 0;
  std::size_t levels = 0;
  std::array<double, kWeights> c{0, 0, 0};
  std::array<double, kWeights> theta{0, 0, 0};
};

ModeSolution solve_mode(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode, std::size_t dim,
                        std::size_t levels, const OracleOptions& options) {
  const ModeBasis basis = participation_matrix();
  double cmax = 0;
  for (const auto& b : all_branches()) cmax = std::max(cmax, basis.drive_weight(mode, b.s1, b.s2));
  ModeSolution sol;
  sol.dim = dim;
  sol.levels = levels;
  sol.c = {cmax, 0.0, -cmax};
  ColumnSpec spec;
  for (int w = 0; w < kWeights; ++w) {
    for (std::size_t n = 0; n < levels; ++n) {
      spec.c.push_back(sol.c[static_cast<std::size_t>(w)]);
      spec.level.push_back(n);
    }
  }
  spec.phase_pairs = {{levels, 0}, {levels, 2 * levels}};
  sol.run = run_columns(profile, pulse, mode, dim, spec, options.tol, options.leakage_threshold);
  sol.theta = {sol.run.phases[0], 0.0, sol.run.phases[1]};
  return sol;
}

std::size_t initial_dimension(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode,
                              std::size_t levels, const OracleOptions& options) {
  if (!options.auto_n_max) return options.n_max;
  GateIntegrationOptions g;
  g.dense = false;
  const double peak = integrate_mode_response(profile, pulse, mode, g).peak_excursion;
  const double alpha = std::sqrt(2.0) * peak / 2;
  const double reach = std::sqrt(static_cast<double>(levels)) + alpha;
  const auto estimate = static_cast<std::size_t>(std::ceil(reach * reach + 6 * reach + 10));
  return std::max(options.n_max, std::min(estimate, options.n_max_limit));
}

ModeSolution solve_mode_sized(const ModeFrequencyProfile& profile, const PulseShape& pulse, Mode mode,
                              std::size_t levels, const OracleOptions& options) {
  std::size_t dim = initial_dimension(profile, pulse, mode, levels, options);
  while (true) {
    try {
      return solve_mode(profile, pulse, mode, dim, levels, options);
    } catch (const LeakageError&) {
      if (!options.auto_n_max || dim + options.n_max_step > options.n_max_limit) throw;
      dim += options.n_max_step;
    }
  }
}

struct BranchPhases {
  std::array<double, 4> theta{0, 0, 0, 0};
  double phi_ent = 0;
  double global = 0;
  std::array<double, 2> single{0, 0};
};

BranchPhases branch_phases(const std::array<ModeSolution, 2>& sol) {
  BranchPhases out;
  const auto branches = all_branches();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& b = branches[i];
    double th = 0;
    for (Mode m : kModes) {
      const int n = index_of(m);
      th += sol[static_cast<std::size_t>(n)].theta[static_cast<std::size_t>(weight_index(b.c[n]))];
    }
    out.theta[i] = th;
    out.global += th / 4;
    out.single[0] += th * b.s1 / 4;
    out.single[1] += th * b.s2 / 4;
    out.phi_ent += th * b.s1 * b.s2 / 4;
  }
  return out;
}

double thermal_fidelity(const std::array<ModeSolution, 2>& sol, const std::array<std::vector<double>, 2>& pops) {
  const double target = -constants::pi / 4;
  const auto branches = all_branches();
  // O_n[level](w', w) = <psi^{w'}_level | psi^{w}_level>.
  std::array<std::vector<Eigen::Matrix3cd>, 2> overlaps;
  for (int n = 0; n < 2; ++n) {
    const auto& s = sol[static_cast<std::size_t>(n)];
    const auto L = s.levels;
    for (std::size_t lvl = 0; lvl < L; ++lvl) {
      Eigen::Matrix3cd O;
      for (int a = 0; a < kWeights; ++a) {
        for (int b = 0; b < kWeights; ++b) {
          O(a, b) = s.run.y.col(static_cast<Eigen::Index>(a * L + lvl)).dot(s.run.y.col(static_cast<Eigen::Index>(b * L + lvl)));
        }
      }
      overlaps[static_cast<std::size_t>(n)].push_back(O);
    }
  }
  double total = 0;
  for (std::size_t n1 = 0; n1 < pops[0].size(); ++n1) {
    const auto& O1 = overlaps[0][n1];
    for (std::size_t n2 = 0; n2 < pops[1].size(); ++n2) {
      const auto& O2 = overlaps[1][n2];
      cd acc = 0;
      for (const auto& s : branches) {
        for (const auto& sp : branches) {
          const cd ph = std::polar(1.0, target * (sp.s1 * sp.s2 - s.s1 * s.s2));
          acc += ph * O1(weight_index(sp.c[0]), weight_index(s.c[0])) * O2(weight_index(sp.c[1]), weight_index(s.c[1]));
        }
      }
      total += pops[0][n1] * pops[1][n2] * acc.real() / 16;
    }
  }
  return total;
}

std::array<ModeSolution, 2> solve_both(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                                       const std::array<std::size_t, 2>& levels, const OracleOptions& options,
                                       const std::array<std::size_t, 2>* fixed_dim) {
  std::array<ModeSolution, 2> sol;
  parallel_for(
      2,
      [&](std::size_t n) {
        const Mode m = kModes[n];
        if (fixed_dim != nullptr) {
          sol[n] = solve_mode(profile, pulse, m, (*fixed_dim)[n], levels[n], options);
        } else {
          sol[n] = solve_mode_sized(profile, pulse, m, levels[n], options);
        }
      },
      options.workers);
  return sol;
}

void require_overlap(const std::array<ModeSolution, 2>& sol, double threshold) {
  for (const auto& s : sol) {
    if (s.run.min_overlap < threshold) {
      throw PhysicsError("branch overlap fell to " + std::to_string(s.run.min_overlap) +
                         "; the branch phase is ill-conditioned");
    }
  }
}

}  // namespace

BranchState propagate_branch(const ModeFrequencyProfile& profile, const PulseShape& pulse, double c, Mode mode,
                             std::size_t n_max, double tol, std::size_t initial_level, double leakage_threshold) {
  ColumnSpec spec;
  spec.c = {c};
  spec.level = {initial_level};
  const ColumnRun run = run_columns(profile, pulse, mode, n_max, spec, tol, leakage_threshold);
  BranchState st;
  st.mode = mode;
  st.n_max = n_max;
  st.amplitudes = to_schroedinger(run.y.col(0), profile.config().omega_z, gate_window(profile.config()).T);
  st.norm_error = run.norm_error;
  st.top_population = run.top_population;
  return st;
}

PhaseSpaceCentre phase_space_centre(const PhysicalConfig& config, const BranchState& state) {
  const cd a = lowering_expectation(state.amplitudes);
  const double x0 = config.ground_state_width();
  return {2 * x0 * a.real(), 2 * config.ion_mass * config.omega_z * x0 * a.imag()};
}

double entangling_phase_from_oracle(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                                    const OracleOptions& options) {
  const auto sol = solve_both(profile, pulse, {1, 1}, options, nullptr);
  require_overlap(sol, options.min_overlap);
  return branch_phases(sol).phi_ent;
}

double oracle_gate_fidelity(const ModeFrequencyProfile& profile, const PulseShape& pulse,
                            const OracleOptions& options) {
  const PhysicalConfig& config = profile.config();
  const std::array<std::vector<double>, 2> pops{thermal_populations(config.nbar[0], options.thermal_weight),
                                                thermal_populations(config.nbar[1], options.thermal_weight)};
  const auto sol = solve_both(profile, pulse, {pops[0].size(), pops[1].size()}, options, nullptr);
  return thermal_fidelity(sol, pops);
}

OracleReport verify(const ModeFrequencyProfile& profile, const PulseShape& pulse, const OracleOptions& options) {
  const PhysicalConfig& config = profile.config();
  const std::array<std::vector<double>, 2> pops{thermal_populations(config.nbar[0], options.thermal_weight),
                                                thermal_populations(config.nbar[1], options.thermal_weight)};
  const std::array<std::size_t, 2> levels{pops[0].size(), pops[1].size()};
  const auto sol = solve_both(profile, pulse, levels, options, nullptr);
  require_overlap(sol, options.min_overlap);

  OracleReport rep;
  const BranchPhases bp = branch_phases(sol);
  rep.phi_ent = bp.phi_ent;
  rep.branch_phases = bp.theta;
  rep.global_phase = bp.global;
  rep.single_qubit_phases = bp.single;
  rep.oracle_fidelity = thermal_fidelity(sol, pops);
  rep.phi_delta = std::abs(rep.phi_ent + constants::pi / 4);

  const GateResult model = evaluate_gate_fast(profile, pulse, std::min(options.tol, 1e-12));
  rep.model_fidelity = model.fidelity.value;
  rep.model_phi = model.phi;
  rep.fidelity_delta = std::abs(rep.oracle_fidelity - rep.model_fidelity);

  const double T = gate_window(config).T;
  const double x0 = config.ground_state_width();
  for (const auto& b : all_branches()) {
    for (Mode m : kModes) {
      const int n = index_of(m);
      const auto& s = sol[static_cast<std::size_t>(n)];
      const int w = weight_index(b.c[n]);
      const Eigen::VectorXcd psi = to_schroedinger(s.run.y.col(static_cast<Eigen::Index>(w * s.levels)), config.omega_z, T);
      const cd a = lowering_expectation(psi);
      DisplacementCheck d;
      d.s1 = b.s1;
      d.s2 = b.s2;
      d.mode = m;
      d.c = b.c[n];
      d.z = 2 * a.real();
      d.p = 2 * a.imag();
      d.z_expected = -b.c[n] * model.residuals.delta_u[n] / x0;
      d.p_expected = -b.c[n] * model.residuals.delta_u_dot[n] / (config.omega_z * x0);
      d.error = std::max(std::abs(d.z - d.z_expected), std::abs(d.p - d.p_expected));
      rep.max_displacement_error = std::max(rep.max_displacement_error, d.error);
      rep.displacements.push_back(d);
    }
  }

  rep.min_overlap = 1;
  for (int n = 0; n < 2; ++n) {
    const auto& s = sol[static_cast<std::size_t>(n)];
    rep.n_max[n] = s.dim;
    rep.thermal_levels[n] = s.levels;
    rep.max_top_population = std::max(rep.max_top_population, s.run.top_population);
    rep.max_norm_error = std::max(rep.max_norm_error, s.run.norm_error);
    rep.min_overlap = std::min(rep.min_overlap, s.run.min_overlap);
  }
  rep.convergence.push_back({rep.n_max, rep.phi_ent, rep.oracle_fidelity});

  if (options.convergence_check) {
    const std::array<std::size_t, 2> bigger{rep.n_max[0] + 10, rep.n_max[1] + 10};
    const auto sol2 = solve_both(profile, pulse, levels, options, &bigger);
    const double phi2 = branch_phases(sol2).phi_ent;
    const double f2 = thermal_fidelity(sol2, pops);
    rep.convergence.push_back({bigger, phi2, f2});
    rep.convergence_phi_delta = std::abs(phi2 - rep.phi_ent);
    rep.convergence_fidelity_delta = std::abs(f2 - rep.oracle_fidelity);
  }
  return rep;
}

OracleReport verify(const PhysicalConfig& config, const PulseShape& pulse, const OracleOptions& options) {
  return verify(ModeFrequencyProfile(config, SeparationMode::equilibrium), pulse, options);
}

}  // namespace dtg
