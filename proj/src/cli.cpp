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

#include "dtg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtg/constants.hpp"
#include "dtg/errors.hpp"
#include "dtg/io.hpp"
#include "dtg/modes.hpp"
#include "dtg/transport.hpp"

namespace dtg {

nlohmann::json to_json(const GateResult& r) {
  nlohmann::json doc;
  doc["phi"] = r.phi;
  doc["delta_u"] = r.residuals.delta_u;
  doc["delta_u_dot"] = r.residuals.delta_u_dot;
  doc["delta_phi"] = r.residuals.delta_phi;
  doc["delta_u_over_x0"] = r.delta_u_normalized;
  doc["delta_u_dot_over_omega_z_x0"] = r.delta_u_dot_normalized;
  doc["peak_excursion_over_x0"] = r.peak_excursion;
  doc["closure_residual"] = r.closure_residual;
  doc["fidelity"] = r.fidelity.value;
  doc["infidelity"] = infidelity(r.fidelity);
  doc["fidelity_raw"] = r.fidelity.raw;
  doc["fidelity_clamped"] = r.fidelity.clamped;
  doc["motional_infidelity"] = r.fidelity.motional_infidelity;
  doc["phase_infidelity"] = r.fidelity.phase_infidelity;
  if (r.budget) {
    doc["error_budget"] = {{"dF1", r.budget->dF1},
                           {"dF2", r.budget->dF2},
                           {"dF3", r.budget->dF3},
                           {"dF3_is_estimate", r.budget->dF3_is_estimate}};
  }
  return doc;
}

nlohmann::json to_json(const OptimizedPulse& o, const PhysicalConfig& config) {
  nlohmann::json doc;
  doc["pulse"] = pulse_to_json(o.pulse, config);
  doc["result"] = to_json(o.result);
  doc["infidelity"] = infidelity(o.result.fidelity);
  doc["evaluations"] = o.evaluations;
  doc["converged"] = o.converged;
  doc["start_index"] = o.start_index;
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : o.candidates) {
    nlohmann::json j;
    j["start_index"] = c.start_index;
    j["ok"] = c.ok;
    j["start_mu_over_omega_z"] = c.start_mu_rel;
    if (c.ok) {
      j["chi"] = c.pulse.chi;
      j["mu_over_omega_z"] = relative_detuning(config, c.pulse);
      j["objective"] = c.objective;
      j["closure_residual"] = c.closure_residual;
      j["objective_before_polish"] = c.objective_before_polish;
      j["polish_accepted"] = c.polish_accepted;
      j["phi"] = c.result.phi;
    } else {
      j["error"] = c.error;
    }
    j["evaluations"] = c.evaluations;
    cands.push_back(j);
  }
  doc["candidates"] = cands;
  return doc;
}

nlohmann::json to_json(const OracleReport& r) {
  nlohmann::json doc;
  doc["phi_ent"] = r.phi_ent;
  doc["phi_ent_error"] = r.phi_delta;
  doc["branch_phases"] = {{"++", r.branch_phases[0]},
                          {"+-", r.branch_phases[1]},
                          {"-+", r.branch_phases[2]},
                          {"--", r.branch_phases[3]}};
  doc["global_phase"] = r.global_phase;
  doc["single_qubit_phases"] = r.single_qubit_phases;
  doc["oracle_fidelity"] = r.oracle_fidelity;
  doc["model_fidelity"] = r.model_fidelity;
  doc["model_phi"] = r.model_phi;
  doc["fidelity_delta"] = r.fidelity_delta;
  nlohmann::json disp = nlohmann::json::array();
  for (const auto& d : r.displacements) {
    disp.push_back({{"s1", d.s1},
                    {"s2", d.s2},
                    {"mode", std::string(to_string(d.mode))},
                    {"c", d.c},
                    {"z_over_x0", d.z},
                    {"p_over_m_omega_z_x0", d.p},
                    {"z_expected", d.z_expected},
                    {"p_expected", d.p_expected},
                    {"error", d.error}});
  }
  doc["displacements"] = disp;
  doc["max_displacement_error_over_x0"] = r.max_displacement_error;
  doc["n_max"] = r.n_max;
  doc["thermal_levels"] = r.thermal_levels;
  doc["max_top_population"] = r.max_top_population;
  doc["max_norm_error"] = r.max_norm_error;
  doc["min_overlap"] = r.min_overlap;
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& row : r.convergence) {
    conv.push_back({{"n_max", row.n_max}, {"phi_ent", row.phi_ent}, {"oracle_fidelity", row.fidelity}});
  }
  doc["convergence"] = conv;
  doc["convergence_phi_delta"] = r.convergence_phi_delta;
  doc["convergence_fidelity_delta"] = r.convergence_fidelity_delta;
  return doc;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flag name -> configuration key. Order fixes the order overrides apply in.
const std::vector<std::pair<std::string, std::string>>& override_flags() {
  static const std::vector<std::pair<std::string, std::string>> flags{
      {"ion-mass", "ion_mass"}, {"ion-charge", "ion_charge"}, {"omega-xy", "omega_xy"}, {"omega-x", "omega_x"},
      {"omega-y", "omega_y"},   {"omega-z", "omega_z"},       {"d", "d"},               {"v", "v"},
      {"w", "w"},               {"k-eff", "k_eff"},           {"nbar", "nbar"},         {"nbar1", "nbar1"},
      {"nbar2", "nbar2"}};
  return flags;
}

struct Common {
  std::string config_path;
  std::map<std::string, double> values;
  std::vector<std::string> sets;
  std::string convention;
  std::string out;
  unsigned workers = 0;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--config", c.config_path, "Configuration JSON file")->required();
  for (const auto& [flag, key] : override_flags()) {
    const std::string k = key;
    app->add_option_function<double>(
        "--" + flag, [&c, k](const double& v) { c.values[k] = v; }, "Override " + key + " (SI units)");
  }
  app->add_option("--set", c.sets, "Override any numeric field: key=value (repeatable)");
  app->add_option("--detuning-convention", c.convention, "relative-to-omega_z or absolute");
  auto* out = app->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  app->add_option("--workers", c.workers, "Worker threads (0 = hardware concurrency)");
}

struct Loaded {
  PhysicalConfig config;
  std::vector<std::pair<std::string, double>> overrides;
};

Loaded load(const Common& c) {
  Loaded l;
  l.config = load_config_file(c.config_path);
  for (const auto& [flag, key] : override_flags()) {
    const auto it = c.values.find(key);
    if (it == c.values.end()) continue;
    l.config = with_override(l.config, key, it->second);
    l.overrides.emplace_back(key, it->second);
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    double value = 0;
    try {
      std::size_t used = 0;
      value = std::stod(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--set value for '" + key + "' is not a number");
    }
    l.config = with_override(l.config, key, value);
    l.overrides.emplace_back(key, value);
  }
  if (!c.convention.empty()) {
    nlohmann::json doc = config_to_json(l.config);
    doc["detuning_convention"] = c.convention;
    l.config = config_from_json(doc);
    l.overrides.emplace_back("detuning_convention_absolute",
                             l.config.detuning_convention == DetuningConvention::absolute ? 1.0 : 0.0);
  }
  return l;
}

RunManifest make_manifest(const std::string& subcommand, const Loaded& l) {
  RunManifest m;
  m.tool_version = DTG_VERSION;
  m.subcommand = subcommand;
  m.config_hash = config_hash(l.config);
  m.overrides = l.overrides;
  return m;
}

void write_manifest_file(const std::string& out, RunManifest m) {
  m.wall_clock = utc_timestamp();
  nlohmann::json doc = m.to_json(true);
  doc["manifest_hash"] = m.hash();
  write_json_file(out + ".manifest.json", doc);
}

std::vector<double> make_axis(const std::vector<double>& list, double lo, double hi, std::size_t count, bool log) {
  if (!list.empty()) return list;
  if (count == 0) throw UsageError("grid needs at least one point");
  if (log && !(lo > 0 && hi > 0)) throw UsageError("logarithmic grid needs positive bounds");
  std::vector<double> axis(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    axis[i] = log ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))) : lo + u * (hi - lo);
  }
  return axis;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PulseArgs {
  std::string path;
  std::vector<double> chi;
  std::optional<double> mu;
  std::optional<double> mu_rel;
};

void add_pulse_options(CLI::App* app, PulseArgs& p) {
  app->add_option("--pulse", p.path, "Pulse JSON (a pulse document or optimize output)");
  app->add_option("--chi", p.chi, "Segment amplitudes in rad/s (instead of --pulse)")->delimiter(',');
  app->add_option("--mu", p.mu, "Detuning in rad/s under the configured convention");
  app->add_option("--mu-rel", p.mu_rel, "Detuning offset (omega_d - omega_z) / omega_z");
}

PulseShape load_pulse(const PulseArgs& a, const PhysicalConfig& config, RunManifest& m) {
  PulseShape p;
  if (!a.path.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(a.path));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("cannot parse pulse file: " + std::string(e.what()));
    }
    if (doc.contains("pulse")) doc = doc["pulse"];
    try {
      p = pulse_from_json(doc, config);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("invalid pulse document: " + std::string(e.what()));
    }
  } else if (!a.chi.empty()) {
    p.chi = a.chi;
    if (!a.mu && !a.mu_rel) throw UsageError("--chi needs --mu or --mu-rel");
  } else {
    throw UsageError("a pulse is required (--pulse or --chi)");
  }
  if (a.mu) p.mu = *a.mu;
  if (a.mu_rel) p.mu = detuning_from_relative(config, *a.mu_rel);
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  m.parameters["pulse"] = pulse_to_json(p, config);
  return p;
}

Table trajectory_table(const PhysicalConfig& config, const PulseShape& pulse, const GateEvaluation& ev) {
  Table t;
  t.add_column("t_us", "time in microseconds (closest approach at 0)");
  t.add_column("u1_m", "center-of-mass classical displacement u_1 (m)");
  t.add_column("u1_dot_m_per_s", "center-of-mass velocity (m/s)");
  t.add_column("u2_m", "zigzag classical displacement u_2 (m)");
  t.add_column("u2_dot_m_per_s", "zigzag velocity (m/s)");
  t.add_column("phi_rad", "accumulated two-qubit phase (rad)");
  t.add_column("z1", "center-of-mass interaction-picture position / ground-state width");
  t.add_column("p1", "center-of-mass interaction-picture momentum / ground-state width");
  t.add_column("z2", "zigzag interaction-picture position / ground-state width");
  t.add_column("p2", "zigzag interaction-picture momentum / ground-state width");
  t.add_column("force_N", "drive force f(t) (N)");
  const auto& a = ev.trajectories[0];
  const auto& b = ev.trajectories[1];
  const auto phi = geometric_phase_series(ev.trajectories);
  const auto ia = interaction_picture(config, a);
  const auto ib = interaction_picture(config, b);
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    t.add_row({a.t[i] * 1e6, a.u[i], a.u_dot[i], b.u[i], b.u_dot[i], phi[i], ia.z[i], ia.p[i], ib.z[i], ib.p[i],
               force(config, pulse, a.t[i])});
  }
  return t;
}

void emit_json(const std::string& path, const nlohmann::json& doc, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json_file(path, doc);
  }
}

int cmd_modes(const Common& c, std::size_t samples, const std::string& sep, std::ostream& out) {
  const Loaded l = load(c);
  const SeparationMode mode = separation_mode_from_string(sep);
  RunManifest m = make_manifest("modes", l);
  m.parameters = {{"samples", samples}, {"separation", std::string(to_string(mode))}};
  m.outputs = {c.out};
  if (samples < 2) throw UsageError("--samples must be at least 2");
  const ModeFrequencyProfile profile(l.config, mode);
  const GateWindow win = gate_window(l.config);
  Table t;
  t.add_column("t_us", "time in microseconds (closest approach at 0)");
  t.add_column("omega1_over_2pi_MHz", "center-of-mass mode frequency / 2 pi (MHz)");
  t.add_column("omega2_over_2pi_MHz", "zigzag mode frequency / 2 pi (MHz)");
  t.add_column("omega2_over_omega_z", "zigzag frequency relative to the transverse trap frequency");
  t.add_column("separation_um", "ion separation R(t) (um)");
  double min_ratio = 1e300, t_min = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double tt = win.t0 + win.T * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double w1 = profile.omega(Mode::com, tt);
    const double w2 = profile.omega(Mode::zigzag, tt);
    const double ratio = w2 / l.config.omega_z;
    if (ratio < min_ratio) {
      min_ratio = ratio;
      t_min = tt;
    }
    t.add_row({tt * 1e6, w1 / (2 * constants::pi) / 1e6, w2 / (2 * constants::pi) / 1e6, ratio,
               profile.separation(tt) * 1e6});
  }
  write_table(c.out, t, m, {{"subcommand", "modes"}});
  write_manifest_file(c.out, m);
  out << "modes: " << samples << " samples, min Omega2/omega_z = " << format_double(min_ratio)
      << " at t = " << format_double(t_min * 1e6) << " us -> " << c.out << '\n';
  return 0;
}

Table sweep_table(const SweepResult& s) {
  Table t;
  if (s.kind == "oscillation") {
    t.add_column("f1_over_f3", "transport rate v/d relative to the in-plane trap frequency");
    t.add_column("f2_over_f3", "Coulomb frequency sqrt(K/(m d^3)) relative to the in-plane trap frequency");
    t.add_column("xi_x_max_over_d", "largest x oscillation about equilibrium in the gate window / d");
  } else {
    t.add_column("f2_over_f3", "Coulomb frequency sqrt(K/(m d^3)) relative to the in-plane trap frequency");
    t.add_column("q_max_over_d", "largest equilibrium shift from the trap centre in the gate window / d");
    t.add_column("t_at_max_s", "time of the largest shift (s)");
  }
  t.add_column("v_m_per_s", "transport speed (m/s)");
  t.add_column("d_m", "closest-approach distance (m)");
  t.add_column("w_m", "gate window length parameter (m)");
  t.add_column("converged", "1 if the cell completed, else 0");
  for (const auto& cell : s.cells) {
    if (s.kind == "oscillation") {
      t.add_row({cell.x, cell.y, cell.value, cell.v, cell.d, cell.w, cell.converged ? 1.0 : 0.0});
    } else {
      t.add_row({cell.x, cell.value, cell.t_at_max, cell.v, cell.d, cell.w, cell.converged ? 1.0 : 0.0});
    }
  }
  return t;
}

int finish_sweep(const Common& c, const SweepResult& s, RunManifest& m, std::ostream& out) {
  m.outputs = {c.out};
  nlohmann::json extra = {{"subcommand", m.subcommand}, {"sweep", s.metadata}};
  nlohmann::json failures = nlohmann::json::array();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (!s.cells[i].converged) {
      ++failed;
      failures.push_back({{"row", i}, {"error", s.cells[i].error}});
    }
  }
  extra["failures"] = failures;
  write_table(c.out, sweep_table(s), m, extra);
  write_manifest_file(c.out, m);
  out << m.subcommand << ": " << s.cells.size() << " cells, " << failed << " failed -> " << c.out << '\n';
  return failed == 0 ? 0 : 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Drive-through two-qubit gate simulator", "dtg"};
  app.set_version_flag("--version", DTG_VERSION);
  app.require_subcommand(1);

  Common c_modes, c_osc, c_eq, c_gate, c_opt, c_ver;

  auto* modes = app.add_subcommand("modes", "Dynamical normal-mode frequencies over the gate window (CSV)");
  add_common(modes, c_modes, true);
  std::size_t mode_samples = 1001;
  std::string mode_sep = "equilibrium";
  modes->add_option("--samples", mode_samples, "Number of time samples");
  modes->add_option("--separation", mode_sep, "equilibrium or trap-center");

  auto* osc = app.add_subcommand("transport-sweep", "In-plane oscillation amplitude over (f1/f3, f2/f3) (CSV)");
  add_common(osc, c_osc, true);
  std::vector<double> f1_list, f2_list_osc;
  double f1_min = 2e-4, f1_max = 5e-3, f2_min_osc = 0.01, f2_max_osc = 0.1;
  std::size_t f1_count = 6, f2_count_osc = 6;
  bool osc_linear = false;
  double osc_tol = 1e-10;
  osc->add_option("--f1", f1_list, "Explicit f1/f3 values")->delimiter(',');
  osc->add_option("--f1-min", f1_min);
  osc->add_option("--f1-max", f1_max);
  osc->add_option("--f1-count", f1_count);
  osc->add_option("--f2", f2_list_osc, "Explicit f2/f3 values")->delimiter(',');
  osc->add_option("--f2-min", f2_min_osc);
  osc->add_option("--f2-max", f2_max_osc);
  osc->add_option("--f2-count", f2_count_osc);
  osc->add_flag("--linear", osc_linear, "Linear instead of logarithmic grid spacing");
  osc->add_option("--tol", osc_tol, "Integrator relative tolerance");

  auto* eq = app.add_subcommand("equilibrium-sweep", "Equilibrium shift q_max/d over f2/f3 (CSV)");
  add_common(eq, c_eq, true);
  std::vector<double> f2_list_eq;
  double f2_min_eq = 0.005, f2_max_eq = 0.1;
  std::size_t f2_count_eq = 12, eq_samples = 401;
  bool eq_linear = false;
  eq->add_option("--f2", f2_list_eq, "Explicit f2/f3 values")->delimiter(',');
  eq->add_option("--f2-min", f2_min_eq);
  eq->add_option("--f2-max", f2_max_eq);
  eq->add_option("--f2-count", f2_count_eq);
  eq->add_option("--window-samples", eq_samples, "Samples across the gate window");
  eq->add_flag("--linear", eq_linear, "Linear instead of logarithmic grid spacing");

  auto* gate = app.add_subcommand("gate-eval", "Evaluate a pulse: residuals, fidelity, error budget (JSON + CSV)");
  add_common(gate, c_gate, false);
  PulseArgs gate_pulse;
  add_pulse_options(gate, gate_pulse);
  std::string gate_traj, gate_sep = "equilibrium";
  double gate_tol = 1e-12, gate_spc = 64;
  bool gate_no_budget = false;
  gate->add_option("--trajectory", gate_traj, "Trajectory CSV path");
  gate->add_option("--separation", gate_sep, "equilibrium or trap-center");
  gate->add_option("--tol", gate_tol, "Integrator relative tolerance");
  gate->add_option("--samples-per-cycle", gate_spc, "Trajectory samples per carrier period");
  gate->add_flag("--no-budget", gate_no_budget, "Skip the in-plane motion integration for the error budget");

  auto* opt = app.add_subcommand("optimize", "Find a closing pulse with phase -pi/4 (JSON)");
  add_common(opt, c_opt, false);
  OptimizationOptions oo;
  std::string opt_traj;
  opt->add_option("--seed", oo.seed, "Seed for the multistart sequence");
  opt->add_option("--starts", oo.starts, "Number of starts");
  opt->add_option("--segments", oo.segments, "Number of equal-duration segments");
  opt->add_option("--max-evaluations", oo.max_evaluations, "Shape-search evaluations per start");
  opt->add_option("--polish-evaluations", oo.polish_evaluations, "Polish evaluations per start");
  opt->add_option("--infidelity-tol", oo.infidelity_tol, "Target on 1 - F");
  opt->add_option("--chi-bound", oo.chi_bound, "Bound on |chi_k| (rad/s)");
  opt->add_option("--mu-min", oo.mu_min, "Lower detuning bound, units of omega_z");
  opt->add_option("--mu-max", oo.mu_max, "Upper detuning bound, units of omega_z");
  opt->add_option("--tol", oo.tol, "Integrator relative tolerance inside the search");
  opt->add_option("--report-tol", oo.report_tol, "Integrator relative tolerance of the reported result");
  opt->add_option("--trajectory", opt_traj, "Trajectory CSV of the optimum");

  auto* ver = app.add_subcommand("verify", "Cross-check a pulse with the number-state propagation (JSON)");
  add_common(ver, c_ver, false);
  PulseArgs ver_pulse;
  add_pulse_options(ver, ver_pulse);
  OracleOptions vo;
  bool ver_no_conv = false, ver_fixed = false;
  ver->add_option("--n-max", vo.n_max, "Number-basis size per mode (minimum when auto-sizing)");
  ver->add_option("--tol", vo.tol, "Integrator relative tolerance");
  ver->add_option("--leakage-threshold", vo.leakage_threshold, "Top-two-level population limit");
  ver->add_flag("--fixed-n-max", ver_fixed, "Use --n-max as given; fail on leakage");
  ver->add_flag("--no-convergence-check", ver_no_conv, "Skip the n_max + 10 rerun");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 1;
  }

  try {
    if (*modes) return cmd_modes(c_modes, mode_samples, mode_sep, out);

    if (*osc) {
      const Loaded l = load(c_osc);
      RunManifest m = make_manifest("transport-sweep", l);
      SweepOptions so;
      so.tol = osc_tol;
      so.workers = c_osc.workers;
      const auto f1 = make_axis(f1_list, f1_min, f1_max, f1_count, !osc_linear);
      const auto f2 = make_axis(f2_list_osc, f2_min_osc, f2_max_osc, f2_count_osc, !osc_linear);
      m.parameters = {{"f1_over_f3", f1}, {"f2_over_f3", f2}, {"tol", osc_tol}};
      return finish_sweep(c_osc, sweep_oscillation(l.config, f1, f2, so), m, out);
    }

    if (*eq) {
      const Loaded l = load(c_eq);
      RunManifest m = make_manifest("equilibrium-sweep", l);
      SweepOptions so;
      so.window_samples = eq_samples;
      so.workers = c_eq.workers;
      const auto f2 = make_axis(f2_list_eq, f2_min_eq, f2_max_eq, f2_count_eq, !eq_linear);
      m.parameters = {{"f2_over_f3", f2}, {"window_samples", eq_samples}};
      return finish_sweep(c_eq, sweep_equilibrium(l.config, f2, so), m, out);
    }

    if (*gate) {
      const Loaded l = load(c_gate);
      RunManifest m = make_manifest("gate-eval", l);
      const PulseShape pulse = load_pulse(gate_pulse, l.config, m);
      const SeparationMode sep = separation_mode_from_string(gate_sep);
      m.parameters["separation"] = std::string(to_string(sep));
      m.parameters["tol"] = gate_tol;
      m.parameters["samples_per_cycle"] = gate_spc;
      m.parameters["budget"] = !gate_no_budget;
      if (!c_gate.out.empty()) m.outputs.push_back(c_gate.out);
      if (!gate_traj.empty()) m.outputs.push_back(gate_traj);
      const ModeFrequencyProfile profile(l.config, sep);
      GateIntegrationOptions go;
      go.tol = gate_tol;
      go.samples_per_cycle = gate_spc;
      go.dense = !gate_traj.empty();
      GateEvaluation ev = evaluate_gate(profile, pulse, go);
      if (!gate_no_budget) {
        const auto span = default_motion_span(l.config);
        const OscillationRecord rec =
            integrate_classical_motion(l.config, span.first, gate_window(l.config).end(), gate_tol);
        ev.result.budget = error_budget(l.config, ev.result.residuals, rec);
      }
      nlohmann::json doc = to_json(ev.result);
      doc["pulse"] = pulse_to_json(pulse, l.config);
      doc["manifest_hash"] = m.hash();
      if (!gate_traj.empty()) {
        write_table(gate_traj, trajectory_table(l.config, pulse, ev), m, {{"subcommand", "gate-eval"}});
      }
      emit_json(c_gate.out, doc, out);
      if (!c_gate.out.empty()) write_manifest_file(c_gate.out, m);
      (c_gate.out.empty() ? err : out) << "gate-eval: F = " << format_double(ev.result.fidelity.value)
                                       << ", phi = " << format_double(ev.result.phi) << ", closure = "
                                       << format_double(ev.result.closure_residual) << '\n';
      return 0;
    }

    if (*opt) {
      const Loaded l = load(c_opt);
      RunManifest m = make_manifest("optimize", l);
      oo.workers = c_opt.workers;
      m.parameters = {{"seed", oo.seed},
                      {"starts", oo.starts},
                      {"segments", oo.segments},
                      {"max_evaluations", oo.max_evaluations},
                      {"polish_evaluations", oo.polish_evaluations},
                      {"infidelity_tol", oo.infidelity_tol},
                      {"chi_bound", oo.chi_bound},
                      {"mu_min", oo.mu_min},
                      {"mu_max", oo.mu_max},
                      {"tol", oo.tol},
                      {"report_tol", oo.report_tol}};
      if (!c_opt.out.empty()) m.outputs.push_back(c_opt.out);
      if (!opt_traj.empty()) m.outputs.push_back(opt_traj);
      const OptimizedPulse best = optimize(l.config, oo);
      nlohmann::json doc = to_json(best, l.config);
      doc["manifest_hash"] = m.hash();
      if (!opt_traj.empty()) {
        const ModeFrequencyProfile profile(l.config, SeparationMode::equilibrium);
        GateIntegrationOptions go;
        go.tol = oo.report_tol;
        const GateEvaluation ev = evaluate_gate(profile, best.pulse, go);
        write_table(opt_traj, trajectory_table(l.config, best.pulse, ev), m, {{"subcommand", "optimize"}});
      }
      emit_json(c_opt.out, doc, out);
      if (!c_opt.out.empty()) write_manifest_file(c_opt.out, m);
      (c_opt.out.empty() ? err : out) << "optimize: F = " << format_double(best.result.fidelity.value)
                                      << ", mu/omega_z = " << format_double(relative_detuning(l.config, best.pulse))
                                      << ", start " << best.start_index << (best.converged ? "" : " (not converged)")
                                      << '\n';
      return best.converged ? 0 : 2;
    }

    if (*ver) {
      const Loaded l = load(c_ver);
      RunManifest m = make_manifest("verify", l);
      const PulseShape pulse = load_pulse(ver_pulse, l.config, m);
      vo.convergence_check = !ver_no_conv;
      vo.auto_n_max = !ver_fixed;
      vo.workers = c_ver.workers;
      m.parameters["n_max"] = vo.n_max;
      m.parameters["tol"] = vo.tol;
      m.parameters["leakage_threshold"] = vo.leakage_threshold;
      m.parameters["auto_n_max"] = vo.auto_n_max;
      m.parameters["convergence_check"] = vo.convergence_check;
      if (!c_ver.out.empty()) m.outputs.push_back(c_ver.out);
      const OracleReport rep = verify(l.config, pulse, vo);
      nlohmann::json doc = to_json(rep);
      doc["manifest_hash"] = m.hash();
      emit_json(c_ver.out, doc, out);
      if (!c_ver.out.empty()) write_manifest_file(c_ver.out, m);
      (c_ver.out.empty() ? err : out) << "verify: Phi_ent = " << format_double(rep.phi_ent)
                                      << ", oracle F = " << format_double(rep.oracle_fidelity)
                                      << ", model F = " << format_double(rep.model_fidelity) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return 1;
  } catch (const PhysicsError& e) {
    err << "physics error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace dtg
