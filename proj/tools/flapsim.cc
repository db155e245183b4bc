// Copyright 2026 The flapsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// flapsim command-line driver. Exit codes: 0 success, 2 configuration or
// usage error, 3 divergence, 4 missing prerequisite artifact, 5 other error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flapsim/config.h"
#include "flapsim/control.h"
#include "flapsim/errors.h"
#include "flapsim/floquet.h"
#include "flapsim/orbit.h"
#include "flapsim/simulate.h"
#include "flapsim/util.h"

#ifndef FLAPSIM_VERSION
#define FLAPSIM_VERSION "0.0.0"
#endif

namespace flapsim {
namespace {

using Clock = std::chrono::steady_clock;

struct Common {
  std::vector<std::string> configs;
  bool force = false;
};

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json load_config(const Common& c) {
  Json j = load_json_files(c.configs);
  check_config_keys(j);
  return j;
}

const Json& section(const Json& config, const char* key) {
  static const Json empty = Json::object();
  return config.contains(key) ? config.at(key) : empty;
}

RunManifest manifest(const std::string& command, const Common& c, const Json& config,
                     const std::vector<std::string>& artifacts, Clock::time_point start) {
  RunManifest m;
  m.command = command;
  m.inputs = c.configs;
  std::string bytes = config.dump();
  for (const std::string& a : artifacts) {
    m.inputs.push_back(a);
    bytes += file_bytes(a);
  }
  m.config_hash = hex64(fnv1a(bytes));
  m.version = FLAPSIM_VERSION;
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  m.threads = thread_count();
  return m;
}

void write_output(const std::string& path, const std::string& text, const RunManifest& m) {
  write_text(path, text);
  write_manifest(path, m);
}

void guard(const std::vector<std::string>& paths, bool force) {
  for (const std::string& p : paths) {
    if (p.empty()) continue;
    check_writable(p, force);
    check_writable(p + ".manifest.json", force);
  }
}

bool parse_switch(const std::string& s, const char* name) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw ConfigError(std::string("--") + name + " must be on or off");
}

Vec3 parse_vec3(const std::string& s, const char* name) {
  std::vector<double> v;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) v.clear(), v.resize(4);
    } catch (const std::exception&) {
      v.resize(4);
    }
  }
  if (v.size() != 3) throw ConfigError(std::string("--") + name + " must be three numbers a,b,c");
  return Vec3(v[0], v[1], v[2]);
}

ReferenceOrbit reference_of(const StoredOrbit& o) {
  return ReferenceOrbit(o.kinematics, o.morph, o.x_dot0, o.sim.steps_per_period);
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream s;
  t.write_csv(s);
  return s.str();
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
  std::string out;
  std::string summary;
  int periods = 0;
  int steps = 0;
  int stride = 0;
  bool torques = false;
};

int run_simulate(const SimulateArgs& a) {
  const auto start = Clock::now();
  const Json config = load_config(a.common);
  const MorphologyConfig morph = morphology_from_json(section(config, "morphology"));
  SimConfig sim = sim_from_json(section(config, "sim"));
  if (a.periods > 0) sim.periods = a.periods;
  if (a.steps > 0) sim.steps_per_period = a.steps;
  if (a.stride > 0) sim.record_stride = a.stride;
  if (a.torques) sim.record_torques = true;
  sim.validate();
  const Json& params = section(config, "parameters");
  const OrbitVector v =
      parameters_from_json(params, pack_decision(KinematicsParams{}, Vec3::Zero()));
  std::string mode = "undulating";
  if (section(config, "optimizer").contains("mode")) {
    mode = section(config, "optimizer").at("mode").get<std::string>();
  }
  KinematicsParams base;
  if (params.contains("psi_N")) base.wing.psi_N = params.at("psi_N").get<int>();
  base.body.abdomen_fixed = abdomen_mode_from_string(mode) == AbdomenMode::kFixed;
  const KinematicsParams k = unpack_kinematics(v, base);
  try {
    k.wing.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("parameters: ") + e.what());
  }
  const std::string summary_path = a.summary.empty() ? a.out + ".summary.json" : a.summary;
  guard({a.out, summary_path}, a.common.force);

  const Trajectory tr = integrate(Vec3::Zero(), unpack_velocity(v), k, morph, sim);
  double e_min = INFINITY, e_max = -INFINITY, e_abs = 0.0;
  for (const TrajectorySample& s : tr.samples) {
    e_min = std::min(e_min, s.E);
    e_max = std::max(e_max, s.E);
    e_abs += std::abs(s.E);
  }
  Json summary;
  summary["format"] = "flapsim.simulate";
  summary["periods"] = tr.completed_periods;
  summary["steps_per_period"] = sim.steps_per_period;
  summary["rows"] = tr.samples.size();
  summary["final_time"] = tr.final_time;
  summary["final_x"] = {tr.final_x.x(), tr.final_x.y(), tr.final_x.z()};
  summary["final_x_dot"] = {tr.final_x_dot.x(), tr.final_x_dot.y(), tr.final_x_dot.z()};
  summary["position_drift"] = tr.final_x.norm();
  summary["velocity_drift"] = (tr.final_x_dot - unpack_velocity(v)).norm();
  summary["E_min"] = e_min;
  summary["E_max"] = e_max;
  summary["mean_abs_E"] = e_abs / static_cast<double>(tr.samples.size());
  summary["J"] = energy_objective(tr, morph.total_mass(), morph.g, 1.0, 1.0) /
                 static_cast<double>(tr.completed_periods);
  const RunManifest m = manifest("simulate", a.common, config, {}, start);
  write_output(a.out, trajectory_csv(tr), m);
  write_output(summary_path, summary.dump(2) + "\n", m);
  std::printf("simulate: %zu rows, %d periods -> %s\n", tr.samples.size(), tr.completed_periods,
              a.out.c_str());
  return 0;
}

// ---- optimize ----

struct OptimizeArgs {
  Common common;
  std::string out;
  std::string trajectory;
  std::string mode;
  long long seed = -1;
  int starts = 0;
};

int run_optimize(const OptimizeArgs& a) {
  const auto start = Clock::now();
  Json config = load_config(a.common);
  if (!a.mode.empty()) config["optimizer"]["mode"] = a.mode;
  if (a.seed >= 0) config["optimizer"]["seed"] = static_cast<std::uint64_t>(a.seed);
  if (a.starts > 0) config["optimizer"]["starts"] = a.starts;
  const OrbitProblem p = problem_from_config(config);
  guard({a.out, a.trajectory}, a.common.force);
  const OrbitSolution s = optimize(p);
  RunManifest m = manifest("optimize", a.common, config, {}, start);
  m.seeds = {p.optimizer.seed};
  write_output(a.out, to_json(s).dump(2) + "\n", m);
  if (!a.trajectory.empty()) write_output(a.trajectory, trajectory_csv(s.trajectory), m);
  std::printf("optimize (%s): J = %.6g, residual %.3g, %s, %d evaluations -> %s\n",
              to_string(s.mode), s.J, s.residual_norm,
              s.converged ? "converged" : "NOT converged", s.evaluations, a.out.c_str());
  if (!s.converged) std::fprintf(stderr, "%s\n", s.diagnostics.c_str());
  return 0;
}

// ---- floquet ----

struct FloquetArgs {
  Common common;
  std::string orbit;
  std::string out;
  int steps = 0;
  bool closed_loop = false;
  std::string abdomen = "on";
  std::string fixture;
};

int run_floquet(const FloquetArgs& a) {
  const auto start = Clock::now();
  const Json config = load_config(a.common);
  guard({a.out}, a.common.force);
  Json report;
  if (a.fixture == "zero") {
    const PeriodicLinearSystem sys(6, 1.0, [](double) { return MatX::Zero(6, 6); });
    const int steps = a.steps > 0 ? a.steps : 100;
    const MonodromyResult r = monodromy(sys, steps);
    report = to_json(r, mode_report(r, sys, true, steps));
    report["system"] = "zero_fixture";
    write_output(a.out, report.dump(2) + "\n", manifest("floquet", a.common, config, {}, start));
    return 0;
  }
  if (!a.fixture.empty()) throw ConfigError("--fixture must be \"zero\"");
  if (a.orbit.empty()) throw MissingPrerequisite("floquet needs --orbit <solution.json>");
  const StoredOrbit o = load_orbit(a.orbit);
  const ReferenceOrbit ref = reference_of(o);
  int steps = a.steps > 0 ? a.steps : o.sim.steps_per_period;
  if (steps % 2) ++steps;
  if (a.closed_loop) {
    ControlSettings c = control_from_json(section(config, "control"));
    c.controller.abdomen_active = parse_switch(a.abdomen, "abdomen");
    const SensitivityTable table = identify_sensitivities(ref, c.sweep);
    const PeriodicLinearSystem sys = closedloop_system(ref, table, c.gains, c.controller);
    const MonodromyResult r = monodromy(sys, steps);
    report = to_json(r, mode_report(r, sys, true, steps));
    report["system"] = "closed_loop";
    report["abdomen_active"] = c.controller.abdomen_active;
    report["gains"] = to_json(c.gains);
  } else {
    const PeriodicLinearSystem sys = openloop_system(ref);
    const MonodromyResult r = monodromy(sys, steps);
    report = to_json(r, mode_report(r, sys, true, steps));
    report["system"] = "open_loop";
  }
  report["steps"] = steps;
  write_output(a.out, report.dump(2) + "\n", manifest("floquet", a.common, config, {a.orbit}, start));
  std::printf("floquet (%s): ", report["system"].get<std::string>().c_str());
  for (const Json& m : report["modes"]) std::printf("%.4f ", m["modulus"].get<double>());
  std::printf("-> %s\n", a.out.c_str());
  return 0;
}

// ---- control ----

struct ControlArgs {
  Common common;
  std::string orbit;
  std::string gains;
  std::string out;
  std::string trajectory;
  std::string sensitivity;
  std::string dx = "0.05,0,0.05";
  std::string dxdot = "0,0,0";
  std::string abdomen;
  int periods = 0;
};

ControlSettings control_settings(const Json& config, const std::string& gains_path,
                                 const std::string& abdomen) {
  ControlSettings c = control_from_json(section(config, "control"));
  if (!gains_path.empty()) {
    const Json g = load_json_file(gains_path);
    c.gains = gains_from_json(g.contains("gains") ? g.at("gains") : g);
  }
  if (!abdomen.empty()) c.controller.abdomen_active = parse_switch(abdomen, "abdomen");
  return c;
}

int run_control(const ControlArgs& a) {
  const auto start = Clock::now();
  const Json config = load_config(a.common);
  ControlSettings c = control_settings(config, a.gains, a.abdomen);
  if (a.periods > 0) c.run.max_periods = a.periods;
  const Vec3 dx = parse_vec3(a.dx, "dx"), dv = parse_vec3(a.dxdot, "dxdot");
  if (a.orbit.empty()) throw MissingPrerequisite("control needs --orbit <solution.json>");
  const StoredOrbit o = load_orbit(a.orbit);
  guard({a.out, a.trajectory, a.sensitivity}, a.common.force);
  const ReferenceOrbit ref = reference_of(o);
  const SensitivityTable table = identify_sensitivities(ref, c.sweep);
  if (a.trajectory.empty()) c.run.record_stride = 0;
  const ClosedLoopResult r = closed_loop_run(ref, table, c.gains, c.controller, dx, dv, c.run);
  Json j;
  j["format"] = "flapsim.control";
  j["gains"] = to_json(c.gains);
  j["characteristic_roots"] = Json::array();
  for (const auto& root : characteristic_roots(c.gains)) {
    j["characteristic_roots"].push_back({root.real(), root.imag()});
  }
  j["abdomen_active"] = c.controller.abdomen_active;
  j["cadence"] = to_string(c.controller.cadence);
  j["dx0"] = {dx.x(), dx.y(), dx.z()};
  j["dxdot0"] = {dv.x(), dv.y(), dv.z()};
  j["converged"] = r.converged;
  j["cycles_to_converge"] = r.cycles_to_converge;
  j["diverged"] = r.diverged;
  j["failure_time"] = r.failure_time;
  j["position_error"] = r.position_error;
  j["velocity_error"] = r.velocity_error;
  j["tolerance"] = c.run.tolerance;
  const RunManifest m = manifest("control", a.common, config, {a.orbit}, start);
  write_output(a.out, j.dump(2) + "\n", m);
  if (!a.trajectory.empty()) write_output(a.trajectory, trajectory_csv(r.trajectory), m);
  if (!a.sensitivity.empty()) write_output(a.sensitivity, to_json(table).dump(2) + "\n", m);
  std::printf("control: %s after %zu periods (final error %.3g m) -> %s\n",
              r.converged ? "converged" : (r.diverged ? "diverged" : "not converged"),
              r.position_error.size(),
              r.position_error.empty() ? 0.0 : r.position_error.back(), a.out.c_str());
  return r.diverged ? 3 : 0;
}

// ---- roa ----

struct RoaArgs {
  Common common;
  std::string orbit;
  std::string gains;
  std::string out;
  std::string abdomen;
  int samples = -1;
  double radius = 0.0;
  long long seed = -1;
};

int run_roa(const RoaArgs& a) {
  const auto start = Clock::now();
  Json config = load_config(a.common);
  if (a.samples >= 0) config["roa"]["samples"] = a.samples;
  if (a.radius > 0.0) config["roa"]["radius"] = a.radius;
  if (a.seed >= 0) config["roa"]["seed"] = static_cast<std::uint64_t>(a.seed);
  const RoaSettings rs = roa_from_json(section(config, "roa"));
  const ControlSettings c = control_settings(config, a.gains, a.abdomen);
  if (a.orbit.empty()) throw MissingPrerequisite("roa needs --orbit <solution.json>");
  const StoredOrbit o = load_orbit(a.orbit);
  guard({a.out}, a.common.force);
  const ReferenceOrbit ref = reference_of(o);
  const SensitivityTable table = identify_sensitivities(ref, c.sweep);
  const std::vector<RoaSample> res =
      roa_monte_carlo(ref, table, c.gains, c.controller, rs.samples, rs.radius, rs.seed, c.run);
  std::string csv = "e_x,e_z,converged,cycles\n";
  int converged = 0;
  for (const RoaSample& s : res) {
    csv += format_double(s.e_x) + "," + format_double(s.e_z) + "," + (s.converged ? "1" : "0") +
           "," + std::to_string(s.cycles) + "\n";
    converged += s.converged;
  }
  RunManifest m = manifest("roa", a.common, config, {a.orbit}, start);
  m.seeds = {rs.seed};
  write_output(a.out, csv, m);
  std::printf("roa (abdomen %s): %d/%d converged -> %s\n",
              c.controller.abdomen_active ? "on" : "off", converged, rs.samples, a.out.c_str());
  return 0;
}

// ---- report ----

struct ReportArgs {
  Common common;
  std::string undulating;
  std::string fixed;
  std::string out;
  std::string series;
};

OrbitSolution resimulate(const StoredOrbit& o) {
  OrbitProblem p;
  p.mode = o.mode;
  p.morph = o.morph;
  p.sim = o.sim;
  p.psi_N = o.kinematics.wing.psi_N;
  p.w1 = o.w1;
  p.w2 = o.w2;
  p.bounds.fill(Bound{-1e9, 1e9});
  return make_solution(p, o.decision);
}

int run_report(const ReportArgs& a) {
  const auto start = Clock::now();
  const Json config = load_config(a.common);
  if (a.undulating.empty() || a.fixed.empty()) {
    throw MissingPrerequisite("report needs --undulating and --fixed orbit solutions");
  }
  const StoredOrbit u = load_orbit(a.undulating), f = load_orbit(a.fixed);
  guard({a.out, a.series}, a.common.force);
  const AbdomenComparison c = compare_abdomen_effect(resimulate(u), resimulate(f));
  const RunManifest m = manifest("report", a.common, config, {a.undulating, a.fixed}, start);
  write_output(a.out, to_json(c).dump(2) + "\n", m);
  if (!a.series.empty()) {
    std::string csv = "case,t,E,E_dot,P,tau_A2\n";
    const auto rows = [&](const char* name, const EnergySeries& s) {
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        csv += std::string(name) + "," + format_double(s.t[i]) + "," + format_double(s.E[i]) +
               "," + format_double(s.E_dot[i]) + "," + format_double(s.P[i]) + "," +
               format_double(s.tau_A[i]) + "\n";
      }
    };
    rows("undulating", c.undulating);
    rows("fixed", c.fixed);
    write_output(a.series, csv, m);
  }
  std::printf("%-28s %12s %12s\n", "", "undulating", "fixed");
  std::printf("%-28s %12.6g %12.6g\n", "J", c.undulating_summary.J, c.fixed_summary.J);
  std::printf("%-28s %12.6g %12.6g\n", "mean |E|", c.undulating_summary.mean_abs_energy,
              c.fixed_summary.mean_abs_energy);
  std::printf("%-28s %12.6g %12.6g\n", "mean power", c.undulating_summary.mean_power,
              c.fixed_summary.mean_power);
  std::printf("J increase when fixed: %.1f%%\n", 100.0 * c.J_increase);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.configs, "JSON config files, merged in order");
  sub->add_flag("--force", c.force, "overwrite existing outputs");
}

}  // namespace
}  // namespace flapsim

int main(int argc, char** argv) {
  using namespace flapsim;
  CLI::App app{"flapsim: flapping-wing hover orbits, Floquet stability and feedback control"};
  app.set_version_flag("--version", FLAPSIM_VERSION);
  app.require_subcommand(1);

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand("simulate", "integrate the open-loop dynamics");
  add_common(sim, sa.common);
  sim->add_option("-o,--out", sa.out, "trajectory CSV")->required();
  sim->add_option("--summary", sa.summary, "summary JSON (default <out>.summary.json)");
  sim->add_option("--periods", sa.periods, "number of flapping periods");
  sim->add_option("--steps", sa.steps, "RK4 steps per period");
  sim->add_option("--stride", sa.stride, "record every n-th step");
  sim->add_flag("--torques", sa.torques, "reconstruct joint torques");

  OptimizeArgs oa;
  CLI::App* opt = app.add_subcommand("optimize", "find a minimum-energy periodic hover orbit");
  add_common(opt, oa.common);
  opt->add_option("-o,--out", oa.out, "solution JSON")->required();
  opt->add_option("--trajectory", oa.trajectory, "one-period trajectory CSV");
  opt->add_option("--mode", oa.mode, "undulating or fixed");
  opt->add_option("--seed", oa.seed, "multistart seed");
  opt->add_option("--starts", oa.starts, "number of local searches");

  FloquetArgs fa;
  CLI::App* flq = app.add_subcommand("floquet", "monodromy matrix and characteristic multipliers");
  add_common(flq, fa.common);
  flq->add_option("--orbit", fa.orbit, "orbit solution JSON");
  flq->add_option("-o,--out", fa.out, "Floquet report JSON")->required();
  flq->add_option("--steps", fa.steps, "RK4 steps per period (default: orbit resolution)");
  flq->add_flag("--closed-loop", fa.closed_loop, "linearize the controlled system");
  flq->add_option("--abdomen", fa.abdomen, "abdomen control on|off (closed loop)");
  flq->add_option("--fixture", fa.fixture, "analyze a built-in test system (zero)");

  ControlArgs ca;
  CLI::App* ctl = app.add_subcommand("control", "closed-loop hover from an initial error");
  add_common(ctl, ca.common);
  ctl->add_option("--orbit", ca.orbit, "orbit solution JSON");
  ctl->add_option("--gains", ca.gains, "gains JSON {K_P, K_D, K_I}");
  ctl->add_option("-o,--out", ca.out, "run summary JSON")->required();
  ctl->add_option("--trajectory", ca.trajectory, "closed-loop trajectory CSV");
  ctl->add_option("--sensitivity", ca.sensitivity, "sensitivity table JSON");
  ctl->add_option("--dx", ca.dx, "initial position error a,b,c (m)");
  ctl->add_option("--dxdot", ca.dxdot, "initial velocity error a,b,c (m/s)");
  ctl->add_option("--abdomen", ca.abdomen, "abdomen control on|off");
  ctl->add_option("--periods", ca.periods, "maximum periods");

  RoaArgs ra;
  CLI::App* roa = app.add_subcommand("roa", "Monte Carlo region of attraction");
  add_common(roa, ra.common);
  roa->add_option("--orbit", ra.orbit, "orbit solution JSON");
  roa->add_option("--gains", ra.gains, "gains JSON {K_P, K_D, K_I}");
  roa->add_option("-o,--out", ra.out, "ROA CSV")->required();
  roa->add_option("--samples", ra.samples, "number of initial errors");
  roa->add_option("--radius", ra.radius, "sampling radius (m)");
  roa->add_option("--seed", ra.seed, "sampling seed");
  roa->add_option("--abdomen", ra.abdomen, "abdomen control on|off");

  ReportArgs pa;
  CLI::App* rep = app.add_subcommand("report", "compare undulating and fixed-abdomen orbits");
  add_common(rep, pa.common);
  rep->add_option("--undulating", pa.undulating, "undulating-abdomen solution JSON");
  rep->add_option("--fixed", pa.fixed, "fixed-abdomen solution JSON");
  rep->add_option("-o,--out", pa.out, "report JSON")->required();
  rep->add_option("--series", pa.series, "energy and power series CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*sim) return run_simulate(sa);
    if (*opt) return run_optimize(oa);
    if (*flq) return run_floquet(fa);
    if (*ctl) return run_control(ca);
    if (*roa) return run_roa(ra);
    if (*rep) return run_report(pa);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "flapsim: configuration error: %s\n", e.what());
    return 2;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "flapsim: divergence: %s (last valid t = %.6g s)\n", e.what(),
                 e.last_valid_time());
    return 3;
  } catch (const MissingPrerequisite& e) {
    std::fprintf(stderr, "flapsim: missing prerequisite: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "flapsim: error: %s\n", e.what());
    return 5;
  }
  return 5;
}
