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

#include "flapsim/config.h"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flapsim/errors.h"

namespace flapsim {
namespace {

std::string quote(const std::string& s) { return "\"" + s + "\""; }

// Object view that rejects unknown keys and type mismatches.
class Section {
 public:
  Section(const Json& j, std::string where, std::vector<std::string> keys)
      : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
    for (const auto& item : j_.items()) {
      if (std::find(keys.begin(), keys.end(), item.key()) != keys.end()) continue;
      std::string msg = "unknown key " + quote(item.key()) + " in " + where_;
      const std::string hint = closest_key(item.key(), keys);
      if (!hint.empty()) msg += "; did you mean " + quote(hint) + "?";
      throw ConfigError(msg);
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return where_ + "." + key; }

  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(path(key) + " must be finite");
  }
  void get(const std::string& key, int& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    out = v.get<int>();
  }
  void get(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(path(key) + " must be a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }
  void get(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + " must be true or false");
    out = v.get<bool>();
  }
  void get(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
    out = v.get<std::string>();
  }
  void get(const std::string& key, Vec3& out) const {
    if (has(key)) out = vec3(j_.at(key), path(key));
  }
  void get(const std::string& key, Mat3& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    const std::string p = path(key);
    if (v.is_array() && v.size() == 3 && v[0].is_number()) {
      out = vec3(v, p).asDiagonal();
      return;
    }
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(p + " must be 3 diagonal entries or a 3x3 array");
    }
    for (int r = 0; r < 3; ++r) out.row(r) = vec3(v[r], p).transpose();
  }
  std::vector<double> numbers(const std::string& key) const {
    const Json& v = j_.at(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (const Json& e : v) {
        if (!e.is_number()) break;
        out.push_back(e.get<double>());
      }
    }
    if (!v.is_array() || out.size() != v.size()) {
      throw ConfigError(path(key) + " must be an array of numbers");
    }
    return out;
  }

  static Vec3 vec3(const Json& v, const std::string& p) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(p + " must be an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError(p + " must be an array of 3 numbers");
      out(i) = v[i].get<double>();
    }
    return out;
  }

 private:
  const Json& j_;
  std::string where_;
};

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json mat_json(const Mat3& m) {
  if (m.isDiagonal(0.0)) return vec_json(m.diagonal());
  Json out = Json::array();
  for (int r = 0; r < 3; ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

Json complex_json(std::complex<double> c) { return Json::array({c.real(), c.imag()}); }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

const Json& section_or_empty(const Json& config, const char* key) {
  static const Json empty = Json::object();
  return config.contains(key) ? config.at(key) : empty;
}

// Rethrows library argument errors as configuration errors.
template <class F>
void validated(const std::string& where, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

int psi_n_from(const Json& params, int fallback) {
  if (!params.contains("psi_N")) return fallback;
  const Json& v = params.at("psi_N");
  if (!v.is_number_integer() || v.get<int>() < 1) {
    throw ConfigError("parameters.psi_N must be a positive integer");
  }
  return v.get<int>();
}

Json mean_json(const SignSplitMean& m) {
  return Json{{"mean", m.mean},
              {"positive", optional_json(m.positive)},
              {"negative", optional_json(m.negative)},
              {"positive_duration", m.positive_duration},
              {"negative_duration", m.negative_duration}};
}

}  // namespace

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string closest_key(const std::string& key, const std::vector<std::string>& candidates) {
  const int limit = std::max(2, static_cast<int>(key.size()) / 3);
  std::string best;
  int best_d = limit + 1;
  for (const std::string& c : candidates) {
    const int d = levenshtein(key, c);
    if (d < best_d) best_d = d, best = c;
  }
  return best;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + quote(path));
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed JSON in " + quote(path) + ": " + e.what());
  }
}

Json load_json_files(const std::vector<std::string>& paths) {
  Json merged = Json::object();
  for (const std::string& p : paths) {
    const Json j = load_json_file(p);
    if (!j.is_object()) throw ConfigError(quote(p) + " must hold a JSON object");
    merged.merge_patch(j);
  }
  return merged;
}

void check_config_keys(const Json& config) {
  Section(config, "config",
          {"description", "morphology", "parameters", "sim", "optimizer", "control", "roa"});
}

MorphologyConfig morphology_from_json(const Json& j) {
  MorphologyConfig m;
  const Section s(j, "morphology",
                  {"m_B", "m_A", "m_R", "m_L", "I_B", "I_A", "I_R", "I_L", "mu_R", "mu_L",
                   "mu_A", "rho_R", "rho_L", "rho_A", "g", "mirror_left", "aero"});
  s.get("m_B", m.m_B);
  s.get("m_A", m.m_A);
  s.get("m_R", m.m_R);
  s.get("m_L", m.m_L);
  s.get("I_B", m.I_B);
  s.get("I_A", m.I_A);
  s.get("I_R", m.I_R);
  s.get("I_L", m.I_L);
  s.get("mu_R", m.mu_R);
  s.get("mu_L", m.mu_L);
  s.get("mu_A", m.mu_A);
  s.get("rho_R", m.rho_R);
  s.get("rho_L", m.rho_L);
  s.get("rho_A", m.rho_A);
  s.get("g", m.g);
  bool mirror = false;
  s.get("mirror_left", mirror);
  if (mirror) m.mirror_left_from_right();
  if (s.has("aero")) {
    AeroConfig& a = m.aero;
    const Section as(s.at("aero"), "morphology.aero",
                     {"rho", "span", "wing_area", "chord_table", "chord_csv", "quadrature_points",
                      "v_wind", "rotational_term", "enabled"});
    as.get("rho", a.rho);
    double span = a.chord.span(), area = a.chord.area();
    as.get("span", span);
    as.get("wing_area", area);
    if (as.has("chord_table") + as.has("chord_csv") + as.has("wing_area") > 1) {
      throw ConfigError("morphology.aero: give only one of wing_area, chord_table, chord_csv");
    }
    if (!(span > 0.0) || !(area > 0.0)) {
      throw ConfigError("morphology.aero: span and wing_area must be positive");
    }
    validated("morphology.aero", [&] {
      if (as.has("chord_table")) {
        const Section t(as.at("chord_table"), "morphology.aero.chord_table",
                        {"r_over_l", "chord_m"});
        if (!t.has("r_over_l") || !t.has("chord_m")) {
          throw ConfigError("morphology.aero.chord_table needs r_over_l and chord_m");
        }
        a.chord = ChordDistribution::table(span, t.numbers("r_over_l"), t.numbers("chord_m"));
      } else if (as.has("chord_csv")) {
        std::string path;
        as.get("chord_csv", path);
        a.chord = ChordDistribution::from_csv(path, span);
      } else {
        a.chord = ChordDistribution::elliptic(span, area);
      }
    });
    as.get("quadrature_points", a.quadrature_points);
    as.get("v_wind", a.v_wind);
    std::string term =
        a.rotational_term == RotationalTerm::kAsPrinted ? "as_printed" : "wing_frame";
    as.get("rotational_term", term);
    if (term == "wing_frame") {
      a.rotational_term = RotationalTerm::kWingFrame;
    } else if (term == "as_printed") {
      a.rotational_term = RotationalTerm::kAsPrinted;
    } else {
      throw ConfigError(
          "morphology.aero.rotational_term must be \"wing_frame\" or \"as_printed\"");
    }
    as.get("enabled", a.enabled);
  }
  validated("morphology", [&] {
    m.aero.validate();
    m.validate();
  });
  return m;
}

Json to_json(const MorphologyConfig& m) {
  Json j;
  j["m_B"] = m.m_B;
  j["m_A"] = m.m_A;
  j["m_R"] = m.m_R;
  j["m_L"] = m.m_L;
  j["I_B"] = mat_json(m.I_B);
  j["I_A"] = mat_json(m.I_A);
  j["I_R"] = mat_json(m.I_R);
  j["I_L"] = mat_json(m.I_L);
  j["mu_R"] = vec_json(m.mu_R);
  j["mu_L"] = vec_json(m.mu_L);
  j["mu_A"] = vec_json(m.mu_A);
  j["rho_R"] = vec_json(m.rho_R);
  j["rho_L"] = vec_json(m.rho_L);
  j["rho_A"] = vec_json(m.rho_A);
  j["g"] = m.g;
  Json a;
  a["rho"] = m.aero.rho;
  a["span"] = m.aero.chord.span();
  if (m.aero.chord.is_elliptic()) {
    a["wing_area"] = m.aero.chord.area();
  } else {
    a["chord_table"] = {{"r_over_l", m.aero.chord.table_r_over_l()},
                        {"chord_m", m.aero.chord.table_chord()}};
  }
  a["quadrature_points"] = m.aero.quadrature_points;
  a["v_wind"] = vec_json(m.aero.v_wind);
  a["rotational_term"] =
      m.aero.rotational_term == RotationalTerm::kAsPrinted ? "as_printed" : "wing_frame";
  a["enabled"] = m.aero.enabled;
  j["aero"] = a;
  return j;
}

OrbitVector parameters_from_json(const Json& j, const OrbitVector& base) {
  const auto& keys = orbit_parameter_keys();
  std::vector<std::string> allowed(keys.begin(), keys.end());
  allowed.push_back("psi_N");
  const Section s(j, "parameters", allowed);
  OrbitVector v = base;
  for (int i = 0; i < kOrbitDimension; ++i) {
    if (!s.has(keys[i])) continue;
    if (s.at(keys[i]).is_null()) {
      v(i) = 0.0;
    } else {
      s.get(keys[i], v(i));
    }
  }
  return v;
}

Json parameters_to_json(const OrbitVector& v, AbdomenMode mode) {
  Json j;
  const auto& keys = orbit_parameter_keys();
  for (int i = 0; i < kOrbitDimension; ++i) {
    const bool unused = mode == AbdomenMode::kFixed && (i == kThetaAm || i == kThetaAa);
    j[keys[i]] = unused ? Json(nullptr) : Json(v(i));
  }
  return j;
}

SimConfig sim_from_json(const Json& j, SimConfig base) {
  const Section s(j, "sim", {"steps_per_period", "periods", "record_stride", "record_torques"});
  s.get("steps_per_period", base.steps_per_period);
  s.get("periods", base.periods);
  s.get("record_stride", base.record_stride);
  s.get("record_torques", base.record_torques);
  base.validate();
  return base;
}

Json to_json(const SimConfig& s) {
  return Json{{"steps_per_period", s.steps_per_period},
              {"periods", s.periods},
              {"record_stride", s.record_stride},
              {"record_torques", s.record_torques}};
}

OrbitProblem problem_from_config(const Json& config) {
  check_config_keys(config);
  OrbitProblem p;
  p.morph = morphology_from_json(section_or_empty(config, "morphology"));
  p.sim = sim_from_json(section_or_empty(config, "sim"), p.sim);
  const Json& params = section_or_empty(config, "parameters");
  p.initial = parameters_from_json(params, pack_decision(KinematicsParams{}, Vec3::Zero()));
  p.psi_N = psi_n_from(params, p.psi_N);

  const Json& oj = section_or_empty(config, "optimizer");
  const auto& keys = orbit_parameter_keys();
  const Section s(oj, "optimizer",
                  {"mode", "w1", "w2", "starts", "seed", "start_spread", "initial_simplex",
                   "evaluations_per_stage", "lambda_start", "lambda_end", "lambda_factor",
                   "particle_swarm", "swarm_size", "swarm_iterations", "polish",
                   "polish_iterations", "residual_tolerance", "bounds"});
  std::string mode = to_string(p.mode);
  s.get("mode", mode);
  try {
    p.mode = abdomen_mode_from_string(mode);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("optimizer.mode: ") + e.what());
  }
  s.get("w1", p.w1);
  s.get("w2", p.w2);
  OptimizerConfig& o = p.optimizer;
  s.get("starts", o.starts);
  s.get("seed", o.seed);
  s.get("start_spread", o.start_spread);
  s.get("initial_simplex", o.initial_simplex);
  s.get("evaluations_per_stage", o.evaluations_per_stage);
  s.get("lambda_start", o.lambda_start);
  s.get("lambda_end", o.lambda_end);
  s.get("lambda_factor", o.lambda_factor);
  s.get("particle_swarm", o.particle_swarm);
  s.get("swarm_size", o.swarm_size);
  s.get("swarm_iterations", o.swarm_iterations);
  s.get("polish", o.polish);
  s.get("polish_iterations", o.polish_iterations);
  s.get("residual_tolerance", o.residual_tolerance);
  if (s.has("bounds")) {
    const Section b(s.at("bounds"), "optimizer.bounds",
                    std::vector<std::string>(keys.begin(), keys.end()));
    for (int i = 0; i < kOrbitDimension; ++i) {
      if (!b.has(keys[i])) continue;
      const Json& v = b.at(keys[i]);
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(b.path(keys[i]) + " must be [lo, hi]");
      }
      p.bounds[i] = Bound{v[0].get<double>(), v[1].get<double>()};
    }
  }
  o.validate();
  p.validate();
  return p;
}

Gains gains_from_json(const Json& j) {
  Gains g;
  const Section s(j, "gains", {"K_P", "K_D", "K_I"});
  s.get("K_P", g.K_P);
  s.get("K_D", g.K_D);
  s.get("K_I", g.K_I);
  g.validate();
  return g;
}

Json to_json(const Gains& g) { return Json{{"K_P", g.K_P}, {"K_D", g.K_D}, {"K_I", g.K_I}}; }

ControlSettings control_from_json(const Json& j) {
  ControlSettings c;
  const Section s(j, "control",
                  {"gains", "cadence", "abdomen_active", "sign_split", "lateral_phase_weighted",
                   "integral_clamp", "max_delta", "flapping_margin", "sweep", "max_periods",
                   "tolerance", "divergence_radius", "record_stride"});
  if (s.has("gains")) c.gains = gains_from_json(s.at("gains"));
  ControllerConfig& k = c.controller;
  std::string cadence = to_string(k.cadence);
  s.get("cadence", cadence);
  k.cadence = control_cadence_from_string(cadence);
  s.get("abdomen_active", k.abdomen_active);
  s.get("sign_split", k.sign_split);
  s.get("lateral_phase_weighted", k.lateral_phase_weighted);
  s.get("integral_clamp", k.integral_clamp);
  s.get("max_delta", k.max_delta);
  s.get("flapping_margin", k.flapping_margin);
  k.validate();
  if (s.has("sweep")) {
    const Section w(s.at("sweep"), "control.sweep", {"half_width", "points"});
    w.get("half_width", c.sweep.half_width);
    w.get("points", c.sweep.points);
  }
  c.sweep.validate();
  s.get("max_periods", c.run.max_periods);
  s.get("tolerance", c.run.tolerance);
  s.get("divergence_radius", c.run.divergence_radius);
  s.get("record_stride", c.run.record_stride);
  if (c.run.max_periods < 1) throw ConfigError("control.max_periods must be >= 1");
  if (!(c.run.tolerance > 0.0)) throw ConfigError("control.tolerance must be positive");
  if (c.run.record_stride < 0) throw ConfigError("control.record_stride must be >= 0");
  return c;
}

RoaSettings roa_from_json(const Json& j) {
  RoaSettings r;
  const Section s(j, "roa", {"samples", "radius", "seed"});
  s.get("samples", r.samples);
  s.get("radius", r.radius);
  s.get("seed", r.seed);
  if (r.samples < 0) throw ConfigError("roa.samples must be >= 0");
  if (!(r.radius > 0.0)) throw ConfigError("roa.radius must be positive");
  return r;
}

Json to_json(const OrbitSolution& s) {
  Json j;
  j["format"] = "flapsim.orbit";
  j["mode"] = to_string(s.mode);
  Json params = parameters_to_json(s.decision, s.mode);
  params["psi_N"] = s.kinematics.wing.psi_N;
  j["parameters"] = params;
  j["J"] = s.J;
  j["w1"] = s.w1;
  j["w2"] = s.w2;
  j["position_residual"] = vec_json(s.position_residual);
  j["velocity_residual"] = vec_json(s.velocity_residual);
  j["residual_norm"] = s.residual_norm;
  j["converged"] = s.converged;
  j["evaluations"] = s.evaluations;
  j["best_start"] = s.best_start;
  j["diagnostics"] = s.diagnostics;
  j["period"] = s.kinematics.period();
  j["morphology"] = to_json(s.morph);
  j["sim"] = to_json(s.sim);
  return j;
}

StoredOrbit orbit_from_json(const Json& j) {
  const Section s(j, "orbit",
                  {"format", "mode", "parameters", "J", "w1", "w2", "position_residual",
                   "velocity_residual", "residual_norm", "converged", "evaluations",
                   "best_start", "diagnostics", "period", "morphology", "sim"});
  std::string format;
  s.get("format", format);
  if (format != "flapsim.orbit") throw ConfigError("not an orbit solution (format)");
  if (!s.has("parameters")) throw ConfigError("orbit solution lacks parameters");
  StoredOrbit o;
  std::string mode = "undulating";
  s.get("mode", mode);
  o.mode = abdomen_mode_from_string(mode);
  o.decision = parameters_from_json(s.at("parameters"), OrbitVector::Zero());
  KinematicsParams base;
  base.wing.psi_N = psi_n_from(s.at("parameters"), base.wing.psi_N);
  base.body.abdomen_fixed = o.mode == AbdomenMode::kFixed;
  o.kinematics = unpack_kinematics(o.decision, base);
  o.x_dot0 = unpack_velocity(o.decision);
  o.morph = morphology_from_json(s.has("morphology") ? s.at("morphology") : Json::object());
  o.sim = sim_from_json(s.has("sim") ? s.at("sim") : Json::object());
  s.get("J", o.J);
  s.get("w1", o.w1);
  s.get("w2", o.w2);
  s.get("residual_norm", o.residual_norm);
  s.get("converged", o.converged);
  validated("orbit parameters", [&] { o.kinematics.wing.validate(); });
  return o;
}

StoredOrbit load_orbit(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingPrerequisite("orbit solution " + quote(path) +
                              " not found; run `flapsim optimize` first");
  }
  return orbit_from_json(load_json_file(path));
}

Json to_json(const MonodromyResult& r, const std::vector<ModeInfo>& modes) {
  Json j;
  j["format"] = "flapsim.floquet";
  j["dimension"] = r.M.rows();
  j["period"] = r.period;
  j["t0"] = r.t0;
  Json m = Json::array();
  for (int i = 0; i < r.M.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < r.M.cols(); ++k) row.push_back(r.M(i, k));
    m.push_back(row);
  }
  j["M"] = m;
  const double det = r.M.determinant();
  j["det_M"] = det;
  j["trace_integral"] = r.trace_integral;
  j["liouville_error"] = std::abs(det - std::exp(r.trace_integral));
  j["eigenvector_condition"] = r.eigenvector_condition;
  j["defective"] = r.defective;
  int unit = 0;
  for (int i = 0; i < r.multipliers.size(); ++i) unit += std::abs(r.multipliers(i) - 1.0) < 1e-6;
  j["unit_multipliers"] = unit;
  Json list = Json::array();
  for (const ModeInfo& mi : modes) {
    Json e;
    e["multiplier"] = complex_json(mi.multiplier);
    e["modulus"] = mi.modulus;
    e["exponent"] = complex_json(mi.exponent);
    e["content"] = to_string(mi.content);
    e["plane"] = to_string(mi.plane);
    e["scaling_error"] = mi.scaling_error < 0.0 ? Json(nullptr) : Json(mi.scaling_error);
    Json v = Json::array();
    for (int i = 0; i < r.eigenvectors.rows(); ++i) {
      v.push_back(complex_json(r.eigenvectors(i, mi.index)));
    }
    e["eigenvector"] = v;
    list.push_back(e);
  }
  j["modes"] = list;
  return j;
}

Json to_json(const SensitivityTable& t) {
  Json j;
  j["format"] = "flapsim.sensitivity";
  j["half_width"] = t.spec.half_width;
  j["points"] = t.spec.points;
  Json nominal = Json::array();
  for (const SignSplitMean& m : t.nominal.component) nominal.push_back(mean_json(m));
  j["nominal"] = nominal;
  Json sweeps = Json::object();
  for (int p = 0; p < kControlParameterCount; ++p) {
    const ParameterSweep& s = t.sweeps[p];
    Json e;
    e["deltas"] = s.deltas;
    Json means = Json::array();
    for (const PeriodMeans& pm : s.means) {
      Json row = Json::array();
      for (const SignSplitMean& m : pm.component) row.push_back(mean_json(m));
      means.push_back(row);
    }
    e["means"] = means;
    Json sp = Json::array(), sn = Json::array();
    for (int c = 0; c < 3; ++c) {
      sp.push_back(optional_json(s.slope_p[c]));
      sn.push_back(optional_json(s.slope_n[c]));
    }
    e["slope_mean"] = s.slope_mean;
    e["slope_positive"] = sp;
    e["slope_negative"] = sn;
    e["r2_mean"] = s.r2_mean;
    e["r2_positive"] = s.r2_p;
    e["r2_negative"] = s.r2_n;
    e["flagged"] = s.flagged;
    sweeps[control_parameter_name(p)] = e;
  }
  j["sweeps"] = sweeps;
  return j;
}

Json to_json(const AbdomenComparison& c) {
  const auto summary = [](const CaseSummary& s) {
    return Json{{"J", s.J},
                {"mean_abs_energy", s.mean_abs_energy},
                {"mean_power", s.mean_power},
                {"mean_abs_power", s.mean_abs_power}};
  };
  Json j;
  j["format"] = "flapsim.report";
  j["undulating"] = summary(c.undulating_summary);
  j["fixed"] = summary(c.fixed_summary);
  j["J_increase"] = c.J_increase;
  j["mean_power_reduction"] = c.mean_power_reduction;
  j["mean_energy_reduction"] = c.mean_energy_reduction;
  if (c.has_spring_damper) {
    j["abdomen_spring_damper"] = Json{{"k", c.abdomen_fit.k},
                                      {"c", c.abdomen_fit.c},
                                      {"tau0", c.abdomen_fit.tau0},
                                      {"rms_residual", c.abdomen_fit.rms_residual}};
  } else {
    j["abdomen_spring_damper"] = nullptr;
  }
  return j;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

Json to_json(const RunManifest& m) {
  return Json{{"command", m.command},         {"inputs", m.inputs},
              {"config_hash", m.config_hash}, {"seeds", m.seeds},
              {"version", m.version},         {"wall_seconds", m.wall_seconds},
              {"threads", m.threads}};
}

void check_writable(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw ConfigError("output " + quote(path) + " exists; pass --force to overwrite");
  }
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + quote(path));
  out << text;
  if (!out) throw std::runtime_error("write failed for " + quote(path));
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_text(path + ".manifest.json", to_json(m).dump(2) + "\n");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace flapsim
