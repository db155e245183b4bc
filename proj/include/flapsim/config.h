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

// JSON configuration and artifact I/O. Keys follow the parameter names used
// throughout (phi_m, theta_A_a, xdot1_0, ...); unknown keys are rejected with
// a did-you-mean hint. Every section is optional and defaults to the library
// defaults.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "flapsim/control.h"
#include "flapsim/floquet.h"
#include "flapsim/multibody.h"
#include "flapsim/orbit.h"
#include "flapsim/simulate.h"

namespace flapsim {

using Json = nlohmann::ordered_json;

// Edit distance with unit insertion, deletion and substitution costs.
int levenshtein(const std::string& a, const std::string& b);
// Closest candidate within distance max(2, |key| / 3), or "" when none.
std::string closest_key(const std::string& key, const std::vector<std::string>& candidates);

// Reads and merges (RFC 7386 merge patch, later files win) JSON files.
// Throws ConfigError naming the path on a missing or malformed file.
Json load_json_files(const std::vector<std::string>& paths);
Json load_json_file(const std::string& path);

// Top-level sections: morphology, parameters, sim, optimizer, control, roa.
void check_config_keys(const Json& config);

MorphologyConfig morphology_from_json(const Json& j);
Json to_json(const MorphologyConfig& m);

// Decision vector from a "parameters" object over orbit_parameter_keys();
// missing entries keep the values of `base`. null marks an entry unused (the
// fixed-abdomen amplitude and phase) and reads as 0.
OrbitVector parameters_from_json(const Json& j, const OrbitVector& base);
Json parameters_to_json(const OrbitVector& v, AbdomenMode mode);

SimConfig sim_from_json(const Json& j, SimConfig base = {});
Json to_json(const SimConfig& s);

// Orbit problem from a full config (morphology, parameters, sim, optimizer).
OrbitProblem problem_from_config(const Json& config);

Gains gains_from_json(const Json& j);
Json to_json(const Gains& g);
struct ControlSettings {
  Gains gains;
  ControllerConfig controller;
  SweepSpec sweep;
  ClosedLoopOptions run;
};
ControlSettings control_from_json(const Json& j);

struct RoaSettings {
  int samples = 500;
  double radius = 3.0;
  std::uint64_t seed = 1;
};
RoaSettings roa_from_json(const Json& j);

// Orbit solution artifact.
Json to_json(const OrbitSolution& s);
struct StoredOrbit {
  AbdomenMode mode = AbdomenMode::kUndulating;
  OrbitVector decision = OrbitVector::Zero();
  KinematicsParams kinematics;
  Vec3 x_dot0 = Vec3::Zero();
  MorphologyConfig morph;
  SimConfig sim;
  double J = 0.0;
  double w1 = 1.0;
  double w2 = 1.0;
  double residual_norm = 0.0;
  bool converged = false;
};
StoredOrbit orbit_from_json(const Json& j);
// Throws MissingPrerequisite when the file does not exist.
StoredOrbit load_orbit(const std::string& path);

Json to_json(const MonodromyResult& r, const std::vector<ModeInfo>& modes);
Json to_json(const SensitivityTable& t);
Json to_json(const AbdomenComparison& c);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;  // config and artifact paths, in order
  std::string config_hash;         // FNV-1a of the canonical merged config
  std::vector<std::uint64_t> seeds;
  std::string version;
  double wall_seconds = 0.0;
  int threads = 1;
};
Json to_json(const RunManifest& m);

// Output paths: refuse to overwrite unless `force`; throws ConfigError.
void check_writable(const std::string& path, bool force);
void write_text(const std::string& path, const std::string& text);
// Writes `<path>.manifest.json`.
void write_manifest(const std::string& path, const RunManifest& m);

// %.17g, so values round-trip exactly.
std::string format_double(double v);

}  // namespace flapsim
