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

#pragma once

#include "flapsim/orbit.h"
#include "flapsim/simulate.h"
#include "test_fixtures.h"

namespace flapsim::testing {

// Desk-resolution hover problem seeded at the tabulated parameters.
inline OrbitProblem desk_problem(AbdomenMode mode = AbdomenMode::kUndulating) {
  OrbitProblem p;
  p.mode = mode;
  p.sim.steps_per_period = 200;
  p.morph.aero.quadrature_points = 16;
  p.initial = mode == AbdomenMode::kFixed
                  ? pack_decision(table1_fixed(), table1_fixed_velocity())
                  : pack_decision(table1_undulating(), table1_undulating_velocity());
  p.optimizer.starts = 1;
  p.optimizer.evaluations_per_stage = 300;
  return p;
}

// Periodic hover orbit near the tabulated point, found by the Gauss-Newton
// periodicity polish alone (no energy minimization).
inline OrbitSolution polished_hover(AbdomenMode mode = AbdomenMode::kUndulating) {
  const OrbitProblem p = desk_problem(mode);
  return make_solution(p, polish_periodicity(p, p.initial, 12, 1e-10));
}

inline const ReferenceOrbit& hover_reference() {
  static const ReferenceOrbit orbit = [] {
    const OrbitSolution s = polished_hover();
    return ReferenceOrbit(s.kinematics, s.morph, s.x_dot0, s.sim.steps_per_period);
  }();
  return orbit;
}

}  // namespace flapsim::testing
