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

// Periodic hovering orbits. The decision vector holds the 18 waveform
// parameters and the initial velocity; x(0) = 0 by convention. The objective
//
//   J = (w1 int_0^T |E| dt + w2 int_0^T |dE/dt| dt) / T
//
// uses E measured relative to the starting point, so it is invariant under
// translations of x(0). Periodicity x(T) = x(0), xdot(T) = xdot(0) is imposed
// by a quadratic penalty with continuation, searched by multistart
// Nelder-Mead (optionally seeded by a particle swarm), then tightened by a
// minimum-norm Gauss-Newton correction on the six residuals.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flapsim/kinematics.h"
#include "flapsim/multibody.h"
#include "flapsim/simulate.h"

namespace flapsim {

enum class AbdomenMode { kUndulating, kFixed };

const char* to_string(AbdomenMode mode);
// Throws ConfigError on anything but "undulating" or "fixed".
AbdomenMode abdomen_mode_from_string(const std::string& s);

inline constexpr int kOrbitDimension = 21;
using OrbitVector = Eigen::Matrix<double, kOrbitDimension, 1>;

// Index positions inside OrbitVector.
enum OrbitIndex : int {
  kF = 0, kBeta, kPhiM, kPhiK, kPhi0, kThetaM, kThetaC, kTheta0, kThetaA,
  kPsiM, kPsi0, kPsiA, kThetaBm, kThetaB0, kThetaBa, kThetaAm, kThetaA0,
  kThetaAa, kXdot1, kXdot2, kXdot3,
};

// Key names, in OrbitIndex order, used by solution and problem files.
const std::array<std::string, kOrbitDimension>& orbit_parameter_keys();

OrbitVector pack_decision(const KinematicsParams& k, const Vec3& x_dot0);
// psi_N and abdomen_fixed are taken from `base`; control deltas are zeroed.
KinematicsParams unpack_kinematics(const OrbitVector& v, const KinematicsParams& base = {});
inline Vec3 unpack_velocity(const OrbitVector& v) { return v.tail<3>(); }

struct Bound {
  double lo = 0.0;
  double hi = 0.0;
};
using OrbitBounds = std::array<Bound, kOrbitDimension>;

// Amplitudes in [0, pi/2], phases in [-pi, pi], f in [5, 20] Hz, velocity
// components in [-1, 1] m/s, offsets in [-pi/2, pi/2], phi_K in [0.05, 1],
// theta_C in [0.1, 10].
OrbitBounds default_orbit_bounds();

struct OptimizerConfig {
  int starts = 4;
  std::uint64_t seed = 1;
  // Normalized half-width of the box around the initial guess that seeds the
  // non-first starts and the swarm.
  double start_spread = 0.05;
  double initial_simplex = 0.02;  // normalized
  int evaluations_per_stage = 1500;
  double lambda_start = 1e2;
  double lambda_end = 1e6;
  double lambda_factor = 10.0;
  bool particle_swarm = false;
  int swarm_size = 16;
  int swarm_iterations = 20;
  bool polish = true;
  int polish_iterations = 12;
  double residual_tolerance = 1e-5;

  void validate() const;
};

struct OrbitProblem {
  AbdomenMode mode = AbdomenMode::kUndulating;
  OrbitBounds bounds = default_orbit_bounds();
  double w1 = 1.0;
  double w2 = 1.0;
  int psi_N = 2;
  MorphologyConfig morph;
  SimConfig sim;  // periods is forced to 1
  OrbitVector initial = OrbitVector::Zero();
  OptimizerConfig optimizer;

  // Decision entries searched over; the fixed mode drops theta_A_m, theta_A_a.
  std::vector<int> active_indices() const;
  KinematicsParams kinematics(const OrbitVector& v) const;
  // Clamps into bounds and zeroes the inactive entries.
  OrbitVector sanitize(const OrbitVector& v) const;
  // Throws ConfigError on non-finite or empty bounds, negative weights, an
  // initial point outside the bounds, or an invalid morphology.
  void validate() const;
};

// Trapezoid-rule objective on a recorded single-period trajectory.
double energy_objective(const Trajectory& traj, double mass, double g, double w1, double w2);

struct ObjectiveValue {
  double J = 0.0;
  Vec3 position_residual = Vec3::Zero();  // x(T) - x(0)
  Vec3 velocity_residual = Vec3::Zero();  // xdot(T) - xdot(0)
  bool feasible = true;                   // flapping bound and finite motion
  std::string diagnostic;

  double residual_norm() const {
    return std::max(position_residual.norm(), velocity_residual.norm());
  }
  double residual_squared() const {
    return position_residual.squaredNorm() + velocity_residual.squaredNorm();
  }
};

// One period from x = 0. Divergence or an infeasible waveform return
// feasible = false with J set to a large finite value.
ObjectiveValue evaluate_objective(const OrbitProblem& problem, const OrbitVector& v);

struct OrbitSolution {
  AbdomenMode mode = AbdomenMode::kUndulating;
  OrbitVector decision = OrbitVector::Zero();
  KinematicsParams kinematics;
  Vec3 x_dot0 = Vec3::Zero();
  double J = 0.0;
  Vec3 position_residual = Vec3::Zero();
  Vec3 velocity_residual = Vec3::Zero();
  double residual_norm = 0.0;
  bool converged = false;  // residual_norm < residual_tolerance
  int evaluations = 0;
  int best_start = -1;
  std::string diagnostics;
  double w1 = 1.0;
  double w2 = 1.0;
  MorphologyConfig morph;
  SimConfig sim;
  Trajectory trajectory;  // one period, every step
};

// Re-simulates `v` from scratch and fills every field except the search
// statistics.
OrbitSolution make_solution(const OrbitProblem& problem, const OrbitVector& v);

OrbitSolution optimize(const OrbitProblem& problem);

// Minimum-norm Gauss-Newton correction of the periodicity residuals over the
// active decision entries. Returns the corrected point; `evaluations` counts
// objective calls.
OrbitVector polish_periodicity(const OrbitProblem& problem, const OrbitVector& v,
                               int iterations, double tolerance, int* evaluations = nullptr);

// Undulating versus fixed-abdomen comparison.
struct EnergySeries {
  std::vector<double> t, E, E_dot, P, tau_A;
};
struct CaseSummary {
  double J = 0.0;
  double mean_abs_energy = 0.0;
  double mean_power = 0.0;      // mean of P_R + P_L + P_A
  double mean_abs_power = 0.0;  // mean of |P_R| + |P_L| + |P_A|
};
struct AbdomenComparison {
  EnergySeries undulating, fixed;
  CaseSummary undulating_summary, fixed_summary;
  double J_increase = 0.0;            // (J_fixed - J_und) / J_und
  double mean_power_reduction = 0.0;  // 1 - und / fixed
  double mean_energy_reduction = 0.0;
  bool has_spring_damper = false;
  SpringDamperFit abdomen_fit;  // tau_A2 against theta_A, undulating case
};

// Both solutions must be converged (std::invalid_argument otherwise).
AbdomenComparison compare_abdomen_effect(const OrbitSolution& undulating,
                                         const OrbitSolution& fixed);

}  // namespace flapsim
