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

// Fixed-step RK4 propagation of the reduced position dynamics, with an
// optional feedback controller that owns an integral-error state.

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "flapsim/aero.h"
#include "flapsim/kinematics.h"
#include "flapsim/multibody.h"

namespace flapsim {

struct SimConfig {
  int steps_per_period = 1000;
  int periods = 1;
  int record_stride = 1;
  bool record_torques = false;  // joint torques are costly; off by default

  // Throws ConfigError unless steps_per_period >= 100, periods >= 1 and
  // record_stride >= 1.
  void validate() const;
};

// Classic fourth-order Runge-Kutta step for any vector-like state.
template <typename State, typename Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Everything the right-hand side computes at one instant.
struct ModelEvaluation {
  PrescribedMotion motion;
  AeroResultant right;
  AeroResultant left;
  CouplingForces coupling;
  Vec3 aero_force = Vec3::Zero();  // R (Q_R F_R + Q_L F_L)
  Vec3 f_a = Vec3::Zero();         // aero force minus abdomen joint coupling
  Vec3 x_ddot = Vec3::Zero();
};

WingAeroState right_wing_state(const PrescribedMotion& motion, const Vec3& x_dot,
                               const MorphologyConfig& morph);
WingAeroState left_wing_state(const PrescribedMotion& motion, const Vec3& x_dot,
                              const MorphologyConfig& morph);

ModelEvaluation evaluate_model(double t, const Vec3& x_dot, const KinematicsParams& params,
                               const MorphologyConfig& morph);

// Feedback hook. The integrator calls begin_step() once per step with the
// step-start state, then kinematics() and integral_rate() at every RK4 stage.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_step(double t, int step, const Vec3& x, const Vec3& x_dot,
                          const Vec3& integral) = 0;
  virtual KinematicsParams kinematics(double t, const Vec3& x, const Vec3& x_dot,
                                      const Vec3& integral) const = 0;
  virtual Vec3 integral_rate(double t, const Vec3& x) const = 0;
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 x_dot = Vec3::Zero();
  Vec3 x_ddot = Vec3::Zero();
  Vec3 integral = Vec3::Zero();
  double phi_R = 0.0, theta_R = 0.0, psi_R = 0.0;
  double phi_L = 0.0, theta_L = 0.0, psi_L = 0.0;
  double theta_B = 0.0, theta_A = 0.0, theta_A_dot = 0.0;
  Vec3 F_R = Vec3::Zero();  // body frame, Q_R F_R
  Vec3 F_L = Vec3::Zero();
  Vec3 f_a = Vec3::Zero();
  double E = 0.0;
  double E_dot = 0.0;
  JointTorques torques;
  bool has_torques = false;
  // Control deltas in effect (zero in open loop).
  double dphi_m_s = 0.0, dphi_m_k = 0.0, dtheta_0 = 0.0, dtheta_A_m = 0.0;
};

struct Trajectory {
  double period = 0.0;
  double step = 0.0;
  std::vector<TrajectorySample> samples;
  // State after the last completed step, recorded or not.
  double final_time = 0.0;
  Vec3 final_x = Vec3::Zero();
  Vec3 final_x_dot = Vec3::Zero();
  Vec3 final_integral = Vec3::Zero();
  int completed_periods = 0;

  void write_csv(std::ostream& out) const;
  static const std::vector<std::string>& csv_header();
};

// Called at the end of every period; return false to stop integrating.
using PeriodCallback = std::function<bool(int period, const Vec3& x, const Vec3& x_dot,
                                          const Vec3& integral)>;

// Integrates (x, xdot) (plus the integral state when a controller is given)
// over sim.periods periods. Throws DivergenceError on a non-finite state.
Trajectory integrate(const Vec3& x0, const Vec3& x_dot0, const KinematicsParams& params,
                     const MorphologyConfig& morph, const SimConfig& sim,
                     Controller* controller = nullptr,
                     const PeriodCallback& on_period_end = {});

// Final state after one period from (0, x_dot0), no recording.
struct PeriodMap {
  Vec3 x_T = Vec3::Zero();
  Vec3 x_dot_T = Vec3::Zero();
};
PeriodMap propagate_period(const Vec3& x_dot0, const KinematicsParams& params,
                           const MorphologyConfig& morph, int steps_per_period);

struct PeriodicityResidual {
  double position = 0.0;  // |x(T) - x(0)|
  double velocity = 0.0;  // |xdot(T) - xdot(0)|
};
PeriodicityResidual periodicity_residual(const KinematicsParams& params, const Vec3& x_dot0,
                                         const MorphologyConfig& morph, const SimConfig& sim);

// A periodic reference orbit with dense output, built from a one-period
// trajectory recorded on every step. Position and velocity use cubic Hermite
// interpolation (with velocity and acceleration as slopes); the coupled force
// uses linear interpolation. Time is wrapped into [0, T).
class ReferenceOrbit {
 public:
  ReferenceOrbit() = default;
  ReferenceOrbit(KinematicsParams params, MorphologyConfig morph, const Vec3& x_dot0,
                 int steps_per_period);

  double period() const { return period_; }
  int steps_per_period() const { return steps_; }
  const KinematicsParams& params() const { return params_; }
  const MorphologyConfig& morphology() const { return morph_; }
  const Vec3& initial_velocity() const { return x_dot0_; }
  const Trajectory& trajectory() const { return traj_; }

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 coupled_force(double t) const;

 private:
  int locate(double t, double* frac) const;

  KinematicsParams params_;
  MorphologyConfig morph_;
  Vec3 x_dot0_ = Vec3::Zero();
  int steps_ = 0;
  double period_ = 0.0;
  double h_ = 0.0;
  Trajectory traj_;
};

}  // namespace flapsim
