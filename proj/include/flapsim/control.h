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

// Hover feedback: an outer PID loop on the position error demands a change
// of the period-averaged coupled force f_a,
//
//   delta_fbar = m (K_P e + K_D e' + K_I int e),   e = x_d - x,
//
// which is mapped to wing and abdomen parameter changes through slopes of
// sign-split period means of f_a identified by parameter sweeps. The
// longitudinal components (1, 3) use the minimum-norm solution of a 2 x 3
// system over (dphi_m_s, dtheta_0, dtheta_A_m), or the 2 x 2 inverse on the
// first two columns without abdomen control; the lateral component inverts
// the dphi_m_k slope. Right and left flapping amplitudes change by
// dphi_m_s + dphi_m_k and dphi_m_s - dphi_m_k.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flapsim/floquet.h"
#include "flapsim/kinematics.h"
#include "flapsim/simulate.h"

namespace flapsim {

struct ControlParams {
  double dphi_m_s = 0.0;
  double dphi_m_k = 0.0;
  double dtheta_0 = 0.0;
  double dtheta_A_m = 0.0;
  bool abdomen_active = true;

  KinematicsParams apply(const KinematicsParams& nominal) const;
  // |phi_m + dphi| + |phi_0| < pi/2 for both wings.
  bool feasible(const KinematicsParams& nominal) const;
};

struct Gains {
  double K_P = 421.88;  // 1/s^2
  double K_D = 15.60;   // 1/s
  double K_I = 1.26;    // 1/s^3
  // Throws ConfigError unless all three are positive and finite.
  void validate() const;
};

Vec3 pid_demand(const Vec3& e, const Vec3& e_dot, const Vec3& e_int, const Gains& g, double m);

// Roots of s^3 + K_D s^2 + K_P s + K_I, the closed loop of a unit mass under
// the PID law.
std::array<std::complex<double>, 3> characteristic_roots(const Gains& g);

// Time-weighted means over the subsets of one period where a sampled signal
// is positive or negative. The signal is taken piecewise linear between
// samples, and each interval is split at its zero crossing.
struct SignSplitMean {
  std::optional<double> positive;
  std::optional<double> negative;
  double positive_duration = 0.0;
  double negative_duration = 0.0;
  double mean = 0.0;  // ordinary mean over the whole window
};
SignSplitMean sign_split_mean(const std::vector<double>& t, const std::vector<double>& f);

enum ControlParameter : int { kDphiMs = 0, kDphiMk, kDtheta0, kDthetaAm };
inline constexpr int kControlParameterCount = 4;
const char* control_parameter_name(int p);

struct SweepSpec {
  double half_width = 0.1;  // rad
  int points = 11;
  // Throws ConfigError on a non-positive width or fewer than 3 points.
  void validate() const;
};

// Sign-split means of the three f_a components over one period.
struct PeriodMeans {
  std::array<SignSplitMean, 3> component;
};
PeriodMeans period_means(const Trajectory& traj);

struct ParameterSweep {
  std::vector<double> deltas;
  std::vector<PeriodMeans> means;
  // Least-squares slopes through the nominal point, per f_a component, of the
  // positive-branch, negative-branch and ordinary means. A branch slope is
  // absent when the branch is empty at the nominal point.
  std::array<std::optional<double>, 3> slope_p, slope_n;
  std::array<double, 3> slope_mean{};
  std::array<double, 3> r2_p{}, r2_n{}, r2_mean{};
  bool flagged = false;  // some fitted branch has R^2 < 0.9
};

struct SensitivityTable {
  PeriodMeans nominal;
  std::array<ParameterSweep, kControlParameterCount> sweeps;
  SweepSpec spec;

  // Slope of f_a component `c` with respect to parameter `p` for the branch
  // selected by `sign` (+1 positive, -1 negative, 0 ordinary mean), falling
  // back to the ordinary-mean slope when that branch is absent.
  double slope(int p, int c, int sign) const;
};

// Sweeps each control parameter over the symmetric grid, simulating one
// period from the orbit's initial velocity at the orbit's resolution.
SensitivityTable identify_sensitivities(const ReferenceOrbit& orbit, const SweepSpec& spec);

using Mat23 = Eigen::Matrix<double, 2, 3>;

// u = S^T (S S^T)^{-1} d. Returns nullopt when S S^T is numerically singular.
std::optional<Vec3> minimum_norm_solution(const Mat23& S, const Eigen::Vector2d& d);

// Signs of each f_a component that select the slope branches (0 selects the
// ordinary-mean slope).
struct BranchSigns {
  std::array<int, 3> sign{{1, 1, 1}};
};

struct Allocation {
  ControlParams params;
  bool ok = true;  // false on a singular longitudinal system or zero lateral slope
};

Mat23 longitudinal_sensitivity(const SensitivityTable& table, const BranchSigns& signs);

Allocation allocate(const Vec3& demand, const SensitivityTable& table, const BranchSigns& signs,
                    bool abdomen_active);

enum class ControlCadence { kPerStep, kPerCycle };
const char* to_string(ControlCadence c);
ControlCadence control_cadence_from_string(const std::string& s);

struct ControllerConfig {
  ControlCadence cadence = ControlCadence::kPerStep;
  // Per-step lateral input dphi_m_k = d2 g(t) / <g^2>, with g(t) the
  // instantaneous d f_a2 / d dphi_m_k along the orbit, instead of d2 over the
  // mean slope. The mean-slope inverse is unstable per step.
  bool lateral_phase_weighted = true;
  bool abdomen_active = true;
  // Per-step updates may pick slope branches from the sign of the nominal
  // f_a(t); by default (and always per cycle) ordinary-mean slopes are used.
  bool sign_split = false;
  double integral_clamp = 10.0;  // m s, bound on |int e|
  // Per-parameter bound on |delta| (rad), applied before the flapping bound.
  double max_delta = 0.5;
  // Distance kept from the flapping bound pi/2 (rad).
  double flapping_margin = 1e-3;
  void validate() const;
};

// Feedback controller used by integrate(). The reference is the orbit x_d(t).
class HoverController : public Controller {
 public:
  HoverController(const ReferenceOrbit& orbit, const SensitivityTable& table, const Gains& gains,
                  const ControllerConfig& config);

  void begin_step(double t, int step, const Vec3& x, const Vec3& x_dot,
                  const Vec3& integral) override;
  KinematicsParams kinematics(double t, const Vec3& x, const Vec3& x_dot,
                              const Vec3& integral) const override;
  Vec3 integral_rate(double t, const Vec3& x) const override;

  const ControlParams& current() const { return current_; }
  bool saturated() const { return saturated_; }
  int allocation_failures() const { return failures_; }

  // Unsaturated allocation of the PID demand at time t for errors
  // (e, e', int e); used for linearization.
  ControlParams law(double t, const Vec3& e, const Vec3& e_dot, const Vec3& e_int) const;

 private:
  BranchSigns signs_at(double t) const;
  double lateral_input(double t, double demand, double fallback) const;

  const ReferenceOrbit& orbit_;
  SensitivityTable table_;
  Gains gains_;
  ControllerConfig config_;
  KinematicsParams applied_;
  ControlParams current_;
  std::vector<double> lateral_gain_;  // d f_a2 / d dphi_m_k on the step grid
  double lateral_power_ = 0.0;        // its mean square
  Vec3 integral_ = Vec3::Zero();
  bool saturated_ = false;
  int failures_ = 0;
};

struct ClosedLoopOptions {
  int max_periods = 100;
  double tolerance = 1e-4;         // on |dx| and |dxdot| at period ends
  double divergence_radius = 50.0;  // m; runs beyond it stop as failed
  int record_stride = 1;           // 0 records period ends only
};

struct ClosedLoopResult {
  Trajectory trajectory;
  bool converged = false;
  int cycles_to_converge = -1;
  bool diverged = false;
  double failure_time = -1.0;
  std::vector<double> position_error;  // at each period end
  std::vector<double> velocity_error;
};

// Starts from x_d(0) + dx0, xdot_d(0) + dxdot0.
ClosedLoopResult closed_loop_run(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                 const Gains& gains, const ControllerConfig& config,
                                 const Vec3& dx0, const Vec3& dxdot0,
                                 const ClosedLoopOptions& options = {});

// Numerical linearization of the closed loop about the orbit in the states
// (dx, dxdot, dI) with dI' = dx (dI = -int e), by central differences.
MatX closedloop_A(double t, const ReferenceOrbit& orbit, const SensitivityTable& table,
                  const Gains& gains, const ControllerConfig& config);
// The returned system refers to its arguments; they must outlive it.
PeriodicLinearSystem closedloop_system(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                       const Gains& gains, const ControllerConfig& config);

struct RoaSample {
  double e_x = 0.0;
  double e_z = 0.0;
  bool converged = false;
  int cycles = -1;
};

// Initial errors (r cos a, 0, r sin a), r ~ U(0, radius), a ~ U(0, 2 pi),
// drawn in order from one seeded stream; samples run in parallel and are
// returned by index.
std::vector<RoaSample> roa_monte_carlo(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                       const Gains& gains, const ControllerConfig& config,
                                       int samples, double radius, std::uint64_t seed,
                                       const ClosedLoopOptions& options = {});

}  // namespace flapsim
