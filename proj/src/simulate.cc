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

#include "flapsim/simulate.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "flapsim/errors.h"

namespace flapsim {
namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Speeds beyond this are treated as a blown-up integration.
constexpr double kMaxSpeed = 1e3;

bool state_ok(const Vec9& y) {
  return y.allFinite() && y.segment<3>(3).norm() < kMaxSpeed;
}

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void SimConfig::validate() const {
  if (steps_per_period < 100) throw ConfigError("sim: steps_per_period must be >= 100");
  if (periods < 1) throw ConfigError("sim: periods must be >= 1");
  if (record_stride < 1) throw ConfigError("sim: record_stride must be >= 1");
}

WingAeroState right_wing_state(const PrescribedMotion& motion, const Vec3& x_dot,
                               const MorphologyConfig& morph) {
  return {motion.R, motion.QR, x_dot, motion.Omega, motion.OmegaR, morph.mu_R, 1.0};
}

WingAeroState left_wing_state(const PrescribedMotion& motion, const Vec3& x_dot,
                              const MorphologyConfig& morph) {
  return {motion.R, motion.QL, x_dot, motion.Omega, motion.OmegaL, morph.mu_L, -1.0};
}

ModelEvaluation evaluate_model(double t, const Vec3& x_dot, const KinematicsParams& params,
                               const MorphologyConfig& morph) {
  ModelEvaluation e;
  e.motion = prescribed_motion_at(t, params);
  e.right = blade_element_forces(right_wing_state(e.motion, x_dot, morph), morph.aero);
  e.left = blade_element_forces(left_wing_state(e.motion, x_dot, morph), morph.aero);
  e.coupling = coupling_forces(e.motion, morph);
  e.aero_force = aero_force_inertial(e.motion, e.right, e.left);
  e.f_a = e.aero_force - e.coupling.abdomen_joint;
  e.x_ddot = (e.aero_force - e.coupling.total()) / morph.total_mass() + morph.g * kE3;
  return e;
}

const std::vector<std::string>& Trajectory::csv_header() {
  static const std::vector<std::string> header = {
      "t",       "x1",      "x2",      "x3",         "xdot1",    "xdot2",    "xdot3",
      "xddot1",  "xddot2",  "xddot3",  "phi_R",      "theta_R",  "psi_R",    "phi_L",
      "theta_L", "psi_L",   "theta_B", "theta_A",    "F_R1",     "F_R2",     "F_R3",
      "F_L1",    "F_L2",    "F_L3",    "f_a1",       "f_a2",     "f_a3",     "E",
      "E_dot",   "tau_R1",  "tau_R2",  "tau_R3",     "tau_L1",   "tau_L2",   "tau_L3",
      "tau_A1",  "tau_A2",  "tau_A3",  "P_R",        "P_L",      "P_A",      "I1",
      "I2",      "I3",      "dphi_m_s", "dphi_m_k", "dtheta_0", "dtheta_A_m"};
  return header;
}

void Trajectory::write_csv(std::ostream& out) const {
  const auto& header = csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const TrajectorySample& s : samples) {
    std::vector<double> row = {s.t};
    const auto add3 = [&](const Vec3& v) { row.insert(row.end(), {v.x(), v.y(), v.z()}); };
    add3(s.x);
    add3(s.x_dot);
    add3(s.x_ddot);
    row.insert(row.end(), {s.phi_R, s.theta_R, s.psi_R, s.phi_L, s.theta_L, s.psi_L,
                           s.theta_B, s.theta_A});
    add3(s.F_R);
    add3(s.F_L);
    add3(s.f_a);
    row.insert(row.end(), {s.E, s.E_dot});
    if (s.has_torques) {
      add3(s.torques.tau_R);
      add3(s.torques.tau_L);
      add3(s.torques.tau_A);
      row.insert(row.end(), {s.torques.P_R, s.torques.P_L, s.torques.P_A});
    } else {
      row.insert(row.end(), 12, nan);
    }
    add3(s.integral);
    row.insert(row.end(), {s.dphi_m_s, s.dphi_m_k, s.dtheta_0, s.dtheta_A_m});
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      put(out, row[i]);
    }
    out << "\n";
  }
}

Trajectory integrate(const Vec3& x0, const Vec3& x_dot0, const KinematicsParams& params,
                     const MorphologyConfig& morph, const SimConfig& sim,
                     Controller* controller, const PeriodCallback& on_period_end) {
  sim.validate();
  const double period = params.period();
  const int n = sim.steps_per_period;
  const double h = period / n;
  const long total = static_cast<long>(n) * sim.periods;
  const double m = morph.total_mass();

  Trajectory traj;
  traj.period = period;
  traj.step = h;
  traj.samples.reserve(static_cast<std::size_t>(total / sim.record_stride + 1));

  const auto stage_params = [&](double t, const Vec9& y) {
    return controller ? controller->kinematics(t, y.segment<3>(0), y.segment<3>(3),
                                               y.segment<3>(6))
                      : params;
  };
  const auto rhs = [&](double t, const Vec9& y, ModelEvaluation* keep,
                       KinematicsParams* keep_params) {
    const KinematicsParams p = stage_params(t, y);
    ModelEvaluation e = evaluate_model(t, y.segment<3>(3), p, morph);
    Vec9 dy;
    dy.segment<3>(0) = y.segment<3>(3);
    dy.segment<3>(3) = e.x_ddot;
    dy.segment<3>(6) =
        controller ? controller->integral_rate(t, y.segment<3>(0)) : Vec3(Vec3::Zero());
    if (keep) *keep = std::move(e);
    if (keep_params) *keep_params = p;
    return dy;
  };
  const auto record = [&](double t, const Vec9& y, const ModelEvaluation& e,
                          const KinematicsParams& p) {
    TrajectorySample s;
    s.t = t;
    s.x = y.segment<3>(0);
    s.x_dot = y.segment<3>(3);
    s.integral = y.segment<3>(6);
    s.x_ddot = e.x_ddot;
    s.phi_R = e.motion.phi_R.value;
    s.theta_R = e.motion.theta_R.value;
    s.psi_R = e.motion.psi_R.value;
    s.phi_L = e.motion.phi_L.value;
    s.theta_L = e.motion.theta_L.value;
    s.psi_L = e.motion.psi_L.value;
    s.theta_B = e.motion.pitch.body.value;
    s.theta_A = e.motion.pitch.abdomen.value;
    s.theta_A_dot = e.motion.pitch.abdomen.rate;
    s.F_R = e.motion.QR * e.right.force();
    s.F_L = e.motion.QL * e.left.force();
    s.f_a = e.f_a;
    s.E = energy(s.x, s.x_dot, m, morph.g);
    s.E_dot = energy_rate(s.x_dot, s.x_ddot, m, morph.g);
    if (sim.record_torques) {
      s.torques = reconstruct_torques(s.x, s.x_dot, s.x_ddot, e.motion, e.right, e.left,
                                      morph);
      s.has_torques = true;
    }
    s.dphi_m_s = 0.5 * (p.dphi_m_right + p.dphi_m_left);
    s.dphi_m_k = 0.5 * (p.dphi_m_right - p.dphi_m_left);
    s.dtheta_0 = p.dtheta_0;
    s.dtheta_A_m = p.dtheta_A_m;
    traj.samples.push_back(std::move(s));
  };

  Vec9 y;
  y << x0, x_dot0, Vec3::Zero();
  if (!state_ok(y)) throw DivergenceError("integrate: non-finite initial state", 0.0);
  ModelEvaluation e1;
  KinematicsParams p1;
  long step = 0;
  for (; step < total; ++step) {
    const double t = static_cast<double>(step) * h;
    if (controller) {
      controller->begin_step(t, static_cast<int>(step), y.segment<3>(0), y.segment<3>(3),
                             y.segment<3>(6));
    }
    const Vec9 k1 = rhs(t, y, &e1, &p1);
    if (step % sim.record_stride == 0) record(t, y, e1, p1);
    const Vec9 k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1, nullptr, nullptr);
    const Vec9 k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2, nullptr, nullptr);
    const Vec9 k4 = rhs(t + h, y + h * k3, nullptr, nullptr);
    const Vec9 next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state_ok(next)) {
      std::ostringstream msg;
      msg << "integrate: state diverged after t = " << t;
      throw DivergenceError(msg.str(), t);
    }
    y = next;
    traj.final_time = static_cast<double>(step + 1) * h;
    traj.final_x = y.segment<3>(0);
    traj.final_x_dot = y.segment<3>(3);
    traj.final_integral = y.segment<3>(6);
    if ((step + 1) % n == 0) {
      traj.completed_periods = static_cast<int>((step + 1) / n);
      if (on_period_end &&
          !on_period_end(traj.completed_periods, traj.final_x, traj.final_x_dot,
                         traj.final_integral)) {
        ++step;
        break;
      }
    }
  }
  if (step == total && total % sim.record_stride == 0) {
    const double t = static_cast<double>(total) * h;
    if (controller) {
      controller->begin_step(t, static_cast<int>(total), y.segment<3>(0), y.segment<3>(3),
                             y.segment<3>(6));
    }
    rhs(t, y, &e1, &p1);
    record(t, y, e1, p1);
  }
  return traj;
}

PeriodMap propagate_period(const Vec3& x_dot0, const KinematicsParams& params,
                           const MorphologyConfig& morph, int steps_per_period) {
  const double h = params.period() / steps_per_period;
  const auto rhs = [&](double t, const Vec6& y) {
    Vec6 dy;
    dy.head<3>() = y.tail<3>();
    dy.tail<3>() = evaluate_model(t, y.tail<3>(), params, morph).x_ddot;
    return dy;
  };
  Vec6 y;
  y << Vec3::Zero(), x_dot0;
  for (int i = 0; i < steps_per_period; ++i) {
    const double t = i * h;
    y = rk4_step(rhs, t, y, h);
    if (!y.allFinite() || y.tail<3>().norm() >= kMaxSpeed) {
      throw DivergenceError("propagate_period: state diverged", t);
    }
  }
  return {y.head<3>(), y.tail<3>()};
}

PeriodicityResidual periodicity_residual(const KinematicsParams& params, const Vec3& x_dot0,
                                         const MorphologyConfig& morph,
                                         const SimConfig& sim) {
  sim.validate();
  const PeriodMap end = propagate_period(x_dot0, params, morph, sim.steps_per_period);
  return {end.x_T.norm(), (end.x_dot_T - x_dot0).norm()};
}

ReferenceOrbit::ReferenceOrbit(KinematicsParams params, MorphologyConfig morph,
                               const Vec3& x_dot0, int steps_per_period)
    : params_(std::move(params)),
      morph_(std::move(morph)),
      x_dot0_(x_dot0),
      steps_(steps_per_period) {
  SimConfig sim;
  sim.steps_per_period = steps_per_period;
  sim.periods = 1;
  sim.record_stride = 1;
  traj_ = integrate(Vec3::Zero(), x_dot0_, params_, morph_, sim);
  period_ = traj_.period;
  h_ = traj_.step;
}

int ReferenceOrbit::locate(double t, double* frac) const {
  double tau = std::fmod(t, period_);
  if (tau < 0.0) tau += period_;
  double k = std::floor(tau / h_);
  int i = static_cast<int>(k);
  if (i >= steps_) i = steps_ - 1;
  if (i < 0) i = 0;
  *frac = tau / h_ - i;
  return i;
}

Vec3 ReferenceOrbit::position(double t) const {
  double s;
  const int i = locate(t, &s);
  const auto& a = traj_.samples[i];
  const auto& b = traj_.samples[i + 1];
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.x + (s3 - 2 * s2 + s) * h_ * a.x_dot +
         (-2 * s3 + 3 * s2) * b.x + (s3 - s2) * h_ * b.x_dot;
}

Vec3 ReferenceOrbit::velocity(double t) const {
  double s;
  const int i = locate(t, &s);
  const auto& a = traj_.samples[i];
  const auto& b = traj_.samples[i + 1];
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.x_dot + (s3 - 2 * s2 + s) * h_ * a.x_ddot +
         (-2 * s3 + 3 * s2) * b.x_dot + (s3 - s2) * h_ * b.x_ddot;
}

Vec3 ReferenceOrbit::coupled_force(double t) const {
  double s;
  const int i = locate(t, &s);
  return (1.0 - s) * traj_.samples[i].f_a + s * traj_.samples[i + 1].f_a;
}

}  // namespace flapsim
