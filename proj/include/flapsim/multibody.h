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

// Articulated four-body model: body (B), right wing (R), left wing (L) and
// abdomen (A) on the group R^3 x SO(3)^4 with configuration
// g = (x, R, Q_R, Q_L, Q_A) and velocity xi = (xdot, Omega, Omega_R, Omega_L,
// Omega_A).
//
// x is the body mass center in the inertial NED frame. Component i in
// {R, L, A} is attached at joint mu_i (body frame) and has its mass center at
// rho_i (component frame) from the joint, so its mass center sits at
//
//   x_i = x + R p_i,   p_i = mu_i + Q_i rho_i.
//
// Kinetic energy is (1/2) xi^T J(g) xi with J = sum_i m_i G_i^T G_i +
// H_i^T I_i H_i, where G_i maps xi to the mass-center velocity and H_i maps
// xi to the angular velocity in the component frame:
//
//   v_i = xdot - R hat(p_i) Omega - R Q_i hat(rho_i) Omega_i
//   w_i = Q_i^T Omega + Omega_i
//
// The Euler-Lagrange equations read
//
//   J xi' + K(xi) xi - ad*_xi (J xi) - (1/2) K(xi)^T xi + grad U = f,
//
// where column j of K(xi) is dJ(e_j) xi, the left-trivialized directional
// derivative of J along e_j, contracted with xi. The translational row gives
// the reduced position dynamics
//
//   m xddot + sum_i (J_i12 Omega' + J_i13 Omega_i' + K_i12 Omega + K_i13 Omega_i)
//     = R sum_i Q_i F_i + m g e3.
//
// Because x is the body mass center, the body contributes no coupling term.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "flapsim/aero.h"
#include "flapsim/kinematics.h"
#include "flapsim/liegroup.h"

namespace flapsim {

using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

// Slot offsets in xi.
inline constexpr int kSlotX = 0;
inline constexpr int kSlotBody = 3;
inline constexpr int kSlotRight = 6;
inline constexpr int kSlotLeft = 9;
inline constexpr int kSlotAbdomen = 12;

struct MorphologyConfig {
  double m_B = 2.0e-4;  // kg
  double m_A = 2.5e-4;
  double m_R = 2.5e-5;
  double m_L = 2.5e-5;
  Mat3 I_B = Vec3(3.2e-10, 1.6e-9, 1.6e-9).asDiagonal();  // kg m^2
  Mat3 I_A = Vec3(4.0e-10, 7.4e-9, 7.4e-9).asDiagonal();
  Mat3 I_R = Vec3(3.9e-9, 2.1e-9, 6.0e-9).asDiagonal();
  Mat3 I_L = Vec3(3.9e-9, 2.1e-9, 6.0e-9).asDiagonal();
  Vec3 mu_R = Vec3(0.002, 0.002, 0.0);  // joints, body frame, m
  Vec3 mu_L = Vec3(0.002, -0.002, 0.0);
  Vec3 mu_A = Vec3(-0.006, 0.0, 0.0);
  Vec3 rho_R = Vec3(0.0, 0.025, 0.0);  // mass centers from joints, m
  Vec3 rho_L = Vec3(0.0, -0.025, 0.0);
  Vec3 rho_A = Vec3(-0.012, 0.0, 0.0);
  double g = 9.81;  // m/s^2
  AeroConfig aero;  // shared by both wings; the left wing is the mirror image

  double total_mass() const { return m_B + m_A + m_R + m_L; }

  // Sets the left wing to the mirror image of the right wing through the
  // body x-z plane.
  void mirror_left_from_right();

  // Body mass must be positive; appendage masses may be zero (a massless
  // appendage carries no inertia). Inertias must be symmetric and positive
  // definite whenever the component mass is positive. Throws ConfigError.
  void validate() const;
};

// Configuration and velocity of the whole vehicle.
struct GeneralizedState {
  Vec3 x = Vec3::Zero();
  Rotation R = Rotation::Identity();
  Rotation QR = Rotation::Identity();
  Rotation QL = Rotation::Identity();
  Rotation QA = Rotation::Identity();
  Vec15 xi = Vec15::Zero();

  static GeneralizedState from_motion(const Vec3& x, const Vec3& x_dot,
                                      const PrescribedMotion& motion);
};

// xi' from a prescribed motion and a translational acceleration.
Vec15 velocity_rate(const Vec3& x_ddot, const PrescribedMotion& motion);

// Translational-rotational coupling of one appendage.
struct CouplingBlocks {
  Mat3 J12 = Mat3::Zero();  // multiplies Omega'
  Mat3 J13 = Mat3::Zero();  // multiplies Omega_i'
  Mat3 K12 = Mat3::Zero();  // multiplies Omega
  Mat3 K13 = Mat3::Zero();  // multiplies Omega_i
};

struct DynamicsBlocks {
  Mat15 J = Mat15::Zero();
  Mat15 K = Mat15::Zero();       // K(xi); K xi = (d/dt J) xi
  Vec15 ad_star = Vec15::Zero();  // ad*_xi (J xi)
  Vec15 gravity = Vec15::Zero();  // left-trivialized grad U
  CouplingBlocks right, left, abdomen;

  // J xi' + K xi - ad* - (1/2) K^T xi + grad U, to be balanced by f.
  Vec15 lhs(const Vec15& xi, const Vec15& xi_dot) const;
};

// The 15x15 mass matrix.
Mat15 inertia_matrix(const GeneralizedState& q, const MorphologyConfig& morph);

// Directional derivative of J when R -> R exp(chi_B^), Q_i -> Q_i exp(chi_i^).
// chi uses the slot layout of xi; its translational part is ignored.
Mat15 inertia_derivative(const GeneralizedState& q, const MorphologyConfig& morph,
                         const Vec15& chi);

// Throws ConfigError if the assembled J is not positive definite.
DynamicsBlocks assemble_blocks(const GeneralizedState& q, const MorphologyConfig& morph);

// U = -g sum_i m_i e3^T x_i (NED, zero at x = 0 with all offsets horizontal).
double potential_energy(const GeneralizedState& q, const MorphologyConfig& morph);

// Total mechanical energy (1/2) xi^T J xi + U of the articulated system.
double mechanical_energy(const GeneralizedState& q, const MorphologyConfig& morph);

// Generalized force of the two wings' aerodynamic loads. Each resultant is in
// its wing frame with the moment taken about the wing root.
Vec15 aero_generalized_force(const PrescribedMotion& motion, const AeroResultant& right,
                             const AeroResultant& left, const MorphologyConfig& morph);

// Per-appendage inertial coupling sum m_i R [Omega' x p + Omega x (Omega x p)
// + 2 Omega x p' + p''], the left-hand coupling of the reduced equation.
struct CouplingForces {
  Vec3 right = Vec3::Zero();
  Vec3 left = Vec3::Zero();
  Vec3 abdomen = Vec3::Zero();
  Vec3 abdomen_joint = Vec3::Zero();  // J_A13 Omega_A' + K_A13 Omega_A
  Vec3 total() const { return right + left + abdomen; }
};
CouplingForces coupling_forces(const PrescribedMotion& motion, const MorphologyConfig& morph);

// R (Q_R F_R + Q_L F_L), inertial frame.
Vec3 aero_force_inertial(const PrescribedMotion& motion, const AeroResultant& right,
                         const AeroResultant& left);

// Solves the reduced equation for xddot.
Vec3 reduced_accel(const PrescribedMotion& motion, const AeroResultant& right,
                   const AeroResultant& left, const MorphologyConfig& morph);

// E = (1/2) m |xdot|^2 - m g e3^T x.
double energy(const Vec3& x, const Vec3& x_dot, double m, double g);
// dE/dt = m xdot . xddot - m g e3^T xdot.
double energy_rate(const Vec3& x_dot, const Vec3& x_ddot, double m, double g);

// Joint actuation recovered from the full Euler-Lagrange equation.
struct JointTorques {
  Vec3 tau_R = Vec3::Zero();  // body frame, applied by the body on the wing
  Vec3 tau_L = Vec3::Zero();
  Vec3 tau_A = Vec3::Zero();
  Vec3 tau_B = Vec3::Zero();  // external torque holding the prescribed body attitude
  double P_R = 0.0;           // tau_R . (Q_R Omega_R)
  double P_L = 0.0;
  double P_A = 0.0;
  double translational_residual = 0.0;  // |x-row residual| / (m g)
};

// Evaluates every term of the Euler-Lagrange equation at one instant. The
// residual of the translational row must be below 1e-6 of m g; otherwise the
// sample is kinematically inconsistent and std::invalid_argument is thrown.
JointTorques reconstruct_torques(const Vec3& x, const Vec3& x_dot, const Vec3& x_ddot,
                                 const PrescribedMotion& motion, const AeroResultant& right,
                                 const AeroResultant& left, const MorphologyConfig& morph);

// Least squares fit of tau = -k theta - c theta_dot + tau0.
struct SpringDamperFit {
  double k = 0.0;
  double c = 0.0;
  double tau0 = 0.0;
  double rms_residual = 0.0;
};

// Throws std::invalid_argument with fewer than 3 samples or a rank-deficient
// regressor.
SpringDamperFit fit_spring_damper(const std::vector<double>& theta,
                                  const std::vector<double>& theta_dot,
                                  const std::vector<double>& tau);

}  // namespace flapsim
