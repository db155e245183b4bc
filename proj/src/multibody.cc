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

#include "flapsim/multibody.h"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "flapsim/errors.h"

namespace flapsim {
namespace {

using Mat3x15 = Eigen::Matrix<double, 3, 15>;

const Mat3 kMirror = Vec3(1.0, -1.0, 1.0).asDiagonal();

// One appendage seen from the body.
struct Appendage {
  double m;
  const Mat3* inertia;
  const Rotation* Q;
  Vec3 mu;
  Vec3 rho;
  int slot;
};

std::array<Appendage, 3> appendages(const GeneralizedState& q,
                                    const MorphologyConfig& morph) {
  return {{{morph.m_R, &morph.I_R, &q.QR, morph.mu_R, morph.rho_R, kSlotRight},
           {morph.m_L, &morph.I_L, &q.QL, morph.mu_L, morph.rho_L, kSlotLeft},
           {morph.m_A, &morph.I_A, &q.QA, morph.mu_A, morph.rho_A, kSlotAbdomen}}};
}

void check_inertia(const char* name, double mass, const Mat3& inertia) {
  if (!std::isfinite(mass) || mass < 0.0) {
    throw ConfigError(std::string("morphology: mass of ") + name + " must be >= 0");
  }
  if (mass == 0.0) return;
  if (!inertia.allFinite() ||
      (inertia - inertia.transpose()).norm() > 1e-12 * inertia.norm()) {
    throw ConfigError(std::string("morphology: inertia of ") + name +
                      " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ConfigError(std::string("morphology: inertia of ") + name +
                      " must be positive definite");
  }
}

}  // namespace

void MorphologyConfig::mirror_left_from_right() {
  m_L = m_R;
  I_L = kMirror * I_R * kMirror;
  mu_L = kMirror * mu_R;
  rho_L = kMirror * rho_R;
}

void MorphologyConfig::validate() const {
  if (!(m_B > 0.0)) throw ConfigError("morphology: m_B must be positive");
  check_inertia("body", m_B, I_B);
  check_inertia("abdomen", m_A, I_A);
  check_inertia("right wing", m_R, I_R);
  check_inertia("left wing", m_L, I_L);
  for (const Vec3* v : {&mu_R, &mu_L, &mu_A, &rho_R, &rho_L, &rho_A}) {
    if (!v->allFinite()) throw ConfigError("morphology: offsets must be finite");
  }
  if (!(g >= 0.0) || !std::isfinite(g)) {
    throw ConfigError("morphology: g must be finite and non-negative");
  }
  try {
    aero.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

GeneralizedState GeneralizedState::from_motion(const Vec3& x, const Vec3& x_dot,
                                               const PrescribedMotion& motion) {
  GeneralizedState q;
  q.x = x;
  q.R = motion.R;
  q.QR = motion.QR;
  q.QL = motion.QL;
  q.QA = motion.QA;
  q.xi << x_dot, motion.Omega, motion.OmegaR, motion.OmegaL, motion.OmegaA;
  return q;
}

Vec15 velocity_rate(const Vec3& x_ddot, const PrescribedMotion& motion) {
  Vec15 v;
  v << x_ddot, motion.dOmega, motion.dOmegaR, motion.dOmegaL, motion.dOmegaA;
  return v;
}

Mat15 inertia_matrix(const GeneralizedState& q, const MorphologyConfig& morph) {
  Mat15 J = Mat15::Zero();
  J.block<3, 3>(kSlotX, kSlotX) = morph.m_B * Mat3::Identity();
  J.block<3, 3>(kSlotBody, kSlotBody) = morph.I_B;
  for (const Appendage& a : appendages(q, morph)) {
    if (a.m == 0.0) continue;
    const Vec3 p = a.mu + *a.Q * a.rho;
    Mat3x15 G = Mat3x15::Zero();
    G.block<3, 3>(0, kSlotX).setIdentity();
    G.block<3, 3>(0, kSlotBody) = -q.R * hat(p);
    G.block<3, 3>(0, a.slot) = -q.R * *a.Q * hat(a.rho);
    Mat3x15 H = Mat3x15::Zero();
    H.block<3, 3>(0, kSlotBody) = a.Q->transpose();
    H.block<3, 3>(0, a.slot).setIdentity();
    J += a.m * G.transpose() * G + H.transpose() * *a.inertia * H;
  }
  return J;
}

Mat15 inertia_derivative(const GeneralizedState& q, const MorphologyConfig& morph,
                         const Vec15& chi) {
  Mat15 dJ = Mat15::Zero();
  const Vec3 chi_b = chi.segment<3>(kSlotBody);
  const Mat3 r_chi_b = q.R * hat(chi_b);
  for (const Appendage& a : appendages(q, morph)) {
    if (a.m == 0.0) continue;
    const Mat3& Q = *a.Q;
    const Vec3 chi_i = chi.segment<3>(a.slot);
    const Vec3 p = a.mu + Q * a.rho;
    const Vec3 dp = Q * chi_i.cross(a.rho);
    Mat3x15 G = Mat3x15::Zero();
    G.block<3, 3>(0, kSlotX).setIdentity();
    G.block<3, 3>(0, kSlotBody) = -q.R * hat(p);
    G.block<3, 3>(0, a.slot) = -q.R * Q * hat(a.rho);
    Mat3x15 dG = Mat3x15::Zero();
    dG.block<3, 3>(0, kSlotBody) = -r_chi_b * hat(p) - q.R * hat(dp);
    dG.block<3, 3>(0, a.slot) = -(r_chi_b * Q + q.R * Q * hat(chi_i)) * hat(a.rho);
    Mat3x15 H = Mat3x15::Zero();
    H.block<3, 3>(0, kSlotBody) = Q.transpose();
    H.block<3, 3>(0, a.slot).setIdentity();
    Mat3x15 dH = Mat3x15::Zero();
    dH.block<3, 3>(0, kSlotBody) = -hat(chi_i) * Q.transpose();
    const Mat15 g_term = dG.transpose() * G;
    const Mat15 h_term = dH.transpose() * *a.inertia * H;
    dJ += a.m * (g_term + g_term.transpose()) + h_term + h_term.transpose();
  }
  return dJ;
}

DynamicsBlocks assemble_blocks(const GeneralizedState& q, const MorphologyConfig& morph) {
  DynamicsBlocks b;
  b.J = inertia_matrix(q, morph);
  // A massless appendage leaves its slot empty; definiteness is required on
  // the slots that carry mass.
  std::vector<int> active = {0, 1, 2, 3, 4, 5};
  for (const Appendage& a : appendages(q, morph)) {
    if (a.m == 0.0) continue;
    for (int i = 0; i < 3; ++i) active.push_back(a.slot + i);
  }
  const int n = static_cast<int>(active.size());
  Eigen::MatrixXd sub(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sub(i, j) = b.J(active[i], active[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("assemble_blocks: mass matrix is not positive definite");
  }
  const Vec15& xi = q.xi;
  for (int j = kSlotBody; j < 15; ++j) {
    b.K.col(j) = inertia_derivative(q, morph, Vec15::Unit(j)) * xi;
  }
  const Vec15 mom = b.J * xi;
  for (int s = kSlotBody; s < 15; s += 3) {
    b.ad_star.segment<3>(s) = mom.segment<3>(s).cross(xi.segment<3>(s));
  }

  const Vec3 down_body = q.R.transpose() * kE3;
  b.gravity.segment<3>(kSlotX) = -morph.total_mass() * morph.g * kE3;
  const Vec3 omega = xi.segment<3>(kSlotBody);
  std::array<CouplingBlocks*, 3> blocks = {&b.right, &b.left, &b.abdomen};
  int k = 0;
  for (const Appendage& a : appendages(q, morph)) {
    CouplingBlocks& c = *blocks[k++];
    if (a.m == 0.0) continue;
    const Mat3& Q = *a.Q;
    const Vec3 omega_i = xi.segment<3>(a.slot);
    const Vec3 p = a.mu + Q * a.rho;
    const Vec3 p_dot = Q * omega_i.cross(a.rho);
    b.gravity.segment<3>(kSlotBody) += -morph.g * a.m * p.cross(down_body);
    b.gravity.segment<3>(a.slot) =
        -morph.g * a.m * a.rho.cross(Q.transpose() * down_body);
    c.J12 = -a.m * q.R * hat(p);
    c.J13 = -a.m * q.R * Q * hat(a.rho);
    c.K12 = -a.m * q.R * (hat(omega) * hat(p) + hat(p_dot));
    c.K13 = -a.m * q.R * (hat(omega) * Q + Q * hat(omega_i)) * hat(a.rho);
  }
  return b;
}

Vec15 DynamicsBlocks::lhs(const Vec15& xi, const Vec15& xi_dot) const {
  return J * xi_dot + K * xi - ad_star - 0.5 * K.transpose() * xi + gravity;
}

double potential_energy(const GeneralizedState& q, const MorphologyConfig& morph) {
  double height_moment = morph.total_mass() * kE3.dot(q.x);
  for (const Appendage& a : appendages(q, morph)) {
    height_moment += a.m * kE3.dot(q.R * (a.mu + *a.Q * a.rho));
  }
  return -morph.g * height_moment;
}

double mechanical_energy(const GeneralizedState& q, const MorphologyConfig& morph) {
  return 0.5 * q.xi.dot(inertia_matrix(q, morph) * q.xi) + potential_energy(q, morph);
}

Vec15 aero_generalized_force(const PrescribedMotion& motion, const AeroResultant& right,
                             const AeroResultant& left, const MorphologyConfig& morph) {
  Vec15 f = Vec15::Zero();
  const auto add = [&](const Rotation& Q, const Vec3& mu, const AeroResultant& a,
                       int slot) {
    const Vec3 force_body = Q * a.force();
    f.segment<3>(kSlotX) += motion.R * force_body;
    f.segment<3>(kSlotBody) += mu.cross(force_body) + Q * a.moment;
    f.segment<3>(slot) += a.moment;
  };
  add(motion.QR, morph.mu_R, right, kSlotRight);
  add(motion.QL, morph.mu_L, left, kSlotLeft);
  return f;
}

CouplingForces coupling_forces(const PrescribedMotion& motion,
                               const MorphologyConfig& morph) {
  CouplingForces out;
  const Vec3& w = motion.Omega;
  const Vec3& dw = motion.dOmega;
  const auto term = [&](double m, const Rotation& Q, const Vec3& mu, const Vec3& rho,
                        const Vec3& wi, const Vec3& dwi, Vec3* joint) {
    if (m == 0.0) return Vec3(Vec3::Zero());
    const Vec3 p = mu + Q * rho;
    const Vec3 wr = wi.cross(rho);
    const Vec3 p_dot = Q * wr;
    const Vec3 p_ddot = Q * (dwi.cross(rho) + wi.cross(wr));
    if (joint) *joint = m * (motion.R * (p_ddot + w.cross(p_dot)));
    return Vec3(m * (motion.R * (dw.cross(p) + w.cross(w.cross(p)) +
                                 2.0 * w.cross(p_dot) + p_ddot)));
  };
  out.right = term(morph.m_R, motion.QR, morph.mu_R, morph.rho_R, motion.OmegaR,
                   motion.dOmegaR, nullptr);
  out.left = term(morph.m_L, motion.QL, morph.mu_L, morph.rho_L, motion.OmegaL,
                  motion.dOmegaL, nullptr);
  out.abdomen = term(morph.m_A, motion.QA, morph.mu_A, morph.rho_A, motion.OmegaA,
                     motion.dOmegaA, &out.abdomen_joint);
  return out;
}

Vec3 aero_force_inertial(const PrescribedMotion& motion, const AeroResultant& right,
                         const AeroResultant& left) {
  return motion.R * (motion.QR * right.force() + motion.QL * left.force());
}

Vec3 reduced_accel(const PrescribedMotion& motion, const AeroResultant& right,
                   const AeroResultant& left, const MorphologyConfig& morph) {
  const double m = morph.total_mass();
  return (aero_force_inertial(motion, right, left) -
          coupling_forces(motion, morph).total()) /
             m +
         morph.g * kE3;
}

double energy(const Vec3& x, const Vec3& x_dot, double m, double g) {
  return 0.5 * m * x_dot.squaredNorm() - m * g * kE3.dot(x);
}

double energy_rate(const Vec3& x_dot, const Vec3& x_ddot, double m, double g) {
  return m * x_dot.dot(x_ddot) - m * g * kE3.dot(x_dot);
}

JointTorques reconstruct_torques(const Vec3& x, const Vec3& x_dot, const Vec3& x_ddot,
                                 const PrescribedMotion& motion, const AeroResultant& right,
                                 const AeroResultant& left, const MorphologyConfig& morph) {
  const GeneralizedState q = GeneralizedState::from_motion(x, x_dot, motion);
  const DynamicsBlocks b = assemble_blocks(q, morph);
  const Vec15 residual = b.lhs(q.xi, velocity_rate(x_ddot, motion)) -
                         aero_generalized_force(motion, right, left, morph);
  JointTorques out;
  const double weight = morph.total_mass() * morph.g;
  out.translational_residual =
      residual.segment<3>(kSlotX).norm() / (weight > 0.0 ? weight : 1.0);
  if (out.translational_residual > 1e-6) {
    throw std::invalid_argument(
        "reconstruct_torques: translational residual " +
        std::to_string(out.translational_residual) +
        " exceeds 1e-6; acceleration is inconsistent with the reduced dynamics");
  }
  out.tau_R = motion.QR * residual.segment<3>(kSlotRight);
  out.tau_L = motion.QL * residual.segment<3>(kSlotLeft);
  out.tau_A = motion.QA * residual.segment<3>(kSlotAbdomen);
  out.tau_B = residual.segment<3>(kSlotBody) + out.tau_R + out.tau_L + out.tau_A;
  out.P_R = out.tau_R.dot(motion.QR * motion.OmegaR);
  out.P_L = out.tau_L.dot(motion.QL * motion.OmegaL);
  out.P_A = out.tau_A.dot(motion.QA * motion.OmegaA);
  return out;
}

SpringDamperFit fit_spring_damper(const std::vector<double>& theta,
                                  const std::vector<double>& theta_dot,
                                  const std::vector<double>& tau) {
  const std::size_t n = theta.size();
  if (theta_dot.size() != n || tau.size() != n) {
    throw std::invalid_argument("fit_spring_damper: sample vectors differ in length");
  }
  if (n < 3) throw std::invalid_argument("fit_spring_damper: need at least 3 samples");
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = -theta[i];
    A(i, 1) = -theta_dot[i];
    A(i, 2) = 1.0;
    b(i) = tau[i];
  }
  // Column equilibration keeps the rank test meaningful across unit scales.
  Eigen::Vector3d scale;
  for (int j = 0; j < 3; ++j) {
    scale(j) = A.col(j).norm();
    if (scale(j) == 0.0) {
      throw std::invalid_argument("fit_spring_damper: regressor is rank deficient");
    }
    A.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw std::invalid_argument("fit_spring_damper: regressor is rank deficient");
  }
  const Eigen::Vector3d sol = qr.solve(b).cwiseQuotient(scale);
  const Eigen::VectorXd r = A * sol.cwiseProduct(scale) - b;
  return {sol(0), sol(1), sol(2), std::sqrt(r.squaredNorm() / static_cast<double>(n))};
}

}  // namespace flapsim
