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

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "flapsim/errors.h"
#include "flapsim/simulate.h"
#include "test_fixtures.h"

namespace flapsim {
namespace {

const Mat3 kMirror = Vec3(1, -1, 1).asDiagonal();

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

GeneralizedState random_state(std::mt19937_64& rng) {
  GeneralizedState q;
  q.x = random_vec(rng, 1.0);
  q.R = expm_so3(random_vec(rng, 3.0));
  q.QR = expm_so3(random_vec(rng, 3.0));
  q.QL = expm_so3(random_vec(rng, 3.0));
  q.QA = expm_so3(random_vec(rng, 3.0));
  for (int i = 0; i < 15; ++i) q.xi(i) = std::uniform_real_distribution<double>(-5, 5)(rng);
  return q;
}

// World-frame pose of one component along the flow
// R(t) = R exp(t Omega^), Q_i(t) = Q_i exp(t Omega_i^), x(t) = x + t xdot.
struct Pose {
  Vec3 position;
  Rotation attitude;
};

Pose component_pose(const GeneralizedState& q, const MorphologyConfig& m, int which,
                    double t) {
  const Vec3 x = q.x + t * q.xi.segment<3>(kSlotX);
  const Rotation R = q.R * expm_so3(t * q.xi.segment<3>(kSlotBody));
  if (which == 0) return {x, R};
  const Rotation* Q[] = {nullptr, &q.QR, &q.QL, &q.QA};
  const int slot[] = {0, kSlotRight, kSlotLeft, kSlotAbdomen};
  const Vec3 mu[] = {Vec3::Zero(), m.mu_R, m.mu_L, m.mu_A};
  const Vec3 rho[] = {Vec3::Zero(), m.rho_R, m.rho_L, m.rho_A};
  const Rotation Qt = *Q[which] * expm_so3(t * q.xi.segment<3>(slot[which]));
  return {x + R * (mu[which] + Qt * rho[which]), R * Qt};
}

// Kinetic energy from five-point differences of component poses; shares no
// code with the mass matrix assembly.
double kinetic_energy_oracle(const GeneralizedState& q, const MorphologyConfig& m) {
  const double masses[] = {m.m_B, m.m_R, m.m_L, m.m_A};
  const Mat3* inertias[] = {&m.I_B, &m.I_R, &m.I_L, &m.I_A};
  const double h = 1e-3;
  double ke = 0.0;
  for (int c = 0; c < 4; ++c) {
    const auto d = [&](double s) { return component_pose(q, m, c, s); };
    const Pose p2 = d(2 * h), p1 = d(h), m1 = d(-h), m2 = d(-2 * h);
    const Vec3 v = (-p2.position + 8 * p1.position - 8 * m1.position + m2.position) / (12 * h);
    const Mat3 wdot = (-p2.attitude + 8 * p1.attitude - 8 * m1.attitude + m2.attitude) / (12 * h);
    const Vec3 w = vee(component_pose(q, m, c, 0).attitude.transpose() * wdot);
    ke += 0.5 * (masses[c] * v.squaredNorm() + w.dot(*inertias[c] * w));
  }
  return ke;
}

TEST(MorphologyTest, DefaultsValidateAndMirror) {
  MorphologyConfig m;
  EXPECT_NO_THROW(m.validate());
  EXPECT_NEAR(m.total_mass(), 5.0e-4, 1e-16);
  MorphologyConfig mirrored = m;
  mirrored.mirror_left_from_right();
  EXPECT_TRUE(mirrored.mu_L.isApprox(m.mu_L));
  EXPECT_TRUE(mirrored.rho_L.isApprox(m.rho_L));
  m.I_A(0, 1) = 1e-9;
  EXPECT_THROW(m.validate(), ConfigError);
  m = MorphologyConfig();
  m.I_R = -m.I_R;
  EXPECT_THROW(m.validate(), ConfigError);
  m = MorphologyConfig();
  m.m_B = 0.0;
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(InertiaTest, QuadraticFormMatchesKineticEnergyOracle) {
  std::mt19937_64 rng(21);
  MorphologyConfig m;
  m.I_R << 3.9e-9, 2e-10, -1e-10, 2e-10, 2.1e-9, 3e-10, -1e-10, 3e-10, 6.0e-9;
  m.mirror_left_from_right();
  m.rho_A = Vec3(-0.012, 0.001, 0.002);
  for (int i = 0; i < 100; ++i) {
    const GeneralizedState q = random_state(rng);
    const double ke = 0.5 * q.xi.dot(inertia_matrix(q, m) * q.xi);
    const double oracle = kinetic_energy_oracle(q, m);
    EXPECT_LT(std::abs(ke - oracle) / oracle, 1e-10);
  }
}

TEST(InertiaTest, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(22);
  const MorphologyConfig m;
  for (int i = 0; i < 1000; ++i) {
    const Mat15 J = inertia_matrix(random_state(rng), m);
    EXPECT_LT((J - J.transpose()).norm(), 1e-12 * J.norm());
    Eigen::SelfAdjointEigenSolver<Mat15> eig(J);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(InertiaTest, MasslessAppendagesLeaveSingleBody) {
  MorphologyConfig m;
  m.m_R = m.m_L = m.m_A = 0.0;
  std::mt19937_64 rng(23);
  const GeneralizedState q = random_state(rng);
  Mat15 expected = Mat15::Zero();
  expected.block<3, 3>(0, 0) = m.m_B * Mat3::Identity();
  expected.block<3, 3>(3, 3) = m.I_B;
  EXPECT_EQ(inertia_matrix(q, m), expected);
  EXPECT_NO_THROW(assemble_blocks(q, m));
}

TEST(InertiaTest, IndefiniteInertiaIsAConfigurationError) {
  MorphologyConfig m;
  m.I_B(0, 0) = -1e-9;
  std::mt19937_64 rng(28);
  EXPECT_THROW(assemble_blocks(random_state(rng), m), ConfigError);
}

TEST(InertiaTest, DirectionalDerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(24);
  const MorphologyConfig m;
  for (int i = 0; i < 20; ++i) {
    const GeneralizedState q = random_state(rng);
    Vec15 chi = Vec15::Zero();
    chi.tail<12>() = Eigen::Matrix<double, 12, 1>::Random();
    const auto moved = [&](double s) {
      GeneralizedState p = q;
      p.R = q.R * expm_so3(s * chi.segment<3>(kSlotBody));
      p.QR = q.QR * expm_so3(s * chi.segment<3>(kSlotRight));
      p.QL = q.QL * expm_so3(s * chi.segment<3>(kSlotLeft));
      p.QA = q.QA * expm_so3(s * chi.segment<3>(kSlotAbdomen));
      return inertia_matrix(p, m);
    };
    const double h = 1e-4;
    const Mat15 fd = (-moved(2 * h) + 8 * moved(h) - 8 * moved(-h) + moved(-2 * h)) / (12 * h);
    const Mat15 an = inertia_derivative(q, m, chi);
    EXPECT_LT((an - fd).norm(), 1e-9 * an.norm());
  }
}

TEST(InertiaTest, CoriolisMatrixGivesRateOfMassMatrix) {
  std::mt19937_64 rng(25);
  const MorphologyConfig m;
  const GeneralizedState q = random_state(rng);
  const DynamicsBlocks b = assemble_blocks(q, m);
  const auto along = [&](double s) {
    GeneralizedState p = q;
    p.R = q.R * expm_so3(s * q.xi.segment<3>(kSlotBody));
    p.QR = q.QR * expm_so3(s * q.xi.segment<3>(kSlotRight));
    p.QL = q.QL * expm_so3(s * q.xi.segment<3>(kSlotLeft));
    p.QA = q.QA * expm_so3(s * q.xi.segment<3>(kSlotAbdomen));
    return inertia_matrix(p, m);
  };
  const double h = 1e-4;
  const Mat15 jdot = (-along(2 * h) + 8 * along(h) - 8 * along(-h) + along(-2 * h)) / (12 * h);
  const Vec15 expected = jdot * q.xi;
  EXPECT_LT((b.K * q.xi - expected).norm(), 1e-9 * expected.norm());
  // Translational coupling blocks are the derivative of the J_x blocks.
  EXPECT_LT((b.right.J12 - b.J.block<3, 3>(0, kSlotBody) + b.left.J12 + b.abdomen.J12).norm(),
            1e-12 * b.right.J12.norm() + 1e-30);
  EXPECT_LT((b.right.J13 - b.J.block<3, 3>(0, kSlotRight)).norm(), 1e-20);
}

// Prescribed motion together with a smooth translation x(t).
struct Flow {
  KinematicsParams k = testing::table1_undulating();
  Vec3 x(double t) const { return Vec3(0.01 * std::sin(9 * t), 0.02 * t, -0.03 * std::cos(5 * t)); }
  Vec3 v(double t) const { return Vec3(0.09 * std::cos(9 * t), 0.02, 0.15 * std::sin(5 * t)); }
  Vec3 a(double t) const { return Vec3(-0.81 * std::sin(9 * t), 0.0, 0.75 * std::cos(5 * t)); }
  GeneralizedState state(double t) const {
    return GeneralizedState::from_motion(x(t), v(t), prescribed_motion_at(t, k));
  }
};

TEST(EulerLagrangeTest, PowerBalanceAlongPrescribedFlow) {
  const MorphologyConfig m;
  const Flow flow;
  for (double t : {0.003, 0.021, 0.047, 0.069}) {
    const GeneralizedState q = flow.state(t);
    const DynamicsBlocks b = assemble_blocks(q, m);
    const Vec15 xi_dot = velocity_rate(flow.a(t), prescribed_motion_at(t, flow.k));
    const double power = q.xi.dot(b.lhs(q.xi, xi_dot));
    const double h = 1e-5;
    const auto e = [&](double s) { return mechanical_energy(flow.state(s), m); };
    const double de = (-e(t + 2 * h) + 8 * e(t + h) - 8 * e(t - h) + e(t - 2 * h)) / (12 * h);
    EXPECT_LT(std::abs(power - de) / std::abs(de), 1e-5) << "t=" << t;
  }
}

TEST(EulerLagrangeTest, AdjointTermIsPowerless) {
  std::mt19937_64 rng(26);
  const MorphologyConfig m;
  const GeneralizedState q = random_state(rng);
  const DynamicsBlocks b = assemble_blocks(q, m);
  EXPECT_LT(std::abs(q.xi.dot(b.ad_star)), 1e-12 * b.ad_star.norm() * q.xi.norm());
  EXPECT_TRUE(b.ad_star.head<3>().isZero(0.0));
}

TEST(EulerLagrangeTest, GravityIsGradientOfPotential) {
  std::mt19937_64 rng(27);
  const MorphologyConfig m;
  const GeneralizedState q = random_state(rng);
  const DynamicsBlocks b = assemble_blocks(q, m);
  Vec15 chi = Vec15::Random();
  const auto u = [&](double s) {
    GeneralizedState p = q;
    p.x = q.x + s * chi.head<3>();
    p.R = q.R * expm_so3(s * chi.segment<3>(kSlotBody));
    p.QR = q.QR * expm_so3(s * chi.segment<3>(kSlotRight));
    p.QL = q.QL * expm_so3(s * chi.segment<3>(kSlotLeft));
    p.QA = q.QA * expm_so3(s * chi.segment<3>(kSlotAbdomen));
    return potential_energy(p, m);
  };
  const double h = 1e-5;
  const double fd = (u(h) - u(-h)) / (2 * h);
  EXPECT_NEAR(b.gravity.dot(chi), fd, 1e-9 * std::abs(fd));
}

TEST(ReducedAccelTest, FreeFallAndStaticBalance) {
  MorphologyConfig m;
  const PrescribedMotion rest = prescribed_motion_at(0.0, KinematicsParams{});
  EXPECT_LT((reduced_accel(rest, {}, {}, m) - m.g * kE3).norm(), 1e-15);
  AeroResultant up;
  up.lift = -0.5 * m.total_mass() * m.g * kE3;  // wing frames coincide with the body
  EXPECT_LT(reduced_accel(rest, up, up, m).norm(), 1e-15);
}

TEST(ReducedAccelTest, MatchesTranslationalRowOfFullEquation) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  for (double t : {0.0, 0.017, 0.052}) {
    const PrescribedMotion motion = prescribed_motion_at(t, k);
    const Vec3 v(-0.2, 0.01, 0.03);
    const AeroResultant right =
        blade_element_forces(right_wing_state(motion, v, m), m.aero);
    const AeroResultant left = blade_element_forces(left_wing_state(motion, v, m), m.aero);
    const GeneralizedState q = GeneralizedState::from_motion(Vec3::Zero(), v, motion);
    const DynamicsBlocks b = assemble_blocks(q, m);
    const Vec15 f = aero_generalized_force(motion, right, left, m);
    const Vec15 lhs0 = b.lhs(q.xi, velocity_rate(Vec3::Zero(), motion));
    const Vec3 oracle = (f.head<3>() - lhs0.head<3>()) / m.total_mass();
    const Vec3 a = reduced_accel(motion, right, left, m);
    EXPECT_LT((a - oracle).norm(), 1e-12 * oracle.norm());
    // The block form of the coupling terms agrees with the vector form.
    Vec3 blocks = Vec3::Zero();
    for (const auto* c : {&b.right, &b.left, &b.abdomen}) {
      blocks += c->J12 * motion.dOmega + c->K12 * motion.Omega;
    }
    blocks += b.right.J13 * motion.dOmegaR + b.right.K13 * motion.OmegaR;
    blocks += b.left.J13 * motion.dOmegaL + b.left.K13 * motion.OmegaL;
    const Vec3 abdomen13 = b.abdomen.J13 * motion.dOmegaA + b.abdomen.K13 * motion.OmegaA;
    blocks += abdomen13;
    const CouplingForces c = coupling_forces(motion, m);
    EXPECT_LT((blocks - c.total()).norm(), 1e-12 * c.total().norm());
    EXPECT_LT((abdomen13 - c.abdomen_joint).norm(), 1e-12 * c.abdomen_joint.norm());
  }
}

TEST(ReducedAccelTest, MirroredVelocityGivesMirroredAcceleration) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  const Vec3 v(-0.2, 0.07, 0.03);
  for (double t : {0.004, 0.033, 0.061}) {
    const Vec3 a = evaluate_model(t, v, k, m).x_ddot;
    const Vec3 b = evaluate_model(t, kMirror * v, k, m).x_ddot;
    EXPECT_LT((b - kMirror * a).norm(), 1e-12 * a.norm());
  }
}

TEST(EnergyTest, DefinitionAndRate) {
  EXPECT_EQ(energy(Vec3::Zero(), Vec3::Zero(), 1.0, 9.81), 0.0);
  EXPECT_NEAR(energy(-2.0 * kE3, Vec3::Zero(), 0.5, 9.81), 0.5 * 9.81 * 2.0, 1e-15);
  const Flow flow;
  const double m = 5e-4, g = 9.81, t = 0.02, h = 1e-5;
  const double fd = (energy(flow.x(t + h), flow.v(t + h), m, g) -
                     energy(flow.x(t - h), flow.v(t - h), m, g)) / (2 * h);
  EXPECT_NEAR(energy_rate(flow.v(t), flow.a(t), m, g), fd, 1e-6 * std::abs(fd));
}

TEST(TorqueTest, StaticConfigurationNeedsNoTorque) {
  MorphologyConfig m;
  m.g = 0.0;
  const PrescribedMotion rest = prescribed_motion_at(0.0, KinematicsParams{});
  const JointTorques tq =
      reconstruct_torques(Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), rest, {}, {}, m);
  EXPECT_LT(tq.tau_R.norm() + tq.tau_L.norm() + tq.tau_A.norm() + tq.tau_B.norm(), 1e-20);
}

TEST(TorqueTest, MasslessAbdomenCarriesNoTorque) {
  MorphologyConfig m;
  m.m_A = 0.0;
  const KinematicsParams k = testing::table1_undulating();
  for (double t : {0.01, 0.04}) {
    const PrescribedMotion motion = prescribed_motion_at(t, k);
    const Vec3 v(-0.2, 0.0, 0.02);
    const ModelEvaluation e = evaluate_model(t, v, k, m);
    const JointTorques tq =
        reconstruct_torques(Vec3::Zero(), v, e.x_ddot, motion, e.right, e.left, m);
    EXPECT_EQ(tq.tau_A.norm(), 0.0);
    EXPECT_GT(tq.tau_R.norm(), 1e-8);
  }
}

TEST(TorqueTest, RejectsInconsistentAcceleration) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  const PrescribedMotion motion = prescribed_motion_at(0.01, k);
  EXPECT_THROW(reconstruct_torques(Vec3::Zero(), Vec3::Zero(), Vec3(1, 0, 0), motion, {}, {}, m),
               std::invalid_argument);
}

TEST(SpringDamperTest, RecoversSyntheticCoefficients) {
  std::vector<double> th, thd, tau;
  for (int i = 0; i < 200; ++i) {
    const double t = i * 0.0005;
    th.push_back(0.2 * std::cos(73 * t + 1.4) + 0.47);
    thd.push_back(-0.2 * 73 * std::sin(73 * t + 1.4));
    tau.push_back(-1e-4 * th.back() - 1e-6 * thd.back() + 1e-5);
  }
  const SpringDamperFit fit = fit_spring_damper(th, thd, tau);
  EXPECT_NEAR(fit.k, 1e-4, 1e-12);
  EXPECT_NEAR(fit.c, 1e-6, 1e-12);
  EXPECT_NEAR(fit.tau0, 1e-5, 1e-12);
  EXPECT_LT(fit.rms_residual, 1e-16);
}

TEST(SpringDamperTest, RejectsUnidentifiableFits) {
  EXPECT_THROW(fit_spring_damper({0.1, 0.2, 0.3, 0.4}, {0, 0, 0, 0}, {1, 2, 3, 4}),
               std::invalid_argument);
  EXPECT_THROW(fit_spring_damper({0.1, 0.2}, {1, 2}, {1, 2}), std::invalid_argument);
  EXPECT_THROW(fit_spring_damper({0.3, 0.3, 0.3}, {1, 2, 3}, {1, 2, 3}),
               std::invalid_argument);
}

}  // namespace
}  // namespace flapsim
