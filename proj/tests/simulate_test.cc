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
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "flapsim/errors.h"
#include "test_fixtures.h"

namespace flapsim {
namespace {

MorphologyConfig inert_morphology() {
  MorphologyConfig m;
  m.m_R = m.m_L = m.m_A = 0.0;
  m.aero.enabled = false;
  return m;
}

TEST(SimConfigTest, Validate) {
  SimConfig s;
  EXPECT_NO_THROW(s.validate());
  s.steps_per_period = 99;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SimConfig();
  s.periods = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Rk4Test, HarmonicOscillatorIsFourthOrder) {
  using V2 = Eigen::Vector2d;
  const double k = 4.0;  // x'' = -k x, omega = 2
  const auto rhs = [&](double, const V2& y) { return V2(y(1), -k * y(0)); };
  const double t_end = 3.0;
  double previous = 0.0;
  for (int n : {100, 200, 400, 800}) {
    V2 y(1.0, 0.0);
    const double h = t_end / n;
    for (int i = 0; i < n; ++i) y = rk4_step(rhs, i * h, y, h);
    const V2 exact(std::cos(2.0 * t_end), -2.0 * std::sin(2.0 * t_end));
    const double err = (y - exact).norm();
    if (previous > 0.0) {
      EXPECT_NEAR(std::log2(previous / err), 4.0, 0.1) << "n=" << n;
    }
    previous = err;
  }
}

TEST(IntegrateTest, ConstantAccelerationIsExact) {
  const MorphologyConfig m = inert_morphology();
  const KinematicsParams k = testing::table1_undulating();
  SimConfig s;
  s.steps_per_period = 200;
  s.periods = 2;
  const Vec3 x0(0.1, -0.2, 0.3), v0(0.5, 0.1, -1.0);
  const Trajectory tr = integrate(x0, v0, k, m, s);
  for (const TrajectorySample& p : tr.samples) {
    const Vec3 exact = x0 + v0 * p.t + 0.5 * m.g * p.t * p.t * kE3;
    EXPECT_LT((p.x - exact).norm(), 1e-14);
  }
}

TEST(IntegrateTest, ConservativeEnergyDrift) {
  const MorphologyConfig m = inert_morphology();
  const KinematicsParams k = testing::table1_undulating();
  SimConfig s;
  const Vec3 v0(0.2, -0.1, -0.4);
  const Trajectory tr = integrate(Vec3::Zero(), v0, k, m, s);
  const double e0 = tr.samples.front().E;
  double drift = 0.0;
  for (const TrajectorySample& p : tr.samples) drift = std::max(drift, std::abs(p.E - e0));
  EXPECT_LT(drift / std::abs(e0), 1e-8);
}

TEST(IntegrateTest, RowCountAndStrideDoNotChangeDynamics) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  SimConfig a;
  a.steps_per_period = 200;
  a.periods = 3;
  SimConfig b = a;
  b.record_stride = 7;
  const Trajectory ta = integrate(Vec3::Zero(), testing::table1_undulating_velocity(), k, m, a);
  const Trajectory tb = integrate(Vec3::Zero(), testing::table1_undulating_velocity(), k, m, b);
  EXPECT_EQ(ta.samples.size(), 3u * 200u + 1u);
  EXPECT_EQ(tb.samples.size(), 3u * 200u / 7u + 1u);
  EXPECT_EQ(ta.final_x, tb.final_x);
  EXPECT_EQ(ta.final_x_dot, tb.final_x_dot);
  SimConfig c = a;
  c.record_stride = 5;
  EXPECT_EQ(integrate(Vec3::Zero(), Vec3::Zero(), k, m, c).samples.size(), 121u);
}

TEST(IntegrateTest, Deterministic) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  SimConfig s;
  s.steps_per_period = 200;
  std::ostringstream a, b;
  integrate(Vec3::Zero(), testing::table1_undulating_velocity(), k, m, s).write_csv(a);
  integrate(Vec3::Zero(), testing::table1_undulating_velocity(), k, m, s).write_csv(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(IntegrateTest, CsvHeaderMatchesRows) {
  const MorphologyConfig m;
  SimConfig s;
  s.steps_per_period = 100;
  s.record_stride = 50;
  std::ostringstream out;
  integrate(Vec3::Zero(), Vec3::Zero(), testing::table1_undulating(), m, s).write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  const auto commas = [](const std::string& l) { return std::count(l.begin(), l.end(), ','); };
  const long columns = commas(line) + 1;
  EXPECT_EQ(columns, static_cast<long>(Trajectory::csv_header().size()));
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(commas(line) + 1, columns);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

// Inertial coupling only: the forcing is smooth in time.
TEST(IntegrateTest, StepHalvingWithoutAeroIsFourthOrder) {
  MorphologyConfig m;
  m.aero.enabled = false;
  const KinematicsParams k = testing::table1_undulating();
  const Vec3 v0 = testing::table1_undulating_velocity();
  const Vec3 reference = propagate_period(v0, k, m, 3200).x_T;
  const double e1 = (propagate_period(v0, k, m, 100).x_T - reference).norm();
  const double e2 = (propagate_period(v0, k, m, 200).x_T - reference).norm();
  const double e3 = (propagate_period(v0, k, m, 400).x_T - reference).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.1);
  EXPECT_NEAR(std::log2(e2 / e3), 4.0, 0.1);
}

// With wing loads the sign-split lift makes the force only C1 in time (a
// flow sign change sweeping in from the tip), so the observed order is lower.
TEST(IntegrateTest, StepHalvingWithAeroConverges) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  const Vec3 v0 = testing::table1_undulating_velocity();
  const Vec3 reference = propagate_period(v0, k, m, 6400).x_T;
  const double e1 = (propagate_period(v0, k, m, 200).x_T - reference).norm();
  const double e3 = (propagate_period(v0, k, m, 800).x_T - reference).norm();
  EXPECT_LT(e3, 0.1 * e1);
  EXPECT_LT(e3, 1e-7);
}

TEST(PeriodicityTest, BallisticResidualAndTranslationInvariance) {
  const MorphologyConfig m = inert_morphology();
  const KinematicsParams k = testing::table1_undulating();
  SimConfig s;
  const PeriodicityResidual r = periodicity_residual(k, Vec3::Zero(), m, s);
  const double T = k.period();
  EXPECT_NEAR(r.position, 0.5 * m.g * T * T, 1e-14);
  EXPECT_NEAR(r.velocity, m.g * T, 1e-13);

  const MorphologyConfig full;
  s.steps_per_period = 200;
  const Vec3 v0 = testing::table1_undulating_velocity();
  const Trajectory a = integrate(Vec3::Zero(), v0, k, full, s);
  const Trajectory b = integrate(Vec3(3.0, -1.0, 2.0), v0, k, full, s);
  EXPECT_EQ(a.final_x_dot, b.final_x_dot);
  EXPECT_LT((b.final_x - Vec3(3.0, -1.0, 2.0) - a.final_x).norm(), 1e-14);
}

TEST(PeriodicityTest, RejectsNonFiniteState) {
  const MorphologyConfig m;
  SimConfig s;
  s.steps_per_period = 100;
  EXPECT_THROW(integrate(Vec3::Zero(), Vec3(NAN, 0, 0), testing::table1_undulating(), m, s),
               DivergenceError);
}

// Work done by the joints, the attitude-holding torque and the wing loads
// accounts for the change of total mechanical energy over one period.
TEST(WorkEnergyTest, JointPowerBalancesMechanicalEnergy) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  SimConfig s;
  s.steps_per_period = 1000;
  s.record_torques = true;
  const Trajectory tr = integrate(Vec3::Zero(), testing::table1_undulating_velocity(), k, m, s);
  std::vector<double> power;
  double input = 0.0;
  for (const TrajectorySample& p : tr.samples) {
    const ModelEvaluation e = evaluate_model(p.t, p.x_dot, k, m);
    const GeneralizedState q = GeneralizedState::from_motion(p.x, p.x_dot, e.motion);
    const JointTorques& tq = p.torques;
    const Vec3 r_body = tq.tau_B - tq.tau_R - tq.tau_L - tq.tau_A;
    const double aero = q.xi.dot(aero_generalized_force(e.motion, e.right, e.left, m));
    power.push_back(tq.P_R + tq.P_L + tq.P_A + e.motion.Omega.dot(r_body) + aero);
    input += std::abs(tq.P_R) + std::abs(tq.P_L) + std::abs(tq.P_A);
  }
  // Simpson's rule over the even number of steps.
  const double h = tr.step;
  double work = power.front() + power.back();
  for (std::size_t i = 1; i + 1 < power.size(); ++i) work += (i % 2 ? 4.0 : 2.0) * power[i];
  work *= h / 3.0;
  const auto mech = [&](const TrajectorySample& p) {
    const PrescribedMotion motion = prescribed_motion_at(p.t, k);
    return mechanical_energy(GeneralizedState::from_motion(p.x, p.x_dot, motion), m);
  };
  const double delta = mech(tr.samples.back()) - mech(tr.samples.front());
  const double scale = input * h;  // total absolute joint work
  EXPECT_LT(std::abs(work - delta) / scale, 1e-4);
}

TEST(ReferenceOrbitTest, InterpolatesAndWraps) {
  const MorphologyConfig m;
  const KinematicsParams k = testing::table1_undulating();
  const ReferenceOrbit orbit(k, m, testing::table1_undulating_velocity(), 200);
  const Trajectory& tr = orbit.trajectory();
  const double T = orbit.period();
  for (int i : {0, 17, 133}) {
    EXPECT_LT((orbit.position(tr.samples[i].t) - tr.samples[i].x).norm(), 1e-15);
    EXPECT_LT((orbit.velocity(tr.samples[i].t + T) - tr.samples[i].x_dot).norm(), 1e-12);
  }
  // Off-grid against a smooth case where the integration error is negligible.
  MorphologyConfig smooth;
  smooth.aero.enabled = false;
  const ReferenceOrbit coarse(k, smooth, orbit.initial_velocity(), 200);
  SimConfig s;
  s.steps_per_period = 400;
  const Trajectory fine = integrate(Vec3::Zero(), orbit.initial_velocity(), k, smooth, s);
  for (int i : {1, 91, 301}) {
    const TrajectorySample& p = fine.samples[i];
    EXPECT_LT((coarse.position(p.t) - p.x).norm(), 1e-10);
    EXPECT_LT((coarse.velocity(p.t) - p.x_dot).norm(), 1e-7);
  }
}

}  // namespace
}  // namespace flapsim
