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

#include "flapsim/control.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flapsim/errors.h"
#include "flapsim/util.h"
#include "orbit_fixtures.h"

namespace flapsim {
namespace {

constexpr double kPi = std::numbers::pi;

// Table with prescribed mean slopes S(c, p) (rows f_a1, f_a2, f_a3).
SensitivityTable synthetic_table(const Eigen::Matrix<double, 3, 4>& s) {
  SensitivityTable t;
  for (int p = 0; p < kControlParameterCount; ++p) {
    for (int c = 0; c < 3; ++c) t.sweeps[p].slope_mean[c] = s(c, p);
  }
  return t;
}

Eigen::Matrix<double, 3, 4> example_slopes() {
  Eigen::Matrix<double, 3, 4> s;
  s << -1.1e-3, 0.0, -4.0e-3, 1.3e-3,  //
      0.0, -2.2e-3, 0.0, 0.0,          //
      -1.2e-2, 0.0, 1.7e-3, 1.3e-4;
  return s;
}

const BranchSigns kMean{{0, 0, 0}};

TEST(SignSplitMeanTest, PiecewiseLinearCrossings) {
  const SignSplitMean m = sign_split_mean({0.0, 1.0, 2.0}, {1.0, -1.0, 1.0});
  ASSERT_TRUE(m.positive && m.negative);
  EXPECT_DOUBLE_EQ(m.positive_duration, 1.0);
  EXPECT_DOUBLE_EQ(m.negative_duration, 1.0);
  EXPECT_DOUBLE_EQ(*m.positive, 0.5);
  EXPECT_DOUBLE_EQ(*m.negative, -0.5);
  EXPECT_DOUBLE_EQ(m.mean, 0.0);
}

TEST(SignSplitMeanTest, SineHalves) {
  std::vector<double> t, f;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    t.push_back(2.0 * kPi * i / n);
    f.push_back(std::sin(t.back()));
  }
  const SignSplitMean m = sign_split_mean(t, f);
  EXPECT_NEAR(*m.positive, 2.0 / kPi, 1e-6);
  EXPECT_NEAR(*m.negative, -2.0 / kPi, 1e-6);
  EXPECT_NEAR(m.mean, 0.0, 1e-15);
}

TEST(SignSplitMeanTest, OneSignedAndZero) {
  const SignSplitMean p = sign_split_mean({0.0, 1.0, 3.0}, {2.0, 2.0, 2.0});
  EXPECT_DOUBLE_EQ(*p.positive, 2.0);
  EXPECT_FALSE(p.negative);
  const SignSplitMean z = sign_split_mean({0.0, 1.0}, {0.0, 0.0});
  EXPECT_FALSE(z.positive);
  EXPECT_FALSE(z.negative);
  EXPECT_EQ(z.mean, 0.0);
  EXPECT_THROW(sign_split_mean({0.0}, {1.0}), std::invalid_argument);
}

TEST(PidTest, PublishedGainRoots) {
  const auto r = characteristic_roots(Gains{});
  const std::complex<double> expected[3] = {{-7.8, -19.0}, {-7.8, 19.0}, {-0.003, 0.0}};
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(std::abs(r[i] - expected[i]), 0.02 * std::abs(expected[i])) << r[i];
  }
  // The roots reproduce the polynomial.
  const Gains g;
  for (const auto& s : r) {
    EXPECT_LT(std::abs(s * s * s + g.K_D * s * s + g.K_P * s + g.K_I), 1e-9);
  }
}

TEST(PidTest, DemandIsLinear) {
  const Gains g;
  const Vec3 e(0.1, -0.2, 0.3), ed(1.0, 0.5, -0.5), ei(0.01, 0.0, 0.02);
  const Vec3 a = pid_demand(e, ed, ei, g, 2e-3);
  EXPECT_LT((pid_demand(2.0 * e, 2.0 * ed, 2.0 * ei, g, 2e-3) - 2.0 * a).norm(), 1e-15);
  EXPECT_EQ(pid_demand(Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), g, 1.0), Vec3::Zero());
  EXPECT_NEAR(pid_demand(Vec3::UnitX(), Vec3::Zero(), Vec3::Zero(), g, 2.0)(0), 2.0 * g.K_P, 1e-12);
  Gains bad;
  bad.K_I = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(AllocationTest, ZeroDemandGivesZeroInput) {
  const Allocation a = allocate(Vec3::Zero(), synthetic_table(example_slopes()), kMean, true);
  ASSERT_TRUE(a.ok);
  EXPECT_EQ(a.params.dphi_m_s, 0.0);
  EXPECT_EQ(a.params.dphi_m_k, 0.0);
  EXPECT_EQ(a.params.dtheta_0, 0.0);
  EXPECT_EQ(a.params.dtheta_A_m, 0.0);
}

TEST(AllocationTest, MinimumNormRightInverse) {
  const SensitivityTable t = synthetic_table(example_slopes());
  const Mat23 S = longitudinal_sensitivity(t, kMean);
  const Eigen::Vector2d d(3e-4, -7e-4);
  const Vec3 u = *minimum_norm_solution(S, d);
  EXPECT_LT((S * u - d).norm(), 1e-12 * d.norm() + 1e-18);
  // Any other solution differs by a null-space vector and is longer.
  const Vec3 null = S.row(0).transpose().cross(S.row(1).transpose()).normalized();
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec3 alt = u + rng.uniform(-1.0, 1.0) * null;
    EXPECT_LT((S * alt - d).norm(), 1e-12);
    EXPECT_LE(u.norm(), alt.norm());
  }
  EXPECT_LT(std::abs(u.dot(null)), 1e-12 * u.norm());
}

TEST(AllocationTest, TwoByTwoWithoutAbdomen) {
  const SensitivityTable t = synthetic_table(example_slopes());
  const Vec3 demand(3e-4, 1e-4, -7e-4);
  const Allocation a = allocate(demand, t, kMean, false);
  ASSERT_TRUE(a.ok);
  EXPECT_EQ(a.params.dtheta_A_m, 0.0);
  const Mat23 S = longitudinal_sensitivity(t, kMean);
  const Eigen::Vector2d u(a.params.dphi_m_s, a.params.dtheta_0);
  EXPECT_LT((S.leftCols<2>() * u - Eigen::Vector2d(demand(0), demand(2))).norm(), 1e-12);
  EXPECT_NEAR(a.params.dphi_m_k, demand(1) / -2.2e-3, 1e-15);
}

TEST(AllocationTest, SingularSystemsFail) {
  Eigen::Matrix<double, 3, 4> s = example_slopes();
  s.row(2) = 2.0 * s.row(0);
  EXPECT_FALSE(allocate(Vec3(1e-4, 0, 1e-4), synthetic_table(s), kMean, true).ok);
  s = example_slopes();
  s(1, kDphiMk) = 0.0;
  EXPECT_FALSE(allocate(Vec3(1e-4, 1e-4, 1e-4), synthetic_table(s), kMean, true).ok);
}

TEST(AllocationTest, BranchSlopesAndFallback) {
  SensitivityTable t = synthetic_table(example_slopes());
  t.sweeps[kDphiMs].slope_p[2] = -2e-2;
  EXPECT_EQ(t.slope(kDphiMs, 2, 1), -2e-2);
  EXPECT_EQ(t.slope(kDphiMs, 2, -1), -1.2e-2);  // absent branch: mean slope
  EXPECT_EQ(t.slope(kDphiMs, 2, 0), -1.2e-2);
}

TEST(ControlParamsTest, AppliesSymmetricAndDifferentialFlapping) {
  ControlParams c;
  c.dphi_m_s = 0.1;
  c.dphi_m_k = 0.02;
  c.dtheta_A_m = 0.05;
  c.abdomen_active = false;
  const KinematicsParams k = c.apply(testing::table1_undulating());
  EXPECT_DOUBLE_EQ(k.dphi_m_right, 0.12);
  EXPECT_DOUBLE_EQ(k.dphi_m_left, 0.08);
  EXPECT_EQ(k.dtheta_A_m, 0.0);
  EXPECT_TRUE(c.feasible(testing::table1_undulating()));
  c.dphi_m_s = 1.0;
  EXPECT_FALSE(c.feasible(testing::table1_undulating()));
}

TEST(SweepSpecTest, Validate) {
  SweepSpec s;
  EXPECT_NO_THROW(s.validate());
  s.half_width = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SweepSpec();
  s.points = 2;
  EXPECT_THROW(s.validate(), ConfigError);
}

class HoverControlTest : public ::testing::Test {
 protected:
  static const ReferenceOrbit& orbit() { return testing::hover_reference(); }
  static const SensitivityTable& table() {
    static const SensitivityTable t = identify_sensitivities(orbit(), SweepSpec{});
    return t;
  }
};

TEST_F(HoverControlTest, MeanForceBalancesWeight) {
  const PeriodMeans n = table().nominal;
  const double w = orbit().morphology().total_mass() * orbit().morphology().g;
  EXPECT_NEAR(n.component[2].mean, -w, 1e-4 * w);
  EXPECT_NEAR(n.component[0].mean, 0.0, 1e-4 * w);
  EXPECT_EQ(n.component[1].mean, 0.0);
}

TEST_F(HoverControlTest, DifferentialFlappingActsLaterally) {
  const ParameterSweep& k = table().sweeps[kDphiMk];
  const double lateral = std::abs(k.slope_mean[1]);
  EXPECT_GT(lateral, 0.0);
  EXPECT_LT(std::abs(k.slope_mean[0]), 0.05 * lateral);
  EXPECT_LT(std::abs(k.slope_mean[2]), 0.05 * lateral);
  // Symmetric inputs leave the lateral force unchanged.
  for (int p : {kDphiMs, kDtheta0, kDthetaAm}) {
    EXPECT_LT(std::abs(table().sweeps[p].slope_mean[1]), 0.05 * lateral);
  }
}

TEST_F(HoverControlTest, SweepIsDeterministic) {
  const SensitivityTable again = identify_sensitivities(orbit(), SweepSpec{});
  for (int p = 0; p < kControlParameterCount; ++p) {
    EXPECT_EQ(again.sweeps[p].slope_mean, table().sweeps[p].slope_mean);
    EXPECT_EQ(again.sweeps[p].deltas, table().sweeps[p].deltas);
  }
  SweepSpec wide;
  wide.half_width = 2.0;
  EXPECT_THROW(identify_sensitivities(orbit(), wide), ConfigError);
}

TEST_F(HoverControlTest, ZeroErrorStaysOnOrbit) {
  ClosedLoopOptions o;
  o.max_periods = 3;
  const ClosedLoopResult r =
      closed_loop_run(orbit(), table(), Gains{}, ControllerConfig{}, Vec3::Zero(), Vec3::Zero(), o);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.diverged);
  for (double e : r.position_error) EXPECT_LT(e, 1e-6);
}

TEST_F(HoverControlTest, SmallLongitudinalErrorConverges) {
  for (bool abdomen : {true, false}) {
    ControllerConfig c;
    c.abdomen_active = abdomen;
    const ClosedLoopResult r =
        closed_loop_run(orbit(), table(), Gains{}, c, Vec3(0.02, 0.0, -0.01), Vec3::Zero());
    EXPECT_TRUE(r.converged) << "abdomen=" << abdomen;
    EXPECT_LE(r.cycles_to_converge, 100);
    EXPECT_LT(r.position_error.back(), 1e-4);
    EXPECT_LT(r.velocity_error.back(), 1e-4);
  }
}

TEST_F(HoverControlTest, SmallLateralErrorConverges) {
  const ClosedLoopResult r = closed_loop_run(orbit(), table(), Gains{}, ControllerConfig{},
                                             Vec3(0.0, 0.01, 0.0), Vec3::Zero());
  EXPECT_TRUE(r.converged);
}

TEST_F(HoverControlTest, ClosedLoopMatrixStructureAndStability) {
  const ControllerConfig c;
  const MatX a = closedloop_A(0.3 * orbit().period(), orbit(), table(), Gains{}, c);
  ASSERT_EQ(a.rows(), 9);
  EXPECT_TRUE((a.block<3, 3>(0, 3).isIdentity(1e-9)));
  EXPECT_TRUE((a.block<3, 3>(0, 0).isZero(1e-9)));
  EXPECT_TRUE((a.block<3, 3>(6, 0).isIdentity(1e-9)));
  EXPECT_TRUE((a.block<3, 6>(6, 3).isZero(1e-9)));
  const PeriodicLinearSystem sys = closedloop_system(orbit(), table(), Gains{}, c);
  const MonodromyResult r = monodromy(sys, orbit().steps_per_period());
  for (int i = 0; i < 9; ++i) EXPECT_LT(std::abs(r.multipliers(i)), 1.0) << r.multipliers(i);
}

TEST_F(HoverControlTest, RoaIsDeterministicAndLocallyStable) {
  ClosedLoopOptions o;
  o.max_periods = 40;
  const auto a = roa_monte_carlo(orbit(), table(), Gains{}, ControllerConfig{}, 4, 1e-3, 9, o);
  const auto b = roa_monte_carlo(orbit(), table(), Gains{}, ControllerConfig{}, 4, 1e-3, 9, o);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].e_x, b[i].e_x);
    EXPECT_EQ(a[i].e_z, b[i].e_z);
    EXPECT_EQ(a[i].cycles, b[i].cycles);
    EXPECT_TRUE(a[i].converged);
    EXPECT_LE(std::hypot(a[i].e_x, a[i].e_z), 1e-3);
  }
  EXPECT_THROW(roa_monte_carlo(orbit(), table(), Gains{}, ControllerConfig{}, 1, 0.0, 9),
               ConfigError);
}

}  // namespace
}  // namespace flapsim
