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

#include "flapsim/floquet.h"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "orbit_fixtures.h"

namespace flapsim {
namespace {

constexpr double kPi = std::numbers::pi;

PeriodicLinearSystem constant_system(const MatX& a, double period) {
  return PeriodicLinearSystem(static_cast<int>(a.rows()), period, [a](double) { return a; });
}

// x'' + (a - 2 q cos 2t) x = 0, period pi.
PeriodicLinearSystem mathieu(double a, double q) {
  return PeriodicLinearSystem(2, kPi, [a, q](double t) {
    MatX m(2, 2);
    m << 0.0, 1.0, -(a - 2.0 * q * std::cos(2.0 * t)), 0.0;
    return m;
  });
}

TEST(MonodromyTest, ZeroSystemIsIdentity) {
  const MonodromyResult r = monodromy(constant_system(MatX::Zero(4, 4), 2.0), 10);
  EXPECT_TRUE(r.M.isIdentity(0.0));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(r.multipliers(i), std::complex<double>(1.0, 0.0));
    EXPECT_EQ(std::abs(r.exponents(i)), 0.0);
  }
  EXPECT_EQ(r.trace_integral, 0.0);
}

TEST(MonodromyTest, ConstantDiagonalSystem) {
  const Eigen::Vector3d d(-1.0, 0.5, -0.2);
  const double T = 1.5;
  const MonodromyResult r = monodromy(constant_system(d.asDiagonal().toDenseMatrix(), T), 400);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.M(i, i), std::exp(d(i) * T), 1e-10);
  std::vector<double> mu;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.exponents(i).imag(), 0.0, 1e-14);
    mu.push_back(r.exponents(i).real());
  }
  std::sort(mu.begin(), mu.end());
  EXPECT_NEAR(mu[0], -1.0, 1e-10);
  EXPECT_NEAR(mu[1], -0.2, 1e-10);
  EXPECT_NEAR(mu[2], 0.5, 1e-10);
  EXPECT_NEAR(r.trace_integral, d.sum() * T, 1e-14);
}

TEST(MonodromyTest, MathieuWithoutForcingIsNeutral) {
  // q = 0: a harmonic oscillator, multipliers exp(+-i sqrt(a) pi).
  const double a = 0.7;
  const MonodromyResult r = monodromy(mathieu(a, 0.0), 2000);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(r.multipliers(i)), 1.0, 1e-8);
  EXPECT_NEAR(std::abs(r.multipliers(0).imag()), std::sin(std::sqrt(a) * kPi), 1e-8);
  EXPECT_NEAR(r.multipliers(0).real(), std::cos(std::sqrt(a) * kPi), 1e-8);
}

TEST(MonodromyTest, LiouvilleIdentity) {
  // Non-Hamiltonian periodic system with a nonzero trace.
  const PeriodicLinearSystem sys(3, 2.0, [](double t) {
    MatX m(3, 3);
    const double c = std::cos(kPi * t), s = std::sin(kPi * t);
    m << -0.3 + 0.2 * c, 1.0, 0.1 * s, -2.0, 0.1 * s, 0.4, 0.2 * c, -0.5, -0.1 + s;
    return m;
  });
  const MonodromyResult r = monodromy(sys, 800);
  // tr A integrates to -0.4 T exactly.
  EXPECT_NEAR(r.trace_integral, -0.8, 1e-12);
  EXPECT_NEAR(r.M.determinant(), std::exp(r.trace_integral), 1e-6);
  std::complex<double> product = 1.0;
  for (int i = 0; i < 3; ++i) product *= r.multipliers(i);
  EXPECT_NEAR(product.real(), r.M.determinant(), 1e-10);
  EXPECT_NEAR(product.imag(), 0.0, 1e-10);
}

TEST(MonodromyTest, MathieuInstabilityTongue) {
  // a = 1, q = 0.2 lies inside the first resonance tongue: one |rho| > 1.
  const MonodromyResult r = monodromy(mathieu(1.0, 0.2), 2000);
  const double big = std::max(std::abs(r.multipliers(0)), std::abs(r.multipliers(1)));
  EXPECT_GT(big, 1.1);
  EXPECT_NEAR(r.M.determinant(), 1.0, 1e-8);
}

TEST(MonodromyTest, DefectiveMatrixIsFlagged) {
  MatX jordan(2, 2);
  jordan << 0.0, 1.0, 0.0, 0.0;
  const MonodromyResult r = monodromy(constant_system(jordan, 1.0), 10);
  EXPECT_TRUE(r.defective);
  EXPECT_NEAR(std::abs(r.multipliers(0) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r.multipliers(1) - 1.0), 0.0, 1e-12);
}

TEST(MonodromyTest, ModesArePeriodicAndScale) {
  const PeriodicLinearSystem sys = mathieu(0.5, 0.15);
  const MonodromyResult r = monodromy(sys, 1000, 0.0, 10);
  ASSERT_EQ(r.fundamental.size(), 11u);
  EXPECT_TRUE(r.fundamental.front().isIdentity(0.0));
  EXPECT_LT((r.fundamental.back() - r.M).norm(), 1e-15);
  const std::vector<MatXc> p = periodic_modes(r);
  ASSERT_EQ(p.size(), 11u);
  EXPECT_LT((p.front() - p.back()).norm(), 1e-10);
  for (const ModeInfo& m : mode_report(r, sys, true, 1000)) {
    EXPECT_LT(m.scaling_error, 1e-6);
  }
}

TEST(MonodromyTest, Validation) {
  EXPECT_THROW(monodromy(mathieu(1.0, 0.0), 0), std::invalid_argument);
  EXPECT_THROW(monodromy(mathieu(1.0, 0.0), 10, 0.0, 3), std::invalid_argument);
}

TEST(NumericJacobianTest, MatchesAnalytic) {
  const auto f = [](const VecX& y) {
    VecX out(2);
    out << std::sin(y(0)) * y(1), y(0) * y(0) + std::exp(y(1));
    return out;
  };
  VecX y(2);
  y << 0.3, -0.7;
  MatX exact(2, 2);
  exact << std::cos(0.3) * -0.7, std::sin(0.3), 0.6, std::exp(-0.7);
  EXPECT_LT((numeric_jacobian(f, y) - exact).norm(), 1e-9);
}

class HoverFloquetTest : public ::testing::Test {
 protected:
  static const ReferenceOrbit& orbit() { return testing::hover_reference(); }
};

TEST_F(HoverFloquetTest, ForceRowsHaveZeroPositionColumns) {
  const double T = orbit().period();
  for (double s : {0.0, 0.13, 0.5, 0.77}) {
    const MatX a = openloop_A(s * T, orbit());
    EXPECT_TRUE((a.block<3, 3>(0, 0).isZero(0.0)));
    EXPECT_TRUE((a.block<3, 3>(0, 3).isIdentity(0.0)));
    EXPECT_TRUE((a.block<3, 3>(3, 0).isZero(0.0)));
  }
}

TEST_F(HoverFloquetTest, MatrixIsPeriodic) {
  const PeriodicLinearSystem sys = openloop_system(orbit());
  const double T = orbit().period();
  EXPECT_LT(sys.periodicity_defect({0.0, 0.21 * T, 0.6 * T}), 1e-8);
}

TEST_F(HoverFloquetTest, MatchesFiniteDifferenceOfNonlinearModel) {
  const double T = orbit().period();
  for (double s : {0.1, 0.35, 0.62, 0.9}) {
    const double t = s * T;
    const MatX a = openloop_A(t, orbit());
    const auto rhs = [&](const VecX& dv) {
      return VecX(evaluate_model(t, orbit().velocity(t) + Vec3(dv), orbit().params(),
                                 orbit().morphology())
                      .x_ddot);
    };
    const MatX fd = numeric_jacobian(rhs, VecX::Zero(3));
    const MatX block = a.block<3, 3>(3, 3);
    EXPECT_LT((block - fd).norm(), 1e-4 * fd.norm()) << "t/T=" << s;
  }
}

TEST_F(HoverFloquetTest, ThreeUnitMultipliersAndStableVelocities) {
  const PeriodicLinearSystem sys = openloop_system(orbit());
  const MonodromyResult r = monodromy(sys, orbit().steps_per_period());
  int unit = 0;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(r.multipliers(i) - 1.0) < 1e-6) ++unit;
  }
  EXPECT_EQ(unit, 3);
  // Position columns of M are exactly the identity.
  EXPECT_TRUE((r.M.block<6, 3>(0, 0).isApprox(MatX::Identity(6, 3), 0.0)));
  const std::vector<ModeInfo> modes = mode_report(r, sys, true, orbit().steps_per_period());
  for (const ModeInfo& m : modes) {
    if (m.content == ModeContent::kVelocity) {
      EXPECT_LT(m.modulus, 1.0);
    }
  }
  // Complex multipliers come in conjugate pairs.
  for (int i = 0; i < 6; ++i) {
    const std::complex<double> c = std::conj(r.multipliers(i));
    double nearest = INFINITY;
    for (int j = 0; j < 6; ++j) nearest = std::min(nearest, std::abs(r.multipliers(j) - c));
    EXPECT_LT(nearest, 1e-10);
  }
  EXPECT_NEAR(r.M.determinant(), std::exp(r.trace_integral), 1e-6);
}

TEST_F(HoverFloquetTest, LateralModeDecouples) {
  const PeriodicLinearSystem sys = openloop_system(orbit());
  const MonodromyResult r = monodromy(sys, orbit().steps_per_period());
  // By mirror symmetry the lateral velocity row and column decouple.
  EXPECT_LT(std::abs(r.M(4, 3)) + std::abs(r.M(4, 5)), 1e-10);
  EXPECT_LT(std::abs(r.M(3, 4)) + std::abs(r.M(5, 4)), 1e-10);
  bool found = false;
  for (const ModeInfo& m : mode_report(r, sys)) {
    if (m.plane != ModePlane::kLateral || m.content != ModeContent::kVelocity) continue;
    found = true;
    const VecXc v = r.eigenvectors.col(m.index);
    EXPECT_LT(std::abs(v(0)) + std::abs(v(2)) + std::abs(v(3)) + std::abs(v(5)), 1e-8);
  }
  EXPECT_TRUE(found);
}

TEST_F(HoverFloquetTest, MultipliersDoNotDependOnStartTime) {
  const PeriodicLinearSystem sys = openloop_system(orbit());
  const int n = orbit().steps_per_period();
  const auto sorted = [](const VecXc& v) {
    std::vector<std::complex<double>> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end(), [](auto a, auto b) {
      return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a.imag() < b.imag();
    });
    return out;
  };
  const auto a = sorted(monodromy(sys, n, 0.0).multipliers);
  const auto b = sorted(monodromy(sys, n, 0.37 * orbit().period()).multipliers);
  for (int i = 0; i < 6; ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-6);
}

}  // namespace
}  // namespace flapsim
