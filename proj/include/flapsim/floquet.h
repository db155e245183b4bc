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

// Floquet analysis of T-periodic linear systems dy/dt = A(t) y.
//
// The fundamental matrix Psi(t), Psi(0) = I, is propagated by fixed-step RK4
// with A evaluated at the stage times; M = Psi(T) is the monodromy matrix. Its
// eigenvalues are the characteristic multipliers rho_i and
// mu_i = log(rho_i) / T (principal branch; mu is defined modulo 2 pi i / T).
// Solutions started on an eigenvector scale by rho_i after each period, and
// p_i(t) = Psi(t) v_i exp(-mu_i t) is T-periodic.

#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flapsim/simulate.h"

namespace flapsim {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using MatXc = Eigen::MatrixXcd;
using VecXc = Eigen::VectorXcd;

class PeriodicLinearSystem {
 public:
  using Evaluator = std::function<MatX(double t)>;

  PeriodicLinearSystem(int dimension, double period, Evaluator A);

  int dimension() const { return n_; }
  double period() const { return period_; }
  MatX A(double t) const { return eval_(t); }

  // max over the sample times of |A(t + T) - A(t)|.
  double periodicity_defect(const std::vector<double>& times) const;

 private:
  int n_;
  double period_;
  Evaluator eval_;
};

struct MonodromyResult {
  MatX M;
  VecXc multipliers;
  VecXc exponents;
  MatXc eigenvectors;  // columns, unit norm
  // Condition number of the eigenvector matrix; above 1e12 the matrix is
  // treated as defective and `defective` is set. Multipliers then come from
  // the real Schur form, and the eigenvectors are not reliable.
  double eigenvector_condition = 0.0;
  bool defective = false;
  double trace_integral = 0.0;  // int_0^T tr A dt, same RK4 stages
  double period = 0.0;
  double t0 = 0.0;
  // Psi at the sample times t0 + k T / samples, k = 0..samples (empty when
  // no samples were requested).
  std::vector<double> sample_times;
  std::vector<MatX> fundamental;
};

// steps >= 1; samples in [0, steps] records Psi every steps / samples steps
// (samples must divide steps).
MonodromyResult monodromy(const PeriodicLinearSystem& sys, int steps, double t0 = 0.0,
                          int samples = 0);

// Periodic mode shapes p_i(t_k) = Psi(t_k) v_i exp(-mu_i (t_k - t0)).
std::vector<MatXc> periodic_modes(const MonodromyResult& r);

enum class ModeContent { kPosition, kVelocity, kIntegral };
enum class ModePlane { kLongitudinal, kLateral };
const char* to_string(ModeContent c);
const char* to_string(ModePlane p);

struct ModeInfo {
  int index = 0;  // column of MonodromyResult::eigenvectors
  std::complex<double> multiplier;
  std::complex<double> exponent;
  double modulus = 0.0;
  ModeContent content = ModeContent::kPosition;
  ModePlane plane = ModePlane::kLongitudinal;
  // Relative error of Psi(t + T) v = rho Psi(t) v over the sampled period;
  // negative when not checked.
  double scaling_error = -1.0;
};

// Labels each mode by its dominant block (states ordered position, velocity,
// integral, three components each) and plane (component 2 is lateral), sorted
// by descending |rho|. With `verify`, a second period is propagated to check
// the per-period scaling of each eigen-solution.
std::vector<ModeInfo> mode_report(const MonodromyResult& r, const PeriodicLinearSystem& sys,
                                  bool verify = false, int steps = 0);

// Open-loop variational system about a hover orbit (states dx, dxdot): the
// top-right block is I, the force rows have zero dx columns, and the
// bottom-right block is (1/m) R [Q_R dF_R/dxdot + Q_L dF_L/dxdot].
MatX openloop_A(double t, const ReferenceOrbit& orbit);
PeriodicLinearSystem openloop_system(const ReferenceOrbit& orbit);

// Central-difference Jacobian of f at y with per-component steps
// h * max(|y_i|, floor).
MatX numeric_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& y,
                      double h = 1e-6, double floor = 1e-3);

}  // namespace flapsim
