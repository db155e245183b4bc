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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "flapsim/aero.h"
#include "flapsim/errors.h"

namespace flapsim {
namespace {

constexpr double kDefectiveCondition = 1e12;

// Psi over `periods` periods from t0; stores every `stride`-th step.
struct Propagation {
  MatX psi;
  double trace_integral = 0.0;
  std::vector<double> times;
  std::vector<MatX> samples;
};

Propagation propagate(const PeriodicLinearSystem& sys, int steps, double t0, int periods,
                      int stride) {
  const int n = sys.dimension();
  const double h = sys.period() / steps;
  Propagation out;
  out.psi = MatX::Identity(n, n);
  const long total = static_cast<long>(steps) * periods;
  MatX a0 = sys.A(t0);
  for (long i = 0; i < total; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    if (stride > 0 && i % stride == 0) {
      out.times.push_back(t);
      out.samples.push_back(out.psi);
    }
    const MatX a_mid = sys.A(t + 0.5 * h);
    const MatX a1 = sys.A(t + h);
    const MatX k1 = a0 * out.psi;
    const MatX k2 = a_mid * (out.psi + 0.5 * h * k1);
    const MatX k3 = a_mid * (out.psi + 0.5 * h * k2);
    const MatX k4 = a1 * (out.psi + h * k3);
    out.psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (i < steps) {
      out.trace_integral += (h / 6.0) * (a0.trace() + 4.0 * a_mid.trace() + a1.trace());
    }
    a0 = a1;
  }
  if (stride > 0) {
    out.times.push_back(t0 + static_cast<double>(total) * h);
    out.samples.push_back(out.psi);
  }
  return out;
}

}  // namespace

PeriodicLinearSystem::PeriodicLinearSystem(int dimension, double period, Evaluator A)
    : n_(dimension), period_(period), eval_(std::move(A)) {
  if (n_ < 1) throw std::invalid_argument("PeriodicLinearSystem: dimension must be >= 1");
  if (!(period_ > 0.0)) throw std::invalid_argument("PeriodicLinearSystem: period must be > 0");
}

double PeriodicLinearSystem::periodicity_defect(const std::vector<double>& times) const {
  double worst = 0.0;
  for (double t : times) worst = std::max(worst, (A(t + period_) - A(t)).norm());
  return worst;
}

MonodromyResult monodromy(const PeriodicLinearSystem& sys, int steps, double t0, int samples) {
  if (steps < 1) throw std::invalid_argument("monodromy: steps must be >= 1");
  if (samples < 0 || samples > steps || (samples > 0 && steps % samples != 0)) {
    throw std::invalid_argument("monodromy: samples must divide steps");
  }
  const int n = sys.dimension();
  Propagation p = propagate(sys, steps, t0, 1, samples > 0 ? steps / samples : 0);
  MonodromyResult r;
  r.M = p.psi;
  r.period = sys.period();
  r.t0 = t0;
  r.trace_integral = p.trace_integral;
  r.sample_times = std::move(p.times);
  r.fundamental = std::move(p.samples);

  Eigen::EigenSolver<MatX> es(r.M);
  if (es.info() != Eigen::Success) throw std::runtime_error("monodromy: eigen solver failed");
  r.multipliers = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  for (int j = 0; j < n; ++j) r.eigenvectors.col(j).normalize();
  const Eigen::JacobiSVD<MatXc> svd(r.eigenvectors);
  const double smin = svd.singularValues().minCoeff();
  r.eigenvector_condition =
      smin > 0.0 ? svd.singularValues().maxCoeff() / smin : std::numeric_limits<double>::infinity();
  if (r.eigenvector_condition > kDefectiveCondition) {
    r.defective = true;
    Eigen::ComplexSchur<MatXc> schur(r.M.cast<std::complex<double>>());
    r.multipliers = schur.matrixT().diagonal();
  }
  r.exponents.resize(n);
  for (int j = 0; j < n; ++j) r.exponents(j) = std::log(r.multipliers(j)) / r.period;
  return r;
}

std::vector<MatXc> periodic_modes(const MonodromyResult& r) {
  std::vector<MatXc> modes;
  for (std::size_t k = 0; k < r.fundamental.size(); ++k) {
    MatXc p = r.fundamental[k].cast<std::complex<double>>() * r.eigenvectors;
    const double dt = r.sample_times[k] - r.t0;
    for (int j = 0; j < p.cols(); ++j) p.col(j) *= std::exp(-r.exponents(j) * dt);
    modes.push_back(std::move(p));
  }
  return modes;
}

const char* to_string(ModeContent c) {
  switch (c) {
    case ModeContent::kPosition:
      return "position";
    case ModeContent::kVelocity:
      return "velocity";
    case ModeContent::kIntegral:
      return "integral";
  }
  return "?";
}

const char* to_string(ModePlane p) {
  return p == ModePlane::kLateral ? "lateral" : "longitudinal";
}

std::vector<ModeInfo> mode_report(const MonodromyResult& r, const PeriodicLinearSystem& sys,
                                  bool verify, int steps) {
  const int n = static_cast<int>(r.M.rows());
  std::vector<ModeInfo> modes(n);
  Propagation two;
  if (verify) {
    if (steps < 2 || steps % 2) throw std::invalid_argument("mode_report: steps must be even");
    two = propagate(sys, steps, r.t0, 2, steps / 2);
  }
  for (int j = 0; j < n; ++j) {
    ModeInfo& m = modes[j];
    m.index = j;
    m.multiplier = r.multipliers(j);
    m.exponent = r.exponents(j);
    m.modulus = std::abs(m.multiplier);
    const VecXc v = r.eigenvectors.col(j);
    double block[3] = {0.0, 0.0, 0.0};
    double lateral = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = std::norm(v(i));
      block[std::min(i / 3, 2)] += w;
      if (i % 3 == 1) lateral += w;
      total += w;
    }
    const int dominant = static_cast<int>(std::max_element(block, block + 3) - block);
    m.content = static_cast<ModeContent>(dominant);
    m.plane = lateral > 0.5 * total ? ModePlane::kLateral : ModePlane::kLongitudinal;
    if (verify && !r.defective) {
      // Samples are at half periods: k and k + 2 are one period apart.
      double err = 0.0, scale = 0.0;
      for (std::size_t k = 0; k + 2 < two.samples.size(); ++k) {
        const VecXc now = two.samples[k].cast<std::complex<double>>() * v;
        const VecXc later = two.samples[k + 2].cast<std::complex<double>>() * v;
        err = std::max(err, (later - m.multiplier * now).norm());
        scale = std::max(scale, (m.multiplier * now).norm());
      }
      m.scaling_error = scale > 0.0 ? err / scale : err;
    }
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const ModeInfo& a, const ModeInfo& b) { return a.modulus > b.modulus; });
  return modes;
}

MatX openloop_A(double t, const ReferenceOrbit& orbit) {
  const MorphologyConfig& morph = orbit.morphology();
  const PrescribedMotion motion = prescribed_motion_at(t, orbit.params());
  const Vec3 x_dot = orbit.velocity(t);
  const Mat3 jr = force_velocity_jacobian(right_wing_state(motion, x_dot, morph), morph.aero);
  const Mat3 jl = force_velocity_jacobian(left_wing_state(motion, x_dot, morph), morph.aero);
  MatX a = MatX::Zero(6, 6);
  a.block<3, 3>(0, 3).setIdentity();
  a.block<3, 3>(3, 3) = motion.R * (motion.QR * jr + motion.QL * jl) / morph.total_mass();
  return a;
}

PeriodicLinearSystem openloop_system(const ReferenceOrbit& orbit) {
  return PeriodicLinearSystem(6, orbit.period(),
                              [&orbit](double t) { return openloop_A(t, orbit); });
}

MatX numeric_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& y, double h,
                      double floor) {
  const VecX f0 = f(y);
  MatX jac(f0.size(), y.size());
  for (int j = 0; j < y.size(); ++j) {
    const double step = h * std::max(std::abs(y(j)), floor);
    VecX yp = y, ym = y;
    yp(j) += step;
    ym(j) -= step;
    jac.col(j) = (f(yp) - f(ym)) / (2.0 * step);
  }
  return jac;
}

}  // namespace flapsim
