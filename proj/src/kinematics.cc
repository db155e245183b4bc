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

#include "flapsim/kinematics.h"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flapsim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One factor exp(a(t) * hat(e_axis)) of an Euler-angle product.
struct EulerFactor {
  int axis;
  AngleRates angle;
};

struct ChainResult {
  Rotation rotation;
  Vec3 omega;
  Vec3 domega;
};

// For Q = A_0 A_1 ... A_{n-1} with A_i = exp(a_i e_{k_i}^):
//   omega  = sum_i B_i^T (da_i e_{k_i}),  B_i = A_{i+1} ... A_{n-1}
//   domega = sum_i [B_i^T (dda_i e_{k_i}) - omega_i x B_i^T (da_i e_{k_i})]
// where omega_i = sum_{j>i} B_j^T (da_j e_{k_j}) is the rate of B_i.
template <std::size_t N>
ChainResult chain(const std::array<EulerFactor, N>& factors) {
  std::array<Rotation, N> a;
  for (std::size_t i = 0; i < N; ++i) {
    a[i] = axis_rotation(factors[i].axis, factors[i].angle.value);
  }
  ChainResult out;
  out.omega.setZero();
  out.domega.setZero();
  Rotation b = Rotation::Identity();  // B_i, built from the right
  Vec3 tail_rate = Vec3::Zero();      // omega_i
  for (std::size_t k = N; k-- > 0;) {
    const Vec3 axis = Vec3::Unit(factors[k].axis);
    const Vec3 w = b.transpose() * (factors[k].angle.rate * axis);
    const Vec3 dw = b.transpose() * (factors[k].angle.accel * axis);
    out.domega += dw - tail_rate.cross(w);
    out.omega += w;
    tail_rate += w;
    b = a[k] * b;
  }
  out.rotation = b;
  return out;
}

AngleRates negated(const AngleRates& a) { return {-a.value, -a.rate, -a.accel}; }

}  // namespace

void WingWaveformParams::validate() const {
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw std::invalid_argument("wing kinematics: f must be positive");
  }
  if (!(phi_K > 0.0 && phi_K <= 1.0)) {
    throw std::invalid_argument("wing kinematics: phi_K must lie in (0, 1]");
  }
  if (!(theta_C > 0.0)) {
    throw std::invalid_argument("wing kinematics: theta_C must be positive");
  }
  if (psi_N != 1 && psi_N != 2) {
    throw std::invalid_argument("wing kinematics: psi_N must be 1 or 2");
  }
}

bool is_feasible_flapping(const WingWaveformParams& p) {
  return std::abs(p.phi_m) + std::abs(p.phi_0) < std::numbers::pi / 2.0;
}

AngleRates flap_angle(double t, const WingWaveformParams& p) {
  if (!(p.phi_K > 0.0 && p.phi_K <= 1.0)) {
    throw std::invalid_argument("flap_angle: phi_K must lie in (0, 1]");
  }
  const double w = kTwoPi * p.f;
  const double k = p.phi_K;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  const double amp = p.phi_m / std::asin(k);
  // 1 - k^2 cos^2 written to stay accurate near k = 1.
  const double den2 = std::max((1.0 - k * k) + k * k * s * s, 1e-24);
  const double den = std::sqrt(den2);
  const double u = k * c;
  const double du = -k * w * s;
  const double ddu = -k * w * w * c;
  AngleRates out;
  out.value = amp * std::asin(u) + p.phi_0;
  out.rate = amp * du / den;
  out.accel = amp * (ddu / den + du * du * u / (den2 * den));
  return out;
}

AngleRates pitch_angle(double t, const WingWaveformParams& p) {
  if (!(p.theta_C > 0.0)) {
    throw std::invalid_argument("pitch_angle: theta_C must be positive");
  }
  const double w = kTwoPi * p.f;
  const double c_shape = p.theta_C;
  const double arg = w * t + p.theta_a;
  const double v = c_shape * std::sin(arg);
  const double dv = c_shape * w * std::cos(arg);
  const double ddv = -c_shape * w * w * std::sin(arg);
  const double th = std::tanh(v);
  const double sech2 = 1.0 - th * th;
  const double amp = p.theta_m / std::tanh(c_shape);
  AngleRates out;
  out.value = amp * th + p.theta_0;
  out.rate = amp * sech2 * dv;
  out.accel = amp * (sech2 * ddv - 2.0 * th * sech2 * dv * dv);
  return out;
}

AngleRates deviation_angle(double t, const WingWaveformParams& p) {
  if (p.psi_N != 1 && p.psi_N != 2) {
    throw std::invalid_argument("deviation_angle: psi_N must be 1 or 2");
  }
  const double w = kTwoPi * p.psi_N * p.f;
  const double arg = w * t + p.psi_a;
  AngleRates out;
  out.value = p.psi_m * std::cos(arg) + p.psi_0;
  out.rate = -p.psi_m * w * std::sin(arg);
  out.accel = -p.psi_m * w * w * std::cos(arg);
  return out;
}

BodyAbdomenPitch body_abdomen_pitch(double t, double f,
                                    const BodyAbdomenParams& p) {
  const double w = kTwoPi * f;
  BodyAbdomenPitch out;
  const double argb = w * t + p.theta_B_a;
  out.body.value = p.theta_B_m * std::cos(argb) + p.theta_B_0;
  out.body.rate = -p.theta_B_m * w * std::sin(argb);
  out.body.accel = -p.theta_B_m * w * w * std::cos(argb);
  if (p.abdomen_fixed) {
    out.abdomen = {p.theta_A_0, 0.0, 0.0};
  } else {
    const double arga = w * t + p.theta_A_a;
    out.abdomen.value = p.theta_A_m * std::cos(arga) + p.theta_A_0;
    out.abdomen.rate = -p.theta_A_m * w * std::sin(arga);
    out.abdomen.accel = -p.theta_A_m * w * w * std::cos(arga);
  }
  return out;
}

WingWaveformParams KinematicsParams::right_wing() const {
  WingWaveformParams w = wing;
  w.phi_m += dphi_m_right;
  w.theta_0 += dtheta_0;
  return w;
}

WingWaveformParams KinematicsParams::left_wing() const {
  WingWaveformParams w = wing;
  w.phi_m += dphi_m_left;
  w.theta_0 += dtheta_0;
  return w;
}

BodyAbdomenParams KinematicsParams::body_params() const {
  BodyAbdomenParams b = body;
  b.theta_A_m += dtheta_A_m;
  return b;
}

PrescribedMotion prescribed_motion_at(double t, const WingWaveformParams& right,
                                      const WingWaveformParams& left,
                                      const BodyAbdomenParams& body) {
  PrescribedMotion m;
  m.phi_R = flap_angle(t, right);
  m.theta_R = pitch_angle(t, right);
  m.psi_R = deviation_angle(t, right);
  m.phi_L = flap_angle(t, left);
  m.theta_L = pitch_angle(t, left);
  m.psi_L = deviation_angle(t, left);
  m.pitch = body_abdomen_pitch(t, right.f, body);

  const AngleRates beta_r{right.beta, 0.0, 0.0};
  const AngleRates beta_l{left.beta, 0.0, 0.0};
  const ChainResult qr = chain<4>({EulerFactor{1, beta_r}, EulerFactor{0, m.phi_R},
                                   EulerFactor{2, negated(m.psi_R)},
                                   EulerFactor{1, m.theta_R}});
  const ChainResult ql = chain<4>({EulerFactor{1, beta_l},
                                   EulerFactor{0, negated(m.phi_L)},
                                   EulerFactor{2, m.psi_L},
                                   EulerFactor{1, m.theta_L}});
  m.QR = qr.rotation;
  m.OmegaR = qr.omega;
  m.dOmegaR = qr.domega;
  m.QL = ql.rotation;
  m.OmegaL = ql.omega;
  m.dOmegaL = ql.domega;

  m.R = axis_rotation(1, m.pitch.body.value);
  m.Omega = m.pitch.body.rate * kE2;
  m.dOmega = m.pitch.body.accel * kE2;
  m.QA = axis_rotation(1, m.pitch.abdomen.value);
  m.OmegaA = m.pitch.abdomen.rate * kE2;
  m.dOmegaA = m.pitch.abdomen.accel * kE2;
  return m;
}

PrescribedMotion prescribed_motion_at(double t, const KinematicsParams& k) {
  return prescribed_motion_at(t, k.right_wing(), k.left_wing(), k.body_params());
}

}  // namespace flapsim
