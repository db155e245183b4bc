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

// Prescribed motion of the wings, body and abdomen.
//
// Wing attitude relative to the body is a 1-3-2 Euler sequence measured from
// the stroke plane (stroke plane angle beta about b_y). The three angles
// follow closed-form periodic waveforms:
//
//   flapping  phi(t)   = phi_m / asin(phi_K) * asin(phi_K cos(2 pi f t)) + phi_0
//   pitch     theta(t) = theta_m / tanh(theta_C)
//                          * tanh(theta_C sin(2 pi f t + theta_a)) + theta_0
//   deviation psi(t)   = psi_m cos(2 pi psi_N f t + psi_a) + psi_0
//
// Body and abdomen pitch are cosines at the flapping frequency. All first and
// second derivatives are analytic; angular velocities and accelerations are
// obtained by chaining the Euler-angle rates through the factorized product.

#pragma once

#include "flapsim/liegroup.h"

namespace flapsim {

struct WingWaveformParams {
  double f = 10.0;  // Hz
  double beta = 0.0;
  double phi_m = 0.0;
  double phi_K = 0.5;
  double phi_0 = 0.0;
  double theta_m = 0.0;
  double theta_C = 1.0;
  double theta_0 = 0.0;
  double theta_a = 0.0;
  double psi_m = 0.0;
  int psi_N = 2;
  double psi_0 = 0.0;
  double psi_a = 0.0;

  double period() const { return 1.0 / f; }

  // Throws std::invalid_argument on phi_K outside (0, 1], theta_C <= 0,
  // psi_N outside {1, 2} or non-positive f. Does not check the flapping
  // feasibility bound; see is_feasible_flapping().
  void validate() const;
};

// |phi_m| + |phi_0| < pi/2.
bool is_feasible_flapping(const WingWaveformParams& p);

struct BodyAbdomenParams {
  double theta_B_m = 0.0;
  double theta_B_0 = 0.0;
  double theta_B_a = 0.0;
  double theta_A_m = 0.0;
  double theta_A_0 = 0.0;
  double theta_A_a = 0.0;
  // Abdomen held at theta_A_0 relative to the body.
  bool abdomen_fixed = false;
};

// Value with its first and second time derivatives.
struct AngleRates {
  double value = 0.0;
  double rate = 0.0;
  double accel = 0.0;
};

AngleRates flap_angle(double t, const WingWaveformParams& p);
AngleRates pitch_angle(double t, const WingWaveformParams& p);
AngleRates deviation_angle(double t, const WingWaveformParams& p);

struct BodyAbdomenPitch {
  AngleRates body;
  AngleRates abdomen;
};

// f is the flapping frequency shared with the wings.
BodyAbdomenPitch body_abdomen_pitch(double t, double f,
                                    const BodyAbdomenParams& p);

// Full wing/body/abdomen parameter set. The right and left wing share every
// waveform parameter except the per-wing flapping-amplitude offsets and a
// common pitch-offset shift, which is what the controller manipulates.
struct KinematicsParams {
  WingWaveformParams wing;
  BodyAbdomenParams body;
  double dphi_m_right = 0.0;
  double dphi_m_left = 0.0;
  double dtheta_0 = 0.0;
  double dtheta_A_m = 0.0;

  WingWaveformParams right_wing() const;
  WingWaveformParams left_wing() const;
  BodyAbdomenParams body_params() const;
  double period() const { return wing.period(); }
};

struct PrescribedMotion {
  Rotation R = Rotation::Identity();   // body attitude
  Rotation QR = Rotation::Identity();  // right wing relative to body
  Rotation QL = Rotation::Identity();  // left wing relative to body
  Rotation QA = Rotation::Identity();  // abdomen relative to body
  Vec3 Omega = Vec3::Zero();
  Vec3 OmegaR = Vec3::Zero();
  Vec3 OmegaL = Vec3::Zero();
  Vec3 OmegaA = Vec3::Zero();
  Vec3 dOmega = Vec3::Zero();
  Vec3 dOmegaR = Vec3::Zero();
  Vec3 dOmegaL = Vec3::Zero();
  Vec3 dOmegaA = Vec3::Zero();

  // Angles, kept for recording.
  AngleRates phi_R, theta_R, psi_R;
  AngleRates phi_L, theta_L, psi_L;
  BodyAbdomenPitch pitch;
};

// Both wings must share f and beta; the body waveform uses right.f.
PrescribedMotion prescribed_motion_at(double t, const WingWaveformParams& right,
                                      const WingWaveformParams& left,
                                      const BodyAbdomenParams& body);

PrescribedMotion prescribed_motion_at(double t, const KinematicsParams& k);

}  // namespace flapsim
