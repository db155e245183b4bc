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

// Rotation-group primitives shared by the kinematics, aerodynamics and
// multibody code. Pure functions of their arguments.

#pragma once

#include <Eigen/Dense>

namespace flapsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// An element of SO(3). Kept as a plain matrix so it composes with Eigen
// expressions; is_rotation() checks the group invariants.
using Rotation = Eigen::Matrix3d;

inline const Vec3 kE1 = Vec3::UnitX();
inline const Vec3 kE2 = Vec3::UnitY();
inline const Vec3 kE3 = Vec3::UnitZ();

// hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

// Inverse of hat on skew matrices. Reads the lower-triangular entries.
Vec3 vee(const Mat3& s);

// Rodrigues formula. Falls back to the second-order series below |v| = 1e-8.
Rotation expm_so3(const Vec3& v);

// exp(angle * hat(e_axis)) for axis in {0, 1, 2}.
Rotation axis_rotation(int axis, double angle);

// Q_R = exp(beta e2^) exp(phi e1^) exp(-psi e3^) exp(theta e2^).
Rotation euler_132_right(double beta, double phi, double psi, double theta);

// Q_L = exp(beta e2^) exp(-phi e1^) exp(psi e3^) exp(theta e2^).
Rotation euler_132_left(double beta, double phi, double psi, double theta);

// Body-frame angular velocity from Qdot = Q hat(omega). The symmetric part
// of Q^T Qdot is discarded; throws std::invalid_argument when it exceeds
// 1e-6 (relative to max(1, |Q^T Qdot|)), which means Qdot is not tangent at Q.
Vec3 angular_velocity(const Rotation& q, const Mat3& qdot);

// Closest rotation in the Frobenius sense (polar decomposition via SVD).
Rotation nearest_rotation(const Mat3& m);

bool is_rotation(const Mat3& m, double tol = 1e-12);

}  // namespace flapsim
