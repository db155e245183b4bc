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

#include "flapsim/liegroup.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flapsim {

Mat3 hat(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Vec3 vee(const Mat3& s) { return Vec3(s(2, 1), s(0, 2), s(1, 0)); }

Rotation expm_so3(const Vec3& v) {
  const double angle = v.norm();
  const Mat3 k = hat(v);
  if (angle < 1e-8) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

Rotation axis_rotation(int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  switch (axis) {
    case 0:
      r << 1, 0, 0,
           0, c, -s,
           0, s, c;
      break;
    case 1:
      r << c, 0, s,
           0, 1, 0,
           -s, 0, c;
      break;
    case 2:
      r << c, -s, 0,
           s, c, 0,
           0, 0, 1;
      break;
    default:
      throw std::invalid_argument("axis_rotation: axis must be 0, 1 or 2");
  }
  return r;
}

Rotation euler_132_right(double beta, double phi, double psi, double theta) {
  return axis_rotation(1, beta) * axis_rotation(0, phi) *
         axis_rotation(2, -psi) * axis_rotation(1, theta);
}

Rotation euler_132_left(double beta, double phi, double psi, double theta) {
  return axis_rotation(1, beta) * axis_rotation(0, -phi) *
         axis_rotation(2, psi) * axis_rotation(1, theta);
}

Vec3 angular_velocity(const Rotation& q, const Mat3& qdot) {
  const Mat3 w = q.transpose() * qdot;
  const Mat3 sym = 0.5 * (w + w.transpose());
  const double scale = std::max(1.0, w.norm());
  if (sym.norm() > 1e-6 * scale) {
    throw std::invalid_argument(
        "angular_velocity: Q^T Qdot is not skew-symmetric (residual " +
        std::to_string(sym.norm()) + ")");
  }
  return vee(0.5 * (w - w.transpose()));
}

Rotation nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0
                ? -1.0
                : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  return (m.transpose() * m - Mat3::Identity()).norm() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

}  // namespace flapsim
