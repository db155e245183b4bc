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

// Quasi-steady blade-element aerodynamics of a single wing.
//
// A chord element at span station r (measured from the wing root along the
// wing frame y axis) sees the chord-plane flow
//
//   U(r) = (I - e2 e2^T) Q^T (R^T (xdot - v_wind) + Omega x mu)
//          + r (Q^T Omega + Omega_w) x (s e2) ,
//
// with s = +1 for the right wing and s = -1 for the left wing (whose span
// points along -y of its own frame). U is affine in r, so e1^T U and e3^T U
// change sign at most once each along the span. The span integral is split
// at those points and each smooth piece is integrated with Gauss-Legendre in
// the variable r = l (1 - cos u) / 2, which also absorbs the square-root
// behaviour of elliptic chords at the root and tip.
//
// Element forces, in the wing frame:
//   dL = 1/2 rho C_L(alpha) c sgn(e1^T U e3^T U) (e2 x U) |U| dr
//   dD = -1/2 rho C_D(alpha) c |U| U dr
//   dM = (s r e2) x (dL + dD)

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flapsim/liegroup.h"

namespace flapsim {

// Span-wise chord c(r), r in [0, span].
class ChordDistribution {
 public:
  ChordDistribution() = default;

  // c(r) = c0 sqrt(1 - (2r/l - 1)^2) with c0 chosen so the area is `area`.
  static ChordDistribution elliptic(double span, double area);

  // Piecewise-linear table over r/l in [0, 1]; must be strictly increasing
  // and cover both ends.
  static ChordDistribution table(double span, std::vector<double> r_over_l,
                                 std::vector<double> chord_m);

  // CSV with a header line containing columns r_over_l, chord_m.
  static ChordDistribution from_csv(const std::string& path, double span);

  double operator()(double r) const;
  double span() const { return span_; }
  double area() const;
  bool is_elliptic() const { return table_r_.empty(); }
  double root_chord() const { return c0_; }
  const std::vector<double>& table_r_over_l() const { return table_r_; }
  const std::vector<double>& table_chord() const { return table_c_; }

 private:
  double span_ = 0.05;
  double c0_ = 0.04;
  std::vector<double> table_r_;
  std::vector<double> table_c_;
};

enum class RotationalTerm {
  kWingFrame,  // r (Q^T Omega + Omega_w) x e2, body rate resolved in the wing frame
  kAsPrinted,  // r (Q Omega + Omega_w) x e2
};

struct AeroConfig {
  double rho = 1.225;  // kg/m^3
  ChordDistribution chord = ChordDistribution::elliptic(0.05, 3.1e-3);
  // Gauss nodes per smooth span piece (there are at most three pieces).
  int quadrature_points = 64;
  Vec3 v_wind = Vec3::Zero();  // inertial frame
  RotationalTerm rotational_term = RotationalTerm::kWingFrame;
  bool enabled = true;  // false zeroes every aerodynamic load

  double span() const { return chord.span(); }
  void validate() const;
};

struct WingAeroState {
  Rotation R = Rotation::Identity();  // body attitude
  Rotation Q = Rotation::Identity();  // wing attitude relative to the body
  Vec3 x_dot = Vec3::Zero();
  Vec3 Omega = Vec3::Zero();    // body rate, body frame
  Vec3 Omega_w = Vec3::Zero();  // wing rate relative to the body, wing frame
  Vec3 mu = Vec3::Zero();       // wing root offset from the body mass center
  double span_sign = 1.0;       // +1 right wing, -1 left wing
};

struct AeroResultant {
  Vec3 lift = Vec3::Zero();
  Vec3 drag = Vec3::Zero();
  Vec3 moment = Vec3::Zero();  // about the wing root
  Vec3 force() const { return lift + drag; }
};

struct LiftDrag {
  double cl = 0.0;
  double cd = 0.0;
};

Vec3 chord_velocity(double r, const WingAeroState& s, const Vec3& v_wind,
                    RotationalTerm term = RotationalTerm::kWingFrame);

// alpha in [0, pi/2]; nullopt when |U| == 0.
std::optional<double> angle_of_attack(const Vec3& u);

LiftDrag lift_drag_coefficients(double alpha);

// dC_L/dalpha and dC_D/dalpha, alpha in radians.
LiftDrag lift_drag_slopes(double alpha);

AeroResultant blade_element_forces(const WingAeroState& s, const AeroConfig& cfg);

// First-order change of the resultant force L + D due to a velocity
// perturbation dxdot, holding attitudes and rates fixed.
Vec3 perturbed_forces(const WingAeroState& s, const Vec3& dxdot,
                      const AeroConfig& cfg);

// The linear map dxdot -> dF used by perturbed_forces().
Mat3 force_velocity_jacobian(const WingAeroState& s, const AeroConfig& cfg);

// Nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

}  // namespace flapsim
