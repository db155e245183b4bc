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

#include "flapsim/aero.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace flapsim {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = 180.0 / kPi;

double sgn(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// e2 x v for v with v.y() == 0.
Vec3 e2_cross(const Vec3& v) { return Vec3(v.z(), 0.0, -v.x()); }

// U(r) = a + r b.
struct ChordFlow {
  Vec3 a;
  Vec3 b;
};

ChordFlow chord_flow(const WingAeroState& s, const Vec3& v_wind,
                     RotationalTerm term) {
  ChordFlow flow;
  flow.a = s.Q.transpose() *
           (s.R.transpose() * (s.x_dot - v_wind) + s.Omega.cross(s.mu));
  flow.a.y() = 0.0;
  const Vec3 body_rate = term == RotationalTerm::kWingFrame
                             ? Vec3(s.Q.transpose() * s.Omega)
                             : Vec3(s.Q * s.Omega);
  const Vec3 w = body_rate + s.Omega_w;
  flow.b = s.span_sign * w.cross(kE2);
  flow.b.y() = 0.0;
  return flow;
}

// Sign-change stations of U_x and U_z inside (0, span), sorted.
struct Breakpoint {
  double r;
  int component;  // 0 or 2
};

int span_breakpoints(const ChordFlow& flow, double span, Breakpoint out[2]) {
  int n = 0;
  for (int k : {0, 2}) {
    if (flow.b[k] == 0.0) continue;
    const double r = -flow.a[k] / flow.b[k];
    if (r > 0.0 && r < span) out[n++] = {r, k};
  }
  if (n == 2 && out[1].r < out[0].r) std::swap(out[0], out[1]);
  return n;
}

// Calls fn(r, weight) over the split span quadrature, weight including dr.
template <typename Fn>
void span_quadrature(const ChordFlow& flow, const AeroConfig& cfg, Fn&& fn) {
  const double span = cfg.span();
  Breakpoint bp[2];
  const int nbp = span_breakpoints(flow, span, bp);
  // Flow sign changes and chord table kinks each start a new panel.
  std::vector<double> edges = {0.0, kPi};
  const auto add_edge = [&](double r) {
    edges.push_back(std::acos(std::clamp(1.0 - 2.0 * r / span, -1.0, 1.0)));
  };
  for (int i = 0; i < nbp; ++i) add_edge(bp[i].r);
  const std::vector<double>& knots = cfg.chord.table_r_over_l();
  for (std::size_t i = 1; i + 1 < knots.size(); ++i) add_edge(knots[i] * span);
  std::sort(edges.begin(), edges.end());
  const int nedges = static_cast<int>(edges.size());
  const GaussRule& rule = gauss_legendre(cfg.quadrature_points);
  for (int p = 0; p + 1 < nedges; ++p) {
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    if (half <= 0.0) continue;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double u = mid + half * rule.nodes[j];
      const double r = 0.5 * span * (1.0 - std::cos(u));
      const double w = half * rule.weights[j] * 0.5 * span * std::sin(u);
      fn(r, w);
    }
  }
}

double alpha_of(const Vec3& u) {
  return std::atan2(std::abs(u.z()), std::abs(u.x()));
}

}  // namespace

// ---------------------------------------------------------------------------
// ChordDistribution

ChordDistribution ChordDistribution::elliptic(double span, double area) {
  if (!(span > 0.0) || !(area > 0.0)) {
    throw std::invalid_argument("elliptic chord: span and area must be positive");
  }
  ChordDistribution c;
  c.span_ = span;
  c.c0_ = 4.0 * area / (kPi * span);
  return c;
}

ChordDistribution ChordDistribution::table(double span, std::vector<double> r_over_l,
                                           std::vector<double> chord_m) {
  if (!(span > 0.0)) throw std::invalid_argument("chord table: span must be positive");
  if (r_over_l.size() != chord_m.size() || r_over_l.size() < 2) {
    throw std::invalid_argument("chord table: need at least two (r_over_l, chord_m) rows");
  }
  for (std::size_t i = 0; i < r_over_l.size(); ++i) {
    if (chord_m[i] < 0.0) throw std::invalid_argument("chord table: negative chord");
    if (i > 0 && !(r_over_l[i] > r_over_l[i - 1])) {
      throw std::invalid_argument("chord table: r_over_l must be strictly increasing");
    }
  }
  if (r_over_l.front() != 0.0 || r_over_l.back() != 1.0) {
    throw std::invalid_argument("chord table: r_over_l must span [0, 1]");
  }
  ChordDistribution c;
  c.span_ = span;
  c.c0_ = *std::max_element(chord_m.begin(), chord_m.end());
  c.table_r_ = std::move(r_over_l);
  c.table_c_ = std::move(chord_m);
  return c;
}

ChordDistribution ChordDistribution::from_csv(const std::string& path, double span) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open chord table " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty chord table " + path);
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };
  const auto header = split(line);
  const auto ir = std::find(header.begin(), header.end(), "r_over_l");
  const auto ic = std::find(header.begin(), header.end(), "chord_m");
  if (ir == header.end() || ic == header.end()) {
    throw std::runtime_error("chord table " + path +
                             ": header must contain r_over_l and chord_m");
  }
  const auto col_r = static_cast<std::size_t>(ir - header.begin());
  const auto col_c = static_cast<std::size_t>(ic - header.begin());
  std::vector<double> r, c;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() <= std::max(col_r, col_c)) {
      throw std::runtime_error("chord table " + path + ": short row");
    }
    r.push_back(std::stod(cells[col_r]));
    c.push_back(std::stod(cells[col_c]));
  }
  return table(span, std::move(r), std::move(c));
}

double ChordDistribution::operator()(double r) const {
  const double x = std::clamp(r / span_, 0.0, 1.0);
  if (table_r_.empty()) {
    const double y = 2.0 * x - 1.0;
    return c0_ * std::sqrt(std::max(0.0, 1.0 - y * y));
  }
  const auto it = std::upper_bound(table_r_.begin(), table_r_.end(), x);
  if (it == table_r_.end()) return table_c_.back();
  const auto i = static_cast<std::size_t>(it - table_r_.begin());
  const double t = (x - table_r_[i - 1]) / (table_r_[i] - table_r_[i - 1]);
  return table_c_[i - 1] + t * (table_c_[i] - table_c_[i - 1]);
}

double ChordDistribution::area() const {
  if (table_r_.empty()) return kPi * c0_ * span_ / 4.0;
  double a = 0.0;
  for (std::size_t i = 1; i < table_r_.size(); ++i) {
    a += 0.5 * (table_c_[i] + table_c_[i - 1]) * (table_r_[i] - table_r_[i - 1]);
  }
  return a * span_;
}

void AeroConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("aero: rho must be positive");
  if (!(span() > 0.0)) throw std::invalid_argument("aero: span must be positive");
  if (quadrature_points < 8) {
    throw std::invalid_argument("aero: quadrature_points must be at least 8");
  }
  if (chord(0.0) < 0.0 || chord(span()) < 0.0) {
    throw std::invalid_argument("aero: chord must be non-negative");
  }
  if (!v_wind.allFinite()) throw std::invalid_argument("aero: v_wind must be finite");
}

// ---------------------------------------------------------------------------

const GaussRule& gauss_legendre(int n) {
  thread_local int last_n = -1;
  thread_local const GaussRule* last_rule = nullptr;
  if (n == last_n) return *last_rule;

  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    auto rule = std::make_unique<GaussRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        const double pn = (n == 1) ? x : p1;
        const double pnm1 = (n == 1) ? 1.0 : p0;
        dp = n * (x * pn - pnm1) / (x * x - 1.0);
        const double dx = pn / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      rule->nodes[i] = -x;
      rule->nodes[n - 1 - i] = x;
      rule->weights[i] = w;
      rule->weights[n - 1 - i] = w;
    }
    slot = std::move(rule);
  }
  last_n = n;
  last_rule = slot.get();
  return *slot;
}

Vec3 chord_velocity(double r, const WingAeroState& s, const Vec3& v_wind,
                    RotationalTerm term) {
  const ChordFlow flow = chord_flow(s, v_wind, term);
  return flow.a + r * flow.b;
}

std::optional<double> angle_of_attack(const Vec3& u) {
  if (u.norm() == 0.0) return std::nullopt;
  return alpha_of(u);
}

LiftDrag lift_drag_coefficients(double alpha) {
  const double deg = alpha * kDeg;
  return {0.225 + 1.58 * std::sin((2.13 * deg - 7.2) / kDeg),
          1.92 - 1.55 * std::cos((2.04 * deg - 9.82) / kDeg)};
}

LiftDrag lift_drag_slopes(double alpha) {
  const double deg = alpha * kDeg;
  return {1.58 * std::cos((2.13 * deg - 7.2) / kDeg) * 2.13,
          1.55 * std::sin((2.04 * deg - 9.82) / kDeg) * 2.04};
}

AeroResultant blade_element_forces(const WingAeroState& s, const AeroConfig& cfg) {
  AeroResultant out;
  if (!cfg.enabled) return out;
  const ChordFlow flow = chord_flow(s, cfg.v_wind, cfg.rotational_term);
  const double half_rho = 0.5 * cfg.rho;
  span_quadrature(flow, cfg, [&](double r, double w) {
    const Vec3 u = flow.a + r * flow.b;
    const double speed = u.norm();
    if (speed == 0.0) return;
    const LiftDrag c = lift_drag_coefficients(alpha_of(u));
    const double q = half_rho * cfg.chord(r) * w * speed;
    const Vec3 dl = (q * c.cl * sgn(u.x() * u.z())) * e2_cross(u);
    const Vec3 dd = (-q * c.cd) * u;
    out.lift += dl;
    out.drag += dd;
    out.moment += (s.span_sign * r) * e2_cross(dl + dd);
  });
  return out;
}

Mat3 force_velocity_jacobian(const WingAeroState& s, const AeroConfig& cfg) {
  if (!cfg.enabled) return Mat3::Zero();
  const ChordFlow flow = chord_flow(s, cfg.v_wind, cfg.rotational_term);
  const double half_rho = 0.5 * cfg.rho;
  // Columns: dF / d a_k for k in {x, z}; a_y is projected out.
  Mat3 dfda = Mat3::Zero();
  span_quadrature(flow, cfg, [&](double r, double w) {
    const Vec3 u = flow.a + r * flow.b;
    const double speed = u.norm();
    if (speed == 0.0) return;
    const double alpha = alpha_of(u);
    const LiftDrag c = lift_drag_coefficients(alpha);
    const LiftDrag dc = lift_drag_slopes(alpha);
    const double q = half_rho * cfg.chord(r) * w;
    const double sg = sgn(u.x() * u.z());
    const double sin_a = std::abs(u.z()) / speed;
    for (int k : {0, 2}) {
      const Vec3 du = Vec3::Unit(k);
      const double dspeed = u[k] / speed;
      double dalpha;
      if (sin_a >= 1e-6) {
        const double proj = (k == 0 ? 1.0 : 0.0) - u.x() * u[k] / (speed * speed);
        dalpha = -sgn(u.x()) * proj / (sin_a * speed);
      } else {
        const double h = 1e-7 * speed;
        dalpha = (alpha_of(u + h * du) - alpha_of(u - h * du)) / (2.0 * h);
      }
      const Vec3 dl = q * sg *
                      (dc.cl * dalpha * speed * e2_cross(u) +
                       c.cl * speed * e2_cross(du) + c.cl * dspeed * e2_cross(u));
      const Vec3 dd = -q * (dc.cd * dalpha * speed * u + c.cd * dspeed * u +
                            c.cd * speed * du);
      dfda.col(k) += dl + dd;
    }
  });

  // Moving sign-change stations carry the jump of the lift density.
  Breakpoint bp[2];
  const int nbp = span_breakpoints(flow, cfg.span(), bp);
  for (int i = 0; i < nbp; ++i) {
    const int k = bp[i].component;
    const int other = 2 - k;
    Vec3 u = flow.a + bp[i].r * flow.b;
    u[k] = 0.0;
    const double speed = u.norm();
    if (speed == 0.0) continue;
    const double cl = lift_drag_coefficients(k == 2 ? 0.0 : kPi / 2.0).cl;
    const double density = half_rho * cfg.chord(bp[i].r) * cl * speed;
    const double sign_other = sgn(u[other]);
    const double sign_slope = sgn(flow.b[k]);
    // g(r*-) - g(r*+) with lift sign sgn(u_other) * sgn(u_k) on each side.
    const Vec3 jump = density * (-2.0 * sign_other * sign_slope) * e2_cross(u);
    dfda.col(k) += jump * (-1.0 / flow.b[k]);
  }

  Mat3 projector = Mat3::Identity();
  projector(1, 1) = 0.0;
  return dfda * projector * s.Q.transpose() * s.R.transpose();
}

Vec3 perturbed_forces(const WingAeroState& s, const Vec3& dxdot,
                      const AeroConfig& cfg) {
  return force_velocity_jacobian(s, cfg) * dxdot;
}

}  // namespace flapsim
