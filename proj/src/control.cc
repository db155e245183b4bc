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

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "flapsim/errors.h"
#include "flapsim/util.h"

namespace flapsim {
namespace {

constexpr double kPi = std::numbers::pi;

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

// Least-squares slope through the origin of (delta, y - y0) pairs and R^2 of
// that fit over the sweep values.
struct SlopeFit {
  double slope = 0.0;
  double r2 = 1.0;
};

SlopeFit fit_through_nominal(const std::vector<double>& d, const std::vector<double>& y,
                             double y0) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    sxy += d[k] * (y[k] - y0);
    sxx += d[k] * d[k];
  }
  SlopeFit fit;
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  double mean = y0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size() + 1);
  double ss_res = 0.0, ss_tot = (y0 - mean) * (y0 - mean), scale = y0 * y0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double r = y[k] - y0 - fit.slope * d[k];
    ss_res += r * r;
    ss_tot += (y[k] - mean) * (y[k] - mean);
    scale += y[k] * y[k];
  }
  // A response flat to rounding is a perfect (zero-slope) fit.
  fit.r2 = ss_tot <= 1e-20 * scale ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

}  // namespace

KinematicsParams ControlParams::apply(const KinematicsParams& nominal) const {
  KinematicsParams k = nominal;
  k.dphi_m_right = dphi_m_s + dphi_m_k;
  k.dphi_m_left = dphi_m_s - dphi_m_k;
  k.dtheta_0 = dtheta_0;
  k.dtheta_A_m = abdomen_active ? dtheta_A_m : 0.0;
  return k;
}

bool ControlParams::feasible(const KinematicsParams& nominal) const {
  const KinematicsParams k = apply(nominal);
  return is_feasible_flapping(k.right_wing()) && is_feasible_flapping(k.left_wing());
}

void Gains::validate() const {
  for (double g : {K_P, K_D, K_I}) {
    if (!(std::isfinite(g) && g > 0.0)) throw ConfigError("gains K_P, K_D, K_I must be positive");
  }
}

Vec3 pid_demand(const Vec3& e, const Vec3& e_dot, const Vec3& e_int, const Gains& g, double m) {
  return m * (g.K_P * e + g.K_D * e_dot + g.K_I * e_int);
}

std::array<std::complex<double>, 3> characteristic_roots(const Gains& g) {
  Eigen::Matrix3d companion;
  companion << -g.K_D, -g.K_P, -g.K_I, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  const Eigen::Vector3cd ev = Eigen::EigenSolver<Eigen::Matrix3d>(companion).eigenvalues();
  std::array<std::complex<double>, 3> roots = {ev(0), ev(1), ev(2)};
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return roots;
}

SignSplitMean sign_split_mean(const std::vector<double>& t, const std::vector<double>& f) {
  if (t.size() != f.size() || t.size() < 2) {
    throw std::invalid_argument("sign_split_mean: need matching time and value samples");
  }
  double ip = 0.0, in = 0.0, dp = 0.0, dn = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    const double a = f[i], b = f[i + 1];
    total += 0.5 * dt * (a + b);
    if (a >= 0.0 && b >= 0.0) {
      if (a > 0.0 || b > 0.0) ip += 0.5 * dt * (a + b), dp += dt;
    } else if (a <= 0.0 && b <= 0.0) {
      in += 0.5 * dt * (a + b), dn += dt;
    } else {
      const double s = a / (a - b);  // crossing fraction
      const double d1 = s * dt, d2 = (1.0 - s) * dt;
      if (a > 0.0) {
        ip += 0.5 * a * d1, dp += d1;
        in += 0.5 * b * d2, dn += d2;
      } else {
        in += 0.5 * a * d1, dn += d1;
        ip += 0.5 * b * d2, dp += d2;
      }
    }
  }
  SignSplitMean m;
  m.positive_duration = dp;
  m.negative_duration = dn;
  if (dp > 0.0) m.positive = ip / dp;
  if (dn > 0.0) m.negative = in / dn;
  m.mean = total / (t.back() - t.front());
  return m;
}

const char* control_parameter_name(int p) {
  static const char* names[] = {"dphi_m_s", "dphi_m_k", "dtheta_0", "dtheta_A_m"};
  return p >= 0 && p < kControlParameterCount ? names[p] : "?";
}

void SweepSpec::validate() const {
  if (!(half_width > 0.0 && std::isfinite(half_width))) {
    throw ConfigError("sweep half_width must be positive (a zero-width sweep has no slope)");
  }
  if (points < 3) throw ConfigError("sweep needs at least 3 points");
}

PeriodMeans period_means(const Trajectory& traj) {
  std::vector<double> t;
  std::array<std::vector<double>, 3> f;
  double scale = 0.0;
  for (const TrajectorySample& s : traj.samples) {
    t.push_back(s.t);
    for (int c = 0; c < 3; ++c) f[c].push_back(s.f_a(c));
    scale = std::max(scale, s.f_a.lpNorm<Eigen::Infinity>());
  }
  // Components that cancel by symmetry carry only rounding noise; treat them
  // as zero so they have no sign branches.
  for (auto& fc : f) {
    for (double& v : fc) {
      if (std::abs(v) <= 1e-12 * scale) v = 0.0;
    }
  }
  PeriodMeans m;
  for (int c = 0; c < 3; ++c) m.component[c] = sign_split_mean(t, f[c]);
  return m;
}

double SensitivityTable::slope(int p, int c, int sign) const {
  const ParameterSweep& s = sweeps[p];
  if (sign == 0) return s.slope_mean[c];
  const std::optional<double>& branch = sign > 0 ? s.slope_p[c] : s.slope_n[c];
  return branch ? *branch : s.slope_mean[c];
}

SensitivityTable identify_sensitivities(const ReferenceOrbit& orbit, const SweepSpec& spec) {
  spec.validate();
  SimConfig sim;
  sim.steps_per_period = orbit.steps_per_period();
  const KinematicsParams& nominal = orbit.params();

  std::vector<double> grid;
  for (int k = 0; k < spec.points; ++k) {
    const double d = -spec.half_width + 2.0 * spec.half_width * k / (spec.points - 1);
    if (std::abs(d) > 1e-12 * spec.half_width) grid.push_back(d);
  }
  const int per = static_cast<int>(grid.size());
  std::vector<PeriodMeans> results(1 + kControlParameterCount * per);
  parallel_for(static_cast<int>(results.size()), [&](int job) {
    ControlParams cp;
    if (job > 0) {
      const int p = (job - 1) / per;
      const double d = grid[(job - 1) % per];
      double* field[] = {&cp.dphi_m_s, &cp.dphi_m_k, &cp.dtheta_0, &cp.dtheta_A_m};
      *field[p] = d;
      if (!cp.feasible(nominal)) {
        throw ConfigError(std::string("sweep of ") + control_parameter_name(p) +
                          " leaves the flapping bound; reduce half_width");
      }
    }
    const Trajectory tr = integrate(Vec3::Zero(), orbit.initial_velocity(), cp.apply(nominal),
                                    orbit.morphology(), sim);
    results[job] = period_means(tr);
  });

  SensitivityTable table;
  table.spec = spec;
  table.nominal = results[0];
  for (int p = 0; p < kControlParameterCount; ++p) {
    ParameterSweep& s = table.sweeps[p];
    s.deltas = grid;
    s.means.assign(results.begin() + 1 + p * per, results.begin() + 1 + (p + 1) * per);
    for (int c = 0; c < 3; ++c) {
      const SignSplitMean& n0 = table.nominal.component[c];
      const auto branch = [&](bool positive, std::optional<double>* slope, double* r2) {
        const std::optional<double>& y0 = positive ? n0.positive : n0.negative;
        if (!y0) return;
        std::vector<double> d, y;
        for (int k = 0; k < per; ++k) {
          const std::optional<double>& v =
              positive ? s.means[k].component[c].positive : s.means[k].component[c].negative;
          if (v) d.push_back(grid[k]), y.push_back(*v);
        }
        if (d.empty()) return;
        const SlopeFit fit = fit_through_nominal(d, y, *y0);
        *slope = fit.slope;
        *r2 = fit.r2;
        if (fit.r2 < 0.9) s.flagged = true;
      };
      branch(true, &s.slope_p[c], &s.r2_p[c]);
      branch(false, &s.slope_n[c], &s.r2_n[c]);
      std::vector<double> y;
      for (int k = 0; k < per; ++k) y.push_back(s.means[k].component[c].mean);
      const SlopeFit fit = fit_through_nominal(grid, y, n0.mean);
      s.slope_mean[c] = fit.slope;
      s.r2_mean[c] = fit.r2;
    }
  }
  return table;
}

std::optional<Vec3> minimum_norm_solution(const Mat23& S, const Eigen::Vector2d& d) {
  const Eigen::Matrix2d sst = S * S.transpose();
  const double det = sst.determinant();
  if (!(std::abs(det) > 1e-12 * sst.squaredNorm())) return std::nullopt;
  return Vec3(S.transpose() * sst.inverse() * d);
}

Mat23 longitudinal_sensitivity(const SensitivityTable& table, const BranchSigns& signs) {
  const int rows[2] = {0, 2};
  const int cols[3] = {kDphiMs, kDtheta0, kDthetaAm};
  Mat23 S;
  for (int r = 0; r < 2; ++r) {
    for (int j = 0; j < 3; ++j) S(r, j) = table.slope(cols[j], rows[r], signs.sign[rows[r]]);
  }
  return S;
}

Allocation allocate(const Vec3& demand, const SensitivityTable& table, const BranchSigns& signs,
                    bool abdomen_active) {
  Allocation out;
  out.params.abdomen_active = abdomen_active;
  const Mat23 S = longitudinal_sensitivity(table, signs);
  const Eigen::Vector2d d(demand(0), demand(2));
  if (abdomen_active) {
    const std::optional<Vec3> u = minimum_norm_solution(S, d);
    if (!u) {
      out.ok = false;
      return out;
    }
    out.params.dphi_m_s = (*u)(0);
    out.params.dtheta_0 = (*u)(1);
    out.params.dtheta_A_m = (*u)(2);
  } else {
    const Eigen::Matrix2d S2 = S.leftCols<2>();
    const double det = S2.determinant();
    if (!(std::abs(det) > 1e-12 * S2.squaredNorm())) {
      out.ok = false;
      return out;
    }
    const Eigen::Vector2d u = S2.inverse() * d;
    out.params.dphi_m_s = u(0);
    out.params.dtheta_0 = u(1);
  }
  const double k = table.slope(kDphiMk, 1, signs.sign[1]);
  if (!(std::abs(k) > 1e-9 * S.cwiseAbs().maxCoeff())) {
    out.ok = false;
    return out;
  }
  out.params.dphi_m_k = demand(1) / k;
  return out;
}

const char* to_string(ControlCadence c) {
  return c == ControlCadence::kPerCycle ? "per_cycle" : "per_step";
}

ControlCadence control_cadence_from_string(const std::string& s) {
  if (s == "per_step") return ControlCadence::kPerStep;
  if (s == "per_cycle") return ControlCadence::kPerCycle;
  throw ConfigError("cadence must be \"per_step\" or \"per_cycle\", got \"" + s + "\"");
}

void ControllerConfig::validate() const {
  if (!(integral_clamp > 0.0)) throw ConfigError("integral_clamp must be positive");
  if (!(max_delta > 0.0)) throw ConfigError("max_delta must be positive");
  if (!(flapping_margin >= 0.0 && flapping_margin < 0.5)) {
    throw ConfigError("flapping_margin must be in [0, 0.5)");
  }
}

HoverController::HoverController(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                 const Gains& gains, const ControllerConfig& config)
    : orbit_(orbit), table_(table), gains_(gains), config_(config), applied_(orbit.params()) {
  config_.validate();
  current_.abdomen_active = config_.abdomen_active;
  if (config_.lateral_phase_weighted && config_.cadence == ControlCadence::kPerStep) {
    const int n = orbit.steps_per_period();
    const double h = 1e-5;
    for (int k = 0; k < n; ++k) {
      const double t = orbit.period() * k / n;
      const auto f2 = [&](double d) {
        ControlParams c;
        c.dphi_m_k = d;
        return evaluate_model(t, orbit.velocity(t), c.apply(orbit.params()), orbit.morphology())
            .f_a(1);
      };
      lateral_gain_.push_back((f2(h) - f2(-h)) / (2 * h));
      lateral_power_ += lateral_gain_.back() * lateral_gain_.back() / n;
    }
  }
}

double HoverController::lateral_input(double t, double demand, double fallback) const {
  if (config_.cadence == ControlCadence::kPerCycle || lateral_gain_.empty() ||
      !(lateral_power_ > 0.0)) {
    return fallback;
  }
  const int n = static_cast<int>(lateral_gain_.size());
  double s = t / orbit_.period() * n;
  s -= n * std::floor(s / n);
  const int k = std::min(static_cast<int>(s), n - 1);
  const double w = s - k;
  const double g = (1 - w) * lateral_gain_[k] + w * lateral_gain_[(k + 1) % n];
  return demand * g / lateral_power_;
}

BranchSigns HoverController::signs_at(double t) const {
  BranchSigns s;
  if (config_.cadence == ControlCadence::kPerStep && config_.sign_split) {
    const Vec3 f = orbit_.coupled_force(t);
    for (int c = 0; c < 3; ++c) s.sign[c] = sign_of(f(c));
  } else {
    s.sign = {0, 0, 0};
  }
  return s;
}

ControlParams HoverController::law(double t, const Vec3& e, const Vec3& e_dot,
                                   const Vec3& e_int) const {
  const Vec3 demand = pid_demand(e, e_dot, e_int, gains_, orbit_.morphology().total_mass());
  const Allocation a = allocate(demand, table_, signs_at(t), config_.abdomen_active);
  ControlParams p;
  p.abdomen_active = config_.abdomen_active;
  if (!a.ok) return p;
  p = a.params;
  p.dphi_m_k = lateral_input(t, demand(1), p.dphi_m_k);
  return p;
}

void HoverController::begin_step(double t, int step, const Vec3& x, const Vec3& x_dot,
                                 const Vec3& integral) {
  integral_ = integral;
  const int n = orbit_.steps_per_period();
  if (config_.cadence == ControlCadence::kPerCycle && step % n != 0) return;
  const Vec3 e = orbit_.position(t) - x;
  const Vec3 e_dot = orbit_.velocity(t) - x_dot;
  const Vec3 demand = pid_demand(e, e_dot, integral, gains_, orbit_.morphology().total_mass());
  const Allocation a = allocate(demand, table_, signs_at(t), config_.abdomen_active);
  ControlParams p = current_;
  if (a.ok) {
    p = a.params;
    p.dphi_m_k = lateral_input(t, demand(1), p.dphi_m_k);
  } else {
    ++failures_;
  }
  bool saturated = false;
  const auto clamp = [&](double v, double lo, double hi) {
    const double c = std::clamp(v, lo, hi);
    if (c != v) saturated = true;
    return c;
  };
  const double md = config_.max_delta;
  p.dphi_m_s = clamp(p.dphi_m_s, -md, md);
  p.dphi_m_k = clamp(p.dphi_m_k, -md, md);
  p.dtheta_0 = clamp(p.dtheta_0, -md, md);
  p.dtheta_A_m = config_.abdomen_active ? clamp(p.dtheta_A_m, -md, md) : 0.0;
  // Keep |phi_m + dphi| + |phi_0| below pi/2 on each wing.
  const WingWaveformParams& w = orbit_.params().wing;
  const double room = kPi / 2 - config_.flapping_margin - std::abs(w.phi_0);
  const double dr = clamp(p.dphi_m_s + p.dphi_m_k, -room - w.phi_m, room - w.phi_m);
  const double dl = clamp(p.dphi_m_s - p.dphi_m_k, -room - w.phi_m, room - w.phi_m);
  p.dphi_m_s = 0.5 * (dr + dl);
  p.dphi_m_k = 0.5 * (dr - dl);
  p.abdomen_active = config_.abdomen_active;
  saturated_ = saturated;
  current_ = p;
  applied_ = p.apply(orbit_.params());
}

KinematicsParams HoverController::kinematics(double, const Vec3&, const Vec3&,
                                             const Vec3&) const {
  return applied_;
}

Vec3 HoverController::integral_rate(double t, const Vec3& x) const {
  Vec3 rate = orbit_.position(t) - x;
  // Conditional integration: while saturated, do not grow the integral.
  if (saturated_) {
    for (int c = 0; c < 3; ++c) {
      if (rate(c) * integral_(c) > 0.0) rate(c) = 0.0;
    }
  }
  if (integral_.norm() >= config_.integral_clamp && rate.dot(integral_) > 0.0) {
    rate -= integral_.dot(rate) / integral_.squaredNorm() * integral_;
  }
  return rate;
}

ClosedLoopResult closed_loop_run(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                 const Gains& gains, const ControllerConfig& config,
                                 const Vec3& dx0, const Vec3& dxdot0,
                                 const ClosedLoopOptions& options) {
  if (options.max_periods < 1) throw ConfigError("max_periods must be >= 1");
  HoverController controller(orbit, table, gains, config);
  SimConfig sim;
  sim.steps_per_period = orbit.steps_per_period();
  sim.periods = options.max_periods;
  sim.record_stride = options.record_stride > 0 ? options.record_stride : sim.steps_per_period;
  ClosedLoopResult out;
  const double T = orbit.period();
  const auto on_period = [&](int k, const Vec3& x, const Vec3& x_dot, const Vec3&) {
    const double ex = (x - orbit.position(k * T)).norm();
    const double ev = (x_dot - orbit.velocity(k * T)).norm();
    out.position_error.push_back(ex);
    out.velocity_error.push_back(ev);
    if (ex < options.tolerance && ev < options.tolerance) {
      out.converged = true;
      out.cycles_to_converge = k;
      return false;
    }
    if (ex > options.divergence_radius) {
      out.diverged = true;
      out.failure_time = k * T;
      return false;
    }
    return true;
  };
  try {
    out.trajectory = integrate(orbit.position(0.0) + dx0, orbit.velocity(0.0) + dxdot0,
                               orbit.params(), orbit.morphology(), sim, &controller, on_period);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.failure_time = e.last_valid_time();
  }
  return out;
}

namespace {

// Closed-loop right-hand side in (dx, dxdot, dI) about the orbit.
VecX closed_loop_rhs(double t, const VecX& d, const ReferenceOrbit& orbit,
                     const HoverController& ctl) {
  const Vec3 dx = d.segment<3>(0), dv = d.segment<3>(3), di = d.segment<3>(6);
  const ControlParams p = ctl.law(t, -dx, -dv, -di);
  const Vec3 acc =
      evaluate_model(t, orbit.velocity(t) + dv, p.apply(orbit.params()), orbit.morphology())
          .x_ddot;
  VecX out(9);
  out << dv, acc, dx;
  return out;
}

}  // namespace

MatX closedloop_A(double t, const ReferenceOrbit& orbit, const SensitivityTable& table,
                  const Gains& gains, const ControllerConfig& config) {
  const HoverController ctl(orbit, table, gains, config);
  return numeric_jacobian(
      [&](const VecX& d) { return closed_loop_rhs(t, d, orbit, ctl); }, VecX::Zero(9));
}

PeriodicLinearSystem closedloop_system(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                       const Gains& gains, const ControllerConfig& config) {
  auto ctl = std::make_shared<const HoverController>(orbit, table, gains, config);
  return PeriodicLinearSystem(9, orbit.period(), [ctl, &orbit](double t) {
    return numeric_jacobian(
        [&](const VecX& d) { return closed_loop_rhs(t, d, orbit, *ctl); }, VecX::Zero(9));
  });
}

std::vector<RoaSample> roa_monte_carlo(const ReferenceOrbit& orbit, const SensitivityTable& table,
                                       const Gains& gains, const ControllerConfig& config,
                                       int samples, double radius, std::uint64_t seed,
                                       const ClosedLoopOptions& options) {
  if (samples < 0) throw ConfigError("samples must be >= 0");
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  std::vector<RoaSample> out(samples);
  Rng rng(seed);
  for (RoaSample& s : out) {
    const double r = radius * rng.uniform();
    const double a = 2.0 * kPi * rng.uniform();
    s.e_x = r * std::cos(a);
    s.e_z = r * std::sin(a);
  }
  ClosedLoopOptions opt = options;
  opt.record_stride = 0;
  parallel_for(samples, [&](int i) {
    const ClosedLoopResult r = closed_loop_run(orbit, table, gains, config,
                                               Vec3(out[i].e_x, 0.0, out[i].e_z), Vec3::Zero(),
                                               opt);
    out[i].converged = r.converged;
    out[i].cycles = r.cycles_to_converge;
  });
  return out;
}

}  // namespace flapsim
