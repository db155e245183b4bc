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

#include "flapsim/orbit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "flapsim/errors.h"
#include "flapsim/util.h"

namespace flapsim {
namespace {

constexpr double kPi = std::numbers::pi;
// Objective assigned to infeasible or divergent points; kept finite so the
// simplex can still rank them.
constexpr double kInfeasibleObjective = 1e6;

using VecX = Eigen::VectorXd;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Normalized coordinates z in [0, 1] over the active entries.
class Normalizer {
 public:
  explicit Normalizer(const OrbitProblem& p) : problem_(p), active_(p.active_indices()) {}

  int size() const { return static_cast<int>(active_.size()); }

  VecX to_unit(const OrbitVector& v) const {
    VecX z(size());
    for (int i = 0; i < size(); ++i) {
      const Bound& b = problem_.bounds[active_[i]];
      z(i) = (v(active_[i]) - b.lo) / (b.hi - b.lo);
    }
    return z;
  }

  OrbitVector from_unit(const VecX& z, const OrbitVector& base) const {
    OrbitVector v = base;
    for (int i = 0; i < size(); ++i) {
      const Bound& b = problem_.bounds[active_[i]];
      v(active_[i]) = b.lo + std::clamp(z(i), 0.0, 1.0) * (b.hi - b.lo);
    }
    return problem_.sanitize(v);
  }

 private:
  const OrbitProblem& problem_;
  std::vector<int> active_;
};

double penalized(const ObjectiveValue& o, double lambda) {
  return o.J + lambda * o.residual_squared();
}

// Nelder-Mead with dimension-adaptive coefficients. Returns the best vertex;
// never worse than the starting point.
template <typename F>
VecX nelder_mead(const F& f, const VecX& z0, double size, int budget, double* f_best,
                 int* used) {
  const int n = static_cast<int>(z0.size());
  const double alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 0.5 / n,
               delta = 1.0 - 1.0 / n;
  std::vector<VecX> x(n + 1, z0);
  std::vector<double> fx(n + 1);
  int evals = 0;
  const auto eval = [&](const VecX& z) {
    ++evals;
    return f(z);
  };
  fx[0] = eval(z0);
  for (int i = 0; i < n && evals < budget; ++i) {
    // Step inward when the start sits on the upper bound.
    x[i + 1](i) += (z0(i) + size <= 1.0) ? size : -size;
    fx[i + 1] = eval(x[i + 1]);
  }
  if (evals < n + 1) {
    *f_best = fx[0];
    *used = evals;
    return z0;
  }
  std::vector<int> order(n + 1);
  while (evals < budget) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    double span = 0.0;
    for (int i = 1; i <= n; ++i) span = std::max(span, (x[order[i]] - x[best]).lpNorm<Eigen::Infinity>());
    if (span < 1e-10 || std::abs(fx[worst] - fx[best]) < 1e-15 * (1.0 + std::abs(fx[best]))) break;
    VecX centroid = VecX::Zero(n);
    for (int i = 0; i < n; ++i) centroid += x[order[i]];
    centroid /= n;
    const VecX xr = centroid + alpha * (centroid - x[worst]);
    const double fr = eval(xr);
    if (fr < fx[best]) {
      const VecX xe = centroid + beta * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        x[worst] = xe, fx[worst] = fe;
      } else {
        x[worst] = xr, fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[second]) {
      x[worst] = xr, fx[worst] = fr;
      continue;
    }
    const bool outside = fr < fx[worst];
    const VecX xc = outside ? VecX(centroid + gamma * (xr - centroid))
                            : VecX(centroid - gamma * (centroid - x[worst]));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fx[worst])) {
      x[worst] = xc, fx[worst] = fc;
      continue;
    }
    for (int i = 1; i <= n && evals < budget; ++i) {
      const int k = order[i];
      x[k] = x[best] + delta * (x[k] - x[best]);
      fx[k] = eval(x[k]);
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (fx[i] < fx[best]) best = i;
  }
  *f_best = fx[best];
  *used = evals;
  return x[best];
}

// Global-best particle swarm in the unit box; deterministic for a seed.
template <typename F>
VecX particle_swarm(const F& f, const VecX& center, double spread, int particles,
                    int iterations, std::uint64_t seed, double* f_best, int* used) {
  const int n = static_cast<int>(center.size());
  Rng rng(seed);
  std::vector<VecX> pos(particles), vel(particles), best(particles);
  std::vector<double> fbest(particles);
  VecX global = center;
  double fglobal = f(center);
  int evals = 1;
  const auto in_box = [&](VecX z) {
    for (int j = 0; j < n; ++j) z(j) = std::clamp(z(j), 0.0, 1.0);
    return z;
  };
  for (int p = 0; p < particles; ++p) {
    pos[p] = VecX(n);
    vel[p] = VecX::Zero(n);
    for (int j = 0; j < n; ++j) pos[p](j) = center(j) + spread * rng.uniform(-1.0, 1.0);
    pos[p] = in_box(pos[p]);
    best[p] = pos[p];
    fbest[p] = f(pos[p]);
    ++evals;
    if (fbest[p] < fglobal) fglobal = fbest[p], global = pos[p];
  }
  const double inertia = 0.72, c1 = 1.49, c2 = 1.49;
  for (int it = 0; it < iterations; ++it) {
    for (int p = 0; p < particles; ++p) {
      for (int j = 0; j < n; ++j) {
        vel[p](j) = inertia * vel[p](j) + c1 * rng.uniform() * (best[p](j) - pos[p](j)) +
                    c2 * rng.uniform() * (global(j) - pos[p](j));
      }
      pos[p] = in_box(pos[p] + vel[p]);
      const double fp = f(pos[p]);
      ++evals;
      if (fp < fbest[p]) fbest[p] = fp, best[p] = pos[p];
      if (fp < fglobal) fglobal = fp, global = pos[p];
    }
  }
  *f_best = fglobal;
  *used = evals;
  return global;
}

Vec6 residual_vector(const ObjectiveValue& o) {
  Vec6 r;
  r << o.position_residual, o.velocity_residual;
  return r;
}

}  // namespace

const char* to_string(AbdomenMode mode) {
  return mode == AbdomenMode::kFixed ? "fixed" : "undulating";
}

AbdomenMode abdomen_mode_from_string(const std::string& s) {
  if (s == "undulating") return AbdomenMode::kUndulating;
  if (s == "fixed") return AbdomenMode::kFixed;
  throw ConfigError("abdomen_mode must be \"undulating\" or \"fixed\", got \"" + s + "\"");
}

const std::array<std::string, kOrbitDimension>& orbit_parameter_keys() {
  static const std::array<std::string, kOrbitDimension> keys = {
      "f",         "beta",      "phi_m",     "phi_K",     "phi_0",     "theta_m",
      "theta_C",   "theta_0",   "theta_a",   "psi_m",     "psi_0",     "psi_a",
      "theta_B_m", "theta_B_0", "theta_B_a", "theta_A_m", "theta_A_0", "theta_A_a",
      "xdot1_0",   "xdot2_0",   "xdot3_0"};
  return keys;
}

OrbitVector pack_decision(const KinematicsParams& k, const Vec3& x_dot0) {
  const WingWaveformParams& w = k.wing;
  const BodyAbdomenParams& b = k.body;
  OrbitVector v;
  v << w.f, w.beta, w.phi_m, w.phi_K, w.phi_0, w.theta_m, w.theta_C, w.theta_0, w.theta_a,
      w.psi_m, w.psi_0, w.psi_a, b.theta_B_m, b.theta_B_0, b.theta_B_a, b.theta_A_m,
      b.theta_A_0, b.theta_A_a, x_dot0;
  return v;
}

KinematicsParams unpack_kinematics(const OrbitVector& v, const KinematicsParams& base) {
  KinematicsParams k;
  k.wing.psi_N = base.wing.psi_N;
  k.body.abdomen_fixed = base.body.abdomen_fixed;
  WingWaveformParams& w = k.wing;
  BodyAbdomenParams& b = k.body;
  w.f = v(kF);
  w.beta = v(kBeta);
  w.phi_m = v(kPhiM);
  w.phi_K = v(kPhiK);
  w.phi_0 = v(kPhi0);
  w.theta_m = v(kThetaM);
  w.theta_C = v(kThetaC);
  w.theta_0 = v(kTheta0);
  w.theta_a = v(kThetaA);
  w.psi_m = v(kPsiM);
  w.psi_0 = v(kPsi0);
  w.psi_a = v(kPsiA);
  b.theta_B_m = v(kThetaBm);
  b.theta_B_0 = v(kThetaB0);
  b.theta_B_a = v(kThetaBa);
  b.theta_A_m = v(kThetaAm);
  b.theta_A_0 = v(kThetaA0);
  b.theta_A_a = v(kThetaAa);
  return k;
}

OrbitBounds default_orbit_bounds() {
  const Bound amplitude{0.0, kPi / 2}, phase{-kPi, kPi}, offset{-kPi / 2, kPi / 2};
  OrbitBounds b;
  b[kF] = {5.0, 20.0};
  b[kBeta] = offset;
  b[kPhiM] = amplitude;
  b[kPhiK] = {0.05, 1.0};
  b[kPhi0] = offset;
  b[kThetaM] = amplitude;
  b[kThetaC] = {0.1, 10.0};
  b[kTheta0] = offset;
  b[kThetaA] = phase;
  b[kPsiM] = amplitude;
  b[kPsi0] = offset;
  b[kPsiA] = phase;
  b[kThetaBm] = amplitude;
  b[kThetaB0] = offset;
  b[kThetaBa] = phase;
  b[kThetaAm] = amplitude;
  b[kThetaA0] = offset;
  b[kThetaAa] = phase;
  b[kXdot1] = b[kXdot2] = b[kXdot3] = {-1.0, 1.0};
  return b;
}

void OptimizerConfig::validate() const {
  if (starts < 1) throw ConfigError("optimizer.starts must be >= 1");
  if (!(start_spread >= 0.0 && start_spread <= 1.0)) {
    throw ConfigError("optimizer.start_spread must be in [0, 1]");
  }
  if (!(initial_simplex > 0.0 && initial_simplex <= 0.5)) {
    throw ConfigError("optimizer.initial_simplex must be in (0, 0.5]");
  }
  if (evaluations_per_stage < 0) throw ConfigError("optimizer.evaluations_per_stage must be >= 0");
  if (!(lambda_start > 0.0 && lambda_end >= lambda_start && lambda_factor > 1.0)) {
    throw ConfigError("optimizer penalty schedule needs 0 < lambda_start <= lambda_end, factor > 1");
  }
  if (particle_swarm && (swarm_size < 2 || swarm_iterations < 1)) {
    throw ConfigError("optimizer swarm needs swarm_size >= 2 and swarm_iterations >= 1");
  }
  if (polish_iterations < 0) throw ConfigError("optimizer.polish_iterations must be >= 0");
  if (!(residual_tolerance > 0.0)) throw ConfigError("optimizer.residual_tolerance must be > 0");
}

std::vector<int> OrbitProblem::active_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < kOrbitDimension; ++i) {
    if (mode == AbdomenMode::kFixed && (i == kThetaAm || i == kThetaAa)) continue;
    idx.push_back(i);
  }
  return idx;
}

KinematicsParams OrbitProblem::kinematics(const OrbitVector& v) const {
  KinematicsParams base;
  base.wing.psi_N = psi_N;
  base.body.abdomen_fixed = mode == AbdomenMode::kFixed;
  return unpack_kinematics(sanitize(v), base);
}

OrbitVector OrbitProblem::sanitize(const OrbitVector& v) const {
  OrbitVector out;
  for (int i = 0; i < kOrbitDimension; ++i) out(i) = std::clamp(v(i), bounds[i].lo, bounds[i].hi);
  if (mode == AbdomenMode::kFixed) out(kThetaAm) = out(kThetaAa) = 0.0;
  return out;
}

void OrbitProblem::validate() const {
  const auto& keys = orbit_parameter_keys();
  for (int i = 0; i < kOrbitDimension; ++i) {
    const Bound& b = bounds[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw ConfigError("bounds for " + keys[i] + " must be finite with lo < hi");
    }
    if (!std::isfinite(initial(i))) throw ConfigError("initial " + keys[i] + " is not finite");
    const bool inactive = mode == AbdomenMode::kFixed && (i == kThetaAm || i == kThetaAa);
    if (!inactive && (initial(i) < b.lo || initial(i) > b.hi)) {
      std::ostringstream msg;
      msg << "initial " << keys[i] << " = " << initial(i) << " outside bounds [" << b.lo
          << ", " << b.hi << "]";
      throw ConfigError(msg.str());
    }
  }
  if (!(w1 >= 0.0 && w2 >= 0.0 && w1 + w2 > 0.0)) {
    throw ConfigError("objective weights must be non-negative and not both zero");
  }
  if (psi_N != 1 && psi_N != 2) throw ConfigError("psi_N must be 1 or 2");
  morph.validate();
  sim.validate();
  optimizer.validate();
}

double energy_objective(const Trajectory& traj, double mass, double g, double w1, double w2) {
  const auto& s = traj.samples;
  if (s.size() < 2 || traj.period <= 0.0) return 0.0;
  const Vec3 x0 = s.front().x;
  const auto e_abs = [&](const TrajectorySample& p) {
    return std::abs(energy(p.x - x0, p.x_dot, mass, g));
  };
  double int_e = 0.0, int_edot = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double dt = s[i + 1].t - s[i].t;
    int_e += 0.5 * dt * (e_abs(s[i]) + e_abs(s[i + 1]));
    int_edot += 0.5 * dt * (std::abs(s[i].E_dot) + std::abs(s[i + 1].E_dot));
  }
  return (w1 * int_e + w2 * int_edot) / traj.period;
}

namespace {

struct Simulated {
  ObjectiveValue value;
  Trajectory traj;
};

Simulated simulate_decision(const OrbitProblem& problem, const OrbitVector& v, bool torques) {
  Simulated out;
  ObjectiveValue& o = out.value;
  const KinematicsParams k = problem.kinematics(v);
  try {
    k.wing.validate();
  } catch (const std::invalid_argument& e) {
    o.feasible = false;
    o.J = kInfeasibleObjective;
    o.diagnostic = e.what();
    return out;
  }
  const double excess = std::abs(k.wing.phi_m) + std::abs(k.wing.phi_0) - kPi / 2;
  if (excess >= 0.0) {
    o.feasible = false;
    o.J = kInfeasibleObjective * (1.0 + excess);
    o.diagnostic = "flapping amplitude bound violated";
    return out;
  }
  SimConfig sim = problem.sim;
  sim.periods = 1;
  sim.record_stride = 1;
  sim.record_torques = torques;
  try {
    out.traj = integrate(Vec3::Zero(), unpack_velocity(v), k, problem.morph, sim);
  } catch (const DivergenceError& e) {
    o.feasible = false;
    o.J = kInfeasibleObjective;
    o.diagnostic = e.what();
    return out;
  }
  o.J = energy_objective(out.traj, problem.morph.total_mass(), problem.morph.g, problem.w1,
                         problem.w2);
  o.position_residual = out.traj.final_x;
  o.velocity_residual = out.traj.final_x_dot - unpack_velocity(v);
  return out;
}

}  // namespace

ObjectiveValue evaluate_objective(const OrbitProblem& problem, const OrbitVector& v) {
  return simulate_decision(problem, v, false).value;
}

OrbitSolution make_solution(const OrbitProblem& problem, const OrbitVector& v) {
  const OrbitVector clean = problem.sanitize(v);
  Simulated s = simulate_decision(problem, clean, true);
  OrbitSolution sol;
  sol.mode = problem.mode;
  sol.decision = clean;
  sol.kinematics = problem.kinematics(clean);
  sol.x_dot0 = unpack_velocity(clean);
  sol.J = s.value.J;
  sol.position_residual = s.value.position_residual;
  sol.velocity_residual = s.value.velocity_residual;
  sol.residual_norm = s.value.feasible ? s.value.residual_norm()
                                       : std::numeric_limits<double>::infinity();
  sol.converged = s.value.feasible && sol.residual_norm < problem.optimizer.residual_tolerance;
  sol.diagnostics = s.value.diagnostic;
  sol.w1 = problem.w1;
  sol.w2 = problem.w2;
  sol.morph = problem.morph;
  sol.sim = problem.sim;
  sol.sim.periods = 1;
  sol.sim.record_stride = 1;
  sol.trajectory = std::move(s.traj);
  return sol;
}

OrbitVector polish_periodicity(const OrbitProblem& problem, const OrbitVector& v,
                               int iterations, double tolerance, int* evaluations) {
  const Normalizer norm(problem);
  const int n = norm.size();
  OrbitVector current = problem.sanitize(v);
  VecX z = norm.to_unit(current);
  ObjectiveValue o = evaluate_objective(problem, current);
  int evals = 1;
  for (int it = 0; it < iterations && o.feasible; ++it) {
    if (o.residual_norm() < tolerance) break;
    const Vec6 r = residual_vector(o);
    Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
    const double h = 1e-7;
    for (int j = 0; j < n; ++j) {
      VecX zp = z;
      // One-sided step pointing into the box.
      const double step = z(j) + h <= 1.0 ? h : -h;
      zp(j) += step;
      const ObjectiveValue op = evaluate_objective(problem, norm.from_unit(zp, current));
      ++evals;
      if (!op.feasible) {
        jac.col(j).setZero();
        continue;
      }
      jac.col(j) = (residual_vector(op) - r) / step;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
    cod.setThreshold(1e-10);
    const VecX dz = -cod.solve(Eigen::MatrixXd(r));
    bool improved = false;
    for (double a = 1.0; a > 1e-3; a *= 0.5) {
      const VecX trial = z + a * dz;
      const OrbitVector tv = norm.from_unit(trial, current);
      const ObjectiveValue ot = evaluate_objective(problem, tv);
      ++evals;
      if (ot.feasible && ot.residual_squared() < o.residual_squared()) {
        z = norm.to_unit(tv);
        current = tv;
        o = ot;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (evaluations) *evaluations += evals;
  return current;
}

OrbitSolution optimize(const OrbitProblem& problem) {
  problem.validate();
  const OptimizerConfig& cfg = problem.optimizer;
  const Normalizer norm(problem);
  const OrbitVector base = problem.sanitize(problem.initial);
  const VecX z_initial = norm.to_unit(base);

  // Start points: the initial guess, deterministic perturbations of it, and
  // optionally the swarm's best.
  const int n_starts = cfg.starts + (cfg.particle_swarm ? 1 : 0);
  std::vector<VecX> starts(n_starts, z_initial);
  std::vector<int> start_evals(n_starts, 0);
  for (int s = 1; s < cfg.starts; ++s) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    for (int j = 0; j < norm.size(); ++j) {
      starts[s](j) = std::clamp(z_initial(j) + cfg.start_spread * rng.uniform(-1.0, 1.0), 0.0, 1.0);
    }
  }
  if (cfg.particle_swarm) {
    const auto f = [&](const VecX& z) {
      return penalized(evaluate_objective(problem, norm.from_unit(z, base)), cfg.lambda_start);
    };
    double fb = 0.0;
    int used = 0;
    starts[cfg.starts] = particle_swarm(f, z_initial, cfg.start_spread, cfg.swarm_size,
                                        cfg.swarm_iterations,
                                        derive_seed(cfg.seed, 0xFFFFull), &fb, &used);
    start_evals[cfg.starts] = used;
  }

  std::vector<OrbitVector> results(n_starts);
  std::vector<ObjectiveValue> values(n_starts);
  parallel_for(n_starts, [&](int s) {
    VecX z = starts[s];
    int evals = 0;
    for (double lambda = cfg.lambda_start; lambda <= cfg.lambda_end * (1 + 1e-12);
         lambda *= cfg.lambda_factor) {
      const auto f = [&](const VecX& zz) {
        return penalized(evaluate_objective(problem, norm.from_unit(zz, base)), lambda);
      };
      double fb = 0.0;
      int used = 0;
      z = nelder_mead(f, z, cfg.initial_simplex, cfg.evaluations_per_stage, &fb, &used);
      evals += used;
    }
    OrbitVector v = norm.from_unit(z, base);
    if (cfg.polish) {
      v = polish_periodicity(problem, v, cfg.polish_iterations, 0.01 * cfg.residual_tolerance,
                             &evals);
    }
    results[s] = v;
    values[s] = evaluate_objective(problem, v);
    start_evals[s] += evals + 1;
  });

  // Converged candidates first, then lowest J; ties go to the lower index.
  int best = 0;
  const auto better = [&](int a, int b) {
    const bool ca = values[a].feasible && values[a].residual_norm() < cfg.residual_tolerance;
    const bool cb = values[b].feasible && values[b].residual_norm() < cfg.residual_tolerance;
    if (ca != cb) return ca;
    if (ca) return values[a].J < values[b].J;
    return penalized(values[a], cfg.lambda_end) < penalized(values[b], cfg.lambda_end);
  };
  for (int s = 1; s < n_starts; ++s) {
    if (better(s, best)) best = s;
  }
  OrbitSolution sol = make_solution(problem, results[best]);
  sol.best_start = best;
  for (int e : start_evals) sol.evaluations += e;
  if (!sol.converged) {
    std::ostringstream msg;
    msg << "no start reached the residual tolerance " << cfg.residual_tolerance
        << "; best residual " << sol.residual_norm;
    if (!sol.diagnostics.empty()) msg << " (" << sol.diagnostics << ")";
    sol.diagnostics = msg.str();
  }
  return sol;
}

AbdomenComparison compare_abdomen_effect(const OrbitSolution& undulating,
                                         const OrbitSolution& fixed) {
  if (!undulating.converged || !fixed.converged) {
    throw std::invalid_argument("compare_abdomen_effect: both solutions must be converged");
  }
  AbdomenComparison c;
  const auto fill = [](const OrbitSolution& sol, EnergySeries* series, CaseSummary* sum) {
    const auto& s = sol.trajectory.samples;
    double e = 0.0, p = 0.0, pa = 0.0, duration = 0.0;
    const Vec3 x0 = s.front().x;
    const double m = sol.morph.total_mass();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const TrajectorySample& q = s[i];
      const double P = q.torques.P_R + q.torques.P_L + q.torques.P_A;
      series->t.push_back(q.t);
      series->E.push_back(energy(q.x - x0, q.x_dot, m, sol.morph.g));
      series->E_dot.push_back(q.E_dot);
      series->P.push_back(P);
      series->tau_A.push_back(q.torques.tau_A.y());
      if (i + 1 < s.size()) {
        const TrajectorySample& r = s[i + 1];
        const double dt = r.t - q.t;
        const double Pn = r.torques.P_R + r.torques.P_L + r.torques.P_A;
        const double An = std::abs(r.torques.P_R) + std::abs(r.torques.P_L) +
                          std::abs(r.torques.P_A);
        const double Aq = std::abs(q.torques.P_R) + std::abs(q.torques.P_L) +
                          std::abs(q.torques.P_A);
        e += 0.5 * dt * (std::abs(energy(q.x - x0, q.x_dot, m, sol.morph.g)) +
                         std::abs(energy(r.x - x0, r.x_dot, m, sol.morph.g)));
        p += 0.5 * dt * (P + Pn);
        pa += 0.5 * dt * (Aq + An);
        duration += dt;
      }
    }
    sum->J = sol.J;
    sum->mean_abs_energy = e / duration;
    sum->mean_power = p / duration;
    sum->mean_abs_power = pa / duration;
  };
  fill(undulating, &c.undulating, &c.undulating_summary);
  fill(fixed, &c.fixed, &c.fixed_summary);
  const CaseSummary& u = c.undulating_summary;
  const CaseSummary& f = c.fixed_summary;
  c.J_increase = (f.J - u.J) / u.J;
  c.mean_power_reduction = f.mean_power != 0.0 ? 1.0 - u.mean_power / f.mean_power : 0.0;
  c.mean_energy_reduction =
      f.mean_abs_energy != 0.0 ? 1.0 - u.mean_abs_energy / f.mean_abs_energy : 0.0;
  if (!undulating.kinematics.body.abdomen_fixed && undulating.morph.m_A > 0.0) {
    std::vector<double> th, thd, tau;
    for (const TrajectorySample& q : undulating.trajectory.samples) {
      th.push_back(q.theta_A);
      thd.push_back(q.theta_A_dot);
      tau.push_back(q.torques.tau_A.y());
    }
    try {
      c.abdomen_fit = fit_spring_damper(th, thd, tau);
      c.has_spring_damper = true;
    } catch (const std::invalid_argument&) {
      c.has_spring_damper = false;
    }
  }
  return c;
}

}  // namespace flapsim
