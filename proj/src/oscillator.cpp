#include "nndx/oscillator.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nndx {

namespace {

void check_curvature(Real curvature) {
  if (!(curvature > 0)) throw DomainError("curvature must be > 0");
}

bool diverged(Real theta) { return !(std::abs(theta) <= kDivergenceBound); }

}  // namespace

OscillatorParams oscillator_params(Real mu, Real alpha, Real curvature) {
  check_curvature(curvature);
  if (!(alpha >= 0)) throw DomainError("alpha must be >= 0");
  return {1 - mu, std::sqrt(curvature * alpha), curvature};
}

Real continuous_discriminant(Real mu, Real alpha, Real curvature) {
  const auto p = oscillator_params(mu, alpha, curvature);
  return p.gamma * p.gamma - 4 * curvature * alpha;
}

Regime continuous_regime(Real mu, Real alpha, Real curvature) {
  const Real d = continuous_discriminant(mu, alpha, curvature);
  // Rounding in mu = 1 - 2 sqrt(alpha) leaves a residue of a few ulps.
  const Real band = 1e-12 * ((1 - mu) * (1 - mu) + 4 * curvature * alpha);
  if (d < -band) return Regime::underdamped;
  if (d > band) return Regime::overdamped;
  return Regime::critical;
}

Real discrete_discriminant(Real mu, Real alpha, Real curvature) {
  check_curvature(curvature);
  const Real b = 1 + mu - alpha * curvature;
  return b * b - 4 * mu;
}

std::pair<std::complex<Real>, std::complex<Real>> discrete_characteristic_roots(Real mu, Real alpha,
                                                                                 Real curvature) {
  const Real b = 1 + mu - alpha * curvature;
  const Real disc = discrete_discriminant(mu, alpha, curvature);
  if (disc >= 0) {
    const Real s = std::sqrt(disc);
    return {{(b + s) / 2, 0}, {(b - s) / 2, 0}};
  }
  const Real s = std::sqrt(-disc);
  return {{b / 2, s / 2}, {b / 2, -s / 2}};
}

bool roots_are_complex(Real mu, Real alpha, Real curvature) { return discrete_discriminant(mu, alpha, curvature) < 0; }

Trajectory simulate_heavy_ball(const QuadraticProblem& problem, Real alpha, Real mu, std::size_t steps) {
  return simulate_heavy_ball(problem, LRSchedule{LRKind::constant, alpha, 0, steps == 0 ? 1 : steps},
                             ConstantMomentum{mu}, steps);
}

Trajectory simulate_heavy_ball(const QuadraticProblem& problem, const LRSchedule& sched,
                               const MomentumPolicy& policy, std::size_t steps) {
  check_curvature(problem.curvature);
  if (steps == 0) throw ContractError("simulate_heavy_ball: steps must be >= 1");
  if (sched.kind == LRKind::cosine && sched.epochs < steps) {
    throw ContractError("simulate_heavy_ball: schedule covers fewer epochs than steps");
  }
  Trajectory traj;
  traj.points.reserve(steps + 1);
  Real theta = problem.theta0;
  Real v = problem.v0;
  traj.points.push_back({0, theta, v});
  for (std::size_t t = 0; t < steps; ++t) {
    const Real alpha = sched.kind == LRKind::constant ? sched.lr_max : cosine_lr(t, sched);
    const Real mu = momentum_at(policy, t, alpha, sched);
    const Real grad = problem.curvature * theta;
    v = mu * v - alpha * grad;
    theta = theta + v;
    traj.points.push_back({t + 1, theta, v});
    if (diverged(theta)) {
      traj.diverged_at = t + 1;
      break;
    }
  }
  return traj;
}

Trajectory simulate_second_order(const QuadraticProblem& problem, Real alpha, Real mu, std::size_t steps) {
  check_curvature(problem.curvature);
  if (steps == 0) throw ContractError("simulate_second_order: steps must be >= 1");
  Trajectory traj;
  traj.points.reserve(steps + 1);
  Real prev = problem.theta0 - problem.v0;
  Real theta = problem.theta0;
  traj.points.push_back({0, theta, problem.v0});
  for (std::size_t t = 0; t < steps; ++t) {
    const Real next = (1 + mu) * theta - mu * prev - alpha * (problem.curvature * theta);
    prev = theta;
    theta = next;
    traj.points.push_back({t + 1, theta, theta - prev});
    if (diverged(theta)) {
      traj.diverged_at = t + 1;
      break;
    }
  }
  return traj;
}

std::vector<Trajectory> simulate_spectrum(const std::vector<QuadraticProblem>& components, Real alpha, Real mu,
                                          std::size_t steps) {
  std::vector<Trajectory> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(simulate_heavy_ball(c, alpha, mu, steps));
  return out;
}

std::optional<std::size_t> settling_time(const Trajectory& traj, Real epsilon) {
  if (!(epsilon > 0)) throw ContractError("settling_time: epsilon must be > 0");
  if (traj.diverged_at || traj.points.empty()) return std::nullopt;
  std::optional<std::size_t> settled;
  for (std::size_t i = traj.points.size(); i-- > 0;) {
    if (!(std::abs(traj.points[i].theta) <= epsilon)) break;
    settled = traj.points[i].t;
  }
  return settled;
}

std::size_t sign_changes(const Trajectory& traj) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    const Real a = traj.points[i - 1].theta;
    const Real b = traj.points[i].theta;
    // Compare signs directly; the product of two tiny values can underflow to zero.
    if ((a < 0 && b > 0) || (a > 0 && b < 0)) ++count;
  }
  return count;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,theta,v\n";
  for (const auto& p : traj.points) out += fmt::format("{},{:.17g},{:.17g}\n", p.t, p.theta, p.v);
  return out;
}

}  // namespace nndx
