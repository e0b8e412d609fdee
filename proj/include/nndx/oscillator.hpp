#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nndx/schedules.hpp"

namespace nndx {

/// Damped-oscillator view of heavy-ball momentum: gamma = 1 - mu, omega = sqrt(lambda alpha).
struct OscillatorParams {
  Real gamma = 0;
  Real omega = 0;
  Real curvature = 1;
};

OscillatorParams oscillator_params(Real mu, Real alpha, Real curvature = 1);

// gamma^2 - 4 omega^2 = (1 - mu)^2 - 4 lambda alpha.
// Negative: underdamped, zero: critical, positive: overdamped. continuous_regime
// counts values within 1e-12 of zero, relative to the terms, as critical.
Real continuous_discriminant(Real mu, Real alpha, Real curvature = 1);
Regime continuous_regime(Real mu, Real alpha, Real curvature = 1);

// Discriminant of z^2 - (1 + mu - alpha lambda) z + mu.
Real discrete_discriminant(Real mu, Real alpha, Real curvature);
std::pair<std::complex<Real>, std::complex<Real>> discrete_characteristic_roots(Real mu, Real alpha, Real curvature);
bool roots_are_complex(Real mu, Real alpha, Real curvature);

/// Loss 1/2 lambda theta^2, minimum at the origin.
struct QuadraticProblem {
  Real curvature = 1;
  Real theta0 = 1;
  Real v0 = 0;
};

struct TrajectoryPoint {
  std::size_t t = 0;
  Real theta = 0;
  Real v = 0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  // First step whose |theta| exceeded the divergence bound; iteration stops there.
  std::optional<std::size_t> diverged_at;
};

inline constexpr Real kDivergenceBound = 1e12;

// Iterates v <- mu v - alpha lambda theta, theta <- theta + v.
Trajectory simulate_heavy_ball(const QuadraticProblem& problem, Real alpha, Real mu, std::size_t steps);
// Step t uses alpha = cosine_lr(t) and mu = momentum_at(policy, t, alpha) (no accuracy history).
Trajectory simulate_heavy_ball(const QuadraticProblem& problem, const LRSchedule& sched,
                               const MomentumPolicy& policy, std::size_t steps);

// Second-order form theta_{t+1} = (1 + mu) theta_t - mu theta_{t-1} - alpha lambda theta_t,
// started from theta_{-1} = theta0 - v0. Velocity is reported as theta_t - theta_{t-1}.
Trajectory simulate_second_order(const QuadraticProblem& problem, Real alpha, Real mu, std::size_t steps);

// Multi-eigenvalue problem: each eigencomponent evolves independently.
std::vector<Trajectory> simulate_spectrum(const std::vector<QuadraticProblem>& components, Real alpha, Real mu,
                                          std::size_t steps);

// First t with |theta_s| <= epsilon for all s >= t in the record; none if the
// trajectory diverged or ends outside the band.
std::optional<std::size_t> settling_time(const Trajectory& traj, Real epsilon = 1e-6);

// Number of strict sign flips theta_t * theta_{t+1} < 0.
std::size_t sign_changes(const Trajectory& traj);

std::string trajectory_csv(const Trajectory& traj);

}  // namespace nndx
