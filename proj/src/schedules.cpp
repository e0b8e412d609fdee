#include "nndx/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace nndx {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_schedule(const LRSchedule& s) {
  if (!(s.lr_max > 0)) throw ConfigError("lr schedule: lr_max must be > 0");
  if (!(s.lr_min >= 0) || s.lr_min > s.lr_max) throw ConfigError("lr schedule: need 0 <= lr_min <= lr_max");
  if (s.epochs == 0) throw ConfigError("lr schedule: epochs must be >= 1");
}

}  // namespace

Real cosine_lr(std::size_t t, const LRSchedule& sched) {
  check_schedule(sched);
  if (t >= sched.epochs) {
    throw RangeError("epoch index " + std::to_string(t) + " outside [0, " + std::to_string(sched.epochs) + ")");
  }
  if (sched.kind == LRKind::constant) return sched.lr_max;
  const Real phase = std::numbers::pi * static_cast<Real>(t) / static_cast<Real>(sched.epochs);
  const Real alpha = sched.lr_min + Real{0.5} * (sched.lr_max - sched.lr_min) * (1 + std::cos(phase));
  return std::clamp(alpha, sched.lr_min, sched.lr_max);
}

Real critical_momentum(Real alpha) {
  if (!(alpha >= 0)) throw DomainError("critical_momentum: alpha must be >= 0, got " + std::to_string(alpha));
  return 1 - 2 * std::sqrt(alpha);
}

Real physics_momentum(Real alpha, Real lo, Real hi) {
  if (!(lo < hi)) throw ConfigError("physics momentum: clamp_lo must be < clamp_hi");
  return std::clamp(critical_momentum(alpha), lo, hi);
}

Real onecycle_momentum(Real alpha, const LRSchedule& sched, Real mu_lo, Real mu_hi) {
  check_schedule(sched);
  // Cosine endpoints may land an ulp outside the nominal range.
  const Real slack = 1e-12 * sched.lr_max;
  if (alpha < sched.lr_min - slack || alpha > sched.lr_max + slack) {
    throw RangeError(fmt::format("onecycle: alpha {} outside [{}, {}]", alpha, sched.lr_min, sched.lr_max));
  }
  if (sched.lr_max == sched.lr_min) return mu_lo;
  const Real frac = std::clamp((sched.lr_max - alpha) / (sched.lr_max - sched.lr_min), Real{0}, Real{1});
  return mu_lo + (mu_hi - mu_lo) * frac;
}

void validate(const MomentumPolicy& policy) {
  auto in_unit = [](Real mu) { return mu >= 0 && mu < 1; };
  auto check_physics = [&](const PhysicsMomentum& p) {
    if (!(p.clamp_lo < p.clamp_hi)) throw ConfigError("physics momentum: clamp_lo must be < clamp_hi");
    if (!in_unit(p.clamp_lo) || !in_unit(p.clamp_hi)) throw ConfigError("physics momentum: clamps must be in [0, 1)");
  };
  std::visit(overloaded{
                 [&](const ConstantMomentum& c) {
                   if (!in_unit(c.mu)) throw ConfigError("constant momentum must be in [0, 1)");
                 },
                 [&](const OneCycleMomentum& c) {
                   if (!in_unit(c.mu_lo) || !in_unit(c.mu_hi) || c.mu_lo > c.mu_hi) {
                     throw ConfigError("onecycle momentum: need 0 <= mu_lo <= mu_hi < 1");
                   }
                 },
                 check_physics,
                 [&](const HybridMomentum& h) {
                   check_physics(h.inner);
                   if (!in_unit(h.post_mu)) throw ConfigError("hybrid: post_mu must be in [0, 1)");
                   if (const auto* a = std::get_if<AccuracyTrigger>(&h.trigger);
                       a != nullptr && !(a->threshold > 0 && a->threshold <= 1)) {
                     throw ConfigError("hybrid: accuracy threshold must be in (0, 1]");
                   }
                 },
             },
             policy);
}

std::string describe(const MomentumPolicy& policy) {
  return std::visit(overloaded{
                        [](const ConstantMomentum& c) { return fmt::format("constant(mu={})", c.mu); },
                        [](const OneCycleMomentum& c) { return fmt::format("onecycle({}, {})", c.mu_lo, c.mu_hi); },
                        [](const PhysicsMomentum& p) {
                          return fmt::format("physics(clamp {}..{})", p.clamp_lo, p.clamp_hi);
                        },
                        [](const HybridMomentum& h) {
                          const std::string trig =
                              std::visit(overloaded{[](const AccuracyTrigger& a) {
                                                      return fmt::format("accuracy>={}", a.threshold);
                                                    },
                                                    [](const EpochTrigger& e) {
                                                      return fmt::format("epoch={}", e.epoch);
                                                    }},
                                         h.trigger);
                          return fmt::format("hybrid({}, then mu={})", trig, h.post_mu);
                        },
                    },
                    policy);
}

std::optional<std::size_t> hybrid_switch_epoch(const HybridMomentum& policy, std::size_t t,
                                               std::span<const Real> acc_history) {
  if (const auto* e = std::get_if<EpochTrigger>(&policy.trigger)) {
    if (t >= e->epoch) return e->epoch;
    return std::nullopt;
  }
  const Real threshold = std::get<AccuracyTrigger>(policy.trigger).threshold;
  if (acc_history.size() < t) {
    throw ContractError("hybrid accuracy trigger at epoch index " + std::to_string(t) + " needs " +
                        std::to_string(t) + " accuracy entries, got " + std::to_string(acc_history.size()));
  }
  for (std::size_t s = 0; s < t; ++s) {
    if (acc_history[s] >= threshold) return s + 1;
  }
  return std::nullopt;
}

Real hybrid_momentum(std::size_t t, Real alpha, const HybridMomentum& policy, std::span<const Real> acc_history) {
  if (hybrid_switch_epoch(policy, t, acc_history)) return policy.post_mu;
  return physics_momentum(alpha, policy.inner.clamp_lo, policy.inner.clamp_hi);
}

Real momentum_at(const MomentumPolicy& policy, std::size_t t, Real alpha, const LRSchedule& sched,
                 std::span<const Real> acc_history) {
  return std::visit(overloaded{
                        [](const ConstantMomentum& c) { return c.mu; },
                        [&](const OneCycleMomentum& c) { return onecycle_momentum(alpha, sched, c.mu_lo, c.mu_hi); },
                        [&](const PhysicsMomentum& p) { return physics_momentum(alpha, p.clamp_lo, p.clamp_hi); },
                        [&](const HybridMomentum& h) { return hybrid_momentum(t, alpha, h, acc_history); },
                    },
                    policy);
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::underdamped:
      return "underdamped";
    case Regime::critical:
      return "critical";
    case Regime::overdamped:
      return "overdamped";
  }
  return "unknown";
}

Regime classify_regime(Real mu_actual, Real mu_c, Real tol) {
  if (mu_actual > mu_c + tol) return Regime::underdamped;
  if (mu_actual < mu_c - tol) return Regime::overdamped;
  return Regime::critical;
}

RegimeScan scan_schedule(const LRSchedule& sched, const MomentumPolicy& policy, std::size_t epochs, Real tol,
                         PhysicsReading reading, std::span<const Real> acc_history) {
  if (epochs == 0) throw ContractError("scan_schedule: need at least one epoch");
  validate(policy);
  RegimeScan scan;
  scan.records.reserve(epochs);
  for (std::size_t t = 0; t < epochs; ++t) {
    RegimeRecord rec;
    rec.epoch = t + 1;
    rec.alpha = cosine_lr(t, sched);
    rec.mu_c = critical_momentum(rec.alpha);

    bool physics_in_effect = std::holds_alternative<PhysicsMomentum>(policy);
    if (const auto* h = std::get_if<HybridMomentum>(&policy)) {
      physics_in_effect = !hybrid_switch_epoch(*h, t, acc_history).has_value();
    }
    rec.mu_actual = (physics_in_effect && reading == PhysicsReading::raw)
                        ? rec.mu_c
                        : momentum_at(policy, t, rec.alpha, sched, acc_history);
    rec.delta_mu = rec.mu_actual - rec.mu_c;
    rec.label = classify_regime(rec.mu_actual, rec.mu_c, tol);
    switch (rec.label) {
      case Regime::underdamped:
        ++scan.underdamped;
        break;
      case Regime::critical:
        ++scan.critical;
        break;
      case Regime::overdamped:
        ++scan.overdamped;
        break;
    }
    scan.records.push_back(rec);
  }
  return scan;
}

std::string regime_scan_csv(const RegimeScan& scan, int digits) {
  std::string out = "epoch,alpha,mu_actual,mu_c,delta_mu,label\n";
  for (const auto& r : scan.records) {
    out += fmt::format("{},{:.{}f},{:.{}f},{:.{}f},{:.{}f},{}\n", r.epoch, r.alpha, digits, r.mu_actual, digits,
                       r.mu_c, digits, r.delta_mu, digits, to_string(r.label));
  }
  return out;
}

}  // namespace nndx
