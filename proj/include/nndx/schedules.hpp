#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nndx/common.hpp"

namespace nndx {

enum class LRKind { constant, cosine };

struct LRSchedule {
  LRKind kind = LRKind::cosine;
  Real lr_max = 0.1;
  Real lr_min = 1e-4;
  std::size_t epochs = 200;

  bool operator==(const LRSchedule&) const = default;
};

// alpha(t) = lr_min + (lr_max - lr_min) (1 + cos(pi t / T)) / 2 for 0-based t in [0, T).
// A 1-based epoch e corresponds to t = e - 1.
Real cosine_lr(std::size_t t, const LRSchedule& sched);

// 1 - 2 sqrt(alpha). No clamping; negative for alpha > 1/4.
Real critical_momentum(Real alpha);
Real physics_momentum(Real alpha, Real lo = 0.5, Real hi = 0.99);
// Linear inverse coupling: mu_hi at lr_min, mu_lo at lr_max.
Real onecycle_momentum(Real alpha, const LRSchedule& sched, Real mu_lo = 0.85, Real mu_hi = 0.95);

struct ConstantMomentum {
  Real mu = 0.9;
  bool operator==(const ConstantMomentum&) const = default;
};

struct OneCycleMomentum {
  Real mu_lo = 0.85;
  Real mu_hi = 0.95;
  bool operator==(const OneCycleMomentum&) const = default;
};

struct PhysicsMomentum {
  Real clamp_lo = 0.5;
  Real clamp_hi = 0.99;
  bool operator==(const PhysicsMomentum&) const = default;
};

// Fires after the first epoch whose end-of-epoch accuracy reaches `threshold`.
struct AccuracyTrigger {
  Real threshold = 0.9;
  bool operator==(const AccuracyTrigger&) const = default;
};

// Fires at 0-based epoch index `epoch`.
struct EpochTrigger {
  std::size_t epoch = 52;
  bool operator==(const EpochTrigger&) const = default;
};

struct HybridMomentum {
  PhysicsMomentum inner;
  std::variant<AccuracyTrigger, EpochTrigger> trigger;
  Real post_mu = 0.9;
  bool operator==(const HybridMomentum&) const = default;
};

using MomentumPolicy = std::variant<ConstantMomentum, OneCycleMomentum, PhysicsMomentum, HybridMomentum>;

void validate(const MomentumPolicy& policy);
std::string describe(const MomentumPolicy& policy);

// 0-based epoch at which the hybrid switch takes effect, if it has fired by epoch t.
// `acc_history[s]` is the test accuracy at the end of 0-based epoch s.
std::optional<std::size_t> hybrid_switch_epoch(const HybridMomentum& policy, std::size_t t,
                                               std::span<const Real> acc_history);

Real hybrid_momentum(std::size_t t, Real alpha, const HybridMomentum& policy, std::span<const Real> acc_history);

// Momentum for 0-based epoch t under any policy.
Real momentum_at(const MomentumPolicy& policy, std::size_t t, Real alpha, const LRSchedule& sched,
                 std::span<const Real> acc_history = {});

enum class Regime { underdamped, critical, overdamped };

std::string_view to_string(Regime regime);

// Closed critical band: |mu - mu_c| <= tol is critical.
Regime classify_regime(Real mu_actual, Real mu_c, Real tol = 0.05);

struct RegimeRecord {
  std::size_t epoch = 0;  // 1-based
  Real alpha = 0;
  Real mu_actual = 0;
  Real mu_c = 0;
  Real delta_mu = 0;
  Regime label = Regime::critical;
};

// Which value is treated as the "actual" momentum for a physics policy.
// clamped: the value the optimizer uses. raw: the unclamped 1 - 2 sqrt(alpha).
enum class PhysicsReading { clamped, raw };

struct RegimeScan {
  std::vector<RegimeRecord> records;
  std::size_t underdamped = 0;
  std::size_t critical = 0;
  std::size_t overdamped = 0;
};

RegimeScan scan_schedule(const LRSchedule& sched, const MomentumPolicy& policy, std::size_t epochs,
                         Real tol = 0.05, PhysicsReading reading = PhysicsReading::clamped,
                         std::span<const Real> acc_history = {});

// epoch,alpha,mu_actual,mu_c,delta_mu,label
std::string regime_scan_csv(const RegimeScan& scan, int digits = 6);

}  // namespace nndx
