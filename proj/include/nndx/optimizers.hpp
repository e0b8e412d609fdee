#pragma once

#include <cstddef>
#include <vector>

#include "nndx/model.hpp"

namespace nndx {

/// Heavy-ball momentum: v <- mu v - alpha g, theta <- theta + v.
///
/// Weight decay is loss-coupled: g = grad + weight_decay * theta. Tensors in
/// frozen groups keep both their values and their velocity.
class SgdMomentum {
 public:
  explicit SgdMomentum(const std::vector<LayerGroup>& groups, Real weight_decay = 0);

  void set_hyper(Real lr, Real momentum) {
    lr_ = lr;
    momentum_ = momentum;
  }
  Real lr() const { return lr_; }
  Real momentum() const { return momentum_; }

  void step(std::vector<LayerGroup>& groups);

  const std::vector<std::vector<std::vector<Real>>>& velocity() const { return velocity_; }

 private:
  std::vector<std::vector<std::vector<Real>>> velocity_;
  Real weight_decay_;
  Real lr_ = 0;
  Real momentum_ = 0;
};

struct AdamHyper {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  bool operator==(const AdamHyper&) const = default;
};

/// Bias-corrected Adam with the same loss-coupled weight decay as SgdMomentum.
class Adam {
 public:
  explicit Adam(const std::vector<LayerGroup>& groups, Real weight_decay = 0, AdamHyper hyper = {});

  void set_lr(Real lr) { lr_ = lr; }
  Real lr() const { return lr_; }
  const AdamHyper& hyper() const { return hyper_; }
  std::size_t steps() const { return steps_; }

  void step(std::vector<LayerGroup>& groups);

 private:
  std::vector<std::vector<std::vector<Real>>> first_;
  std::vector<std::vector<std::vector<Real>>> second_;
  Real weight_decay_;
  AdamHyper hyper_;
  Real lr_ = 1e-3;
  std::size_t steps_ = 0;
};

}  // namespace nndx
