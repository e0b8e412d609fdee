#include "nndx/optimizers.hpp"

#include <cmath>

namespace nndx {

namespace {

using Buffers = std::vector<std::vector<std::vector<Real>>>;

Buffers zeros_like(const std::vector<LayerGroup>& groups) {
  Buffers out;
  for (const auto& g : groups) {
    auto& per_group = out.emplace_back();
    for (const auto& t : g.tensors) per_group.emplace_back(t.size(), Real{0});
  }
  return out;
}

void check_layout(const Buffers& state, const std::vector<LayerGroup>& groups, const char* who) {
  bool ok = state.size() == groups.size();
  for (std::size_t g = 0; ok && g < groups.size(); ++g) {
    ok = state[g].size() == groups[g].tensors.size();
    for (std::size_t t = 0; ok && t < groups[g].tensors.size(); ++t) {
      const auto& tensor = groups[g].tensors[t];
      ok = state[g][t].size() == tensor.size() && tensor.grad.size() == tensor.size();
    }
  }
  if (!ok) throw DimensionError(std::string(who) + ": parameter, gradient and state shapes disagree");
}

Real effective_grad(const Tensor& t, std::size_t i, Real weight_decay) {
  return weight_decay == 0 ? t.grad[i] : t.grad[i] + weight_decay * t.values[i];
}

}  // namespace

SgdMomentum::SgdMomentum(const std::vector<LayerGroup>& groups, Real weight_decay)
    : velocity_(zeros_like(groups)), weight_decay_(weight_decay) {}

void SgdMomentum::step(std::vector<LayerGroup>& groups) {
  check_layout(velocity_, groups, "sgd_momentum_step");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].frozen) continue;
    for (std::size_t t = 0; t < groups[g].tensors.size(); ++t) {
      Tensor& p = groups[g].tensors[t];
      auto& v = velocity_[g][t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum_ * v[i] - lr_ * effective_grad(p, i, weight_decay_);
        p.values[i] = p.values[i] + v[i];
      }
    }
  }
}

Adam::Adam(const std::vector<LayerGroup>& groups, Real weight_decay, AdamHyper hyper)
    : first_(zeros_like(groups)), second_(zeros_like(groups)), weight_decay_(weight_decay), hyper_(hyper) {}

void Adam::step(std::vector<LayerGroup>& groups) {
  check_layout(first_, groups, "adam_step");
  ++steps_;
  const Real n = static_cast<Real>(steps_);
  const Real correction1 = 1 - std::pow(hyper_.beta1, n);
  const Real correction2 = 1 - std::pow(hyper_.beta2, n);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].frozen) continue;
    for (std::size_t t = 0; t < groups[g].tensors.size(); ++t) {
      Tensor& p = groups[g].tensors[t];
      auto& m = first_[g][t];
      auto& s = second_[g][t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const Real grad = effective_grad(p, i, weight_decay_);
        m[i] = hyper_.beta1 * m[i] + (1 - hyper_.beta1) * grad;
        s[i] = hyper_.beta2 * s[i] + (1 - hyper_.beta2) * grad * grad;
        const Real m_hat = m[i] / correction1;
        const Real s_hat = s[i] / correction2;
        p.values[i] -= lr_ * m_hat / (std::sqrt(s_hat) + hyper_.eps);
      }
    }
  }
}

}  // namespace nndx
