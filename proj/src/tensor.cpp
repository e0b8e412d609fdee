#include "nndx/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nndx {

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, Real fill) : shape(std::move(s)), values(shape_product(shape), fill) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

Tensor::Tensor(Shape s, std::vector<Real> v) : shape(std::move(s)), values(std::move(v)) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_product(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
}

void Tensor::zero_grad() { grad.assign(values.size(), Real{0}); }

void Tensor::accumulate_grad(std::span<const Real> delta) {
  if (delta.size() != values.size()) {
    throw DimensionError("gradient of length " + std::to_string(delta.size()) + " for tensor " +
                         shape_string(shape));
  }
  if (grad.empty()) grad.assign(values.size(), Real{0});
  for (std::size_t i = 0; i < delta.size(); ++i) grad[i] += delta[i];
}

bool Tensor::all_finite() const {
  auto finite = [](Real x) { return std::isfinite(x); };
  return std::all_of(values.begin(), values.end(), finite) && std::all_of(grad.begin(), grad.end(), finite);
}

Real group_grad_norm(std::span<const std::span<const Real>> grads) {
  if (grads.empty()) throw ContractError("group_grad_norm: empty group");
  Real squares = 0;
  for (auto g : grads) {
    for (Real x : g) squares += x * x;
  }
  return std::sqrt(squares);
}

}  // namespace nndx
