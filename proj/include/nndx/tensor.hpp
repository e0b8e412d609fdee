#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nndx/common.hpp"

namespace nndx {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_string(std::span<const std::size_t> shape);

/// Dense row-major array with an optional gradient buffer of the same length.
///
/// `grad` is empty until a backward pass or `zero_grad()` allocates it.
struct Tensor {
  Shape shape;
  std::vector<Real> values;
  std::vector<Real> grad;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = 0);
  Tensor(Shape shape, std::vector<Real> values);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  bool has_grad() const { return !grad.empty(); }

  void zero_grad();
  // Adds `delta` into grad, allocating it first if needed.
  void accumulate_grad(std::span<const Real> delta);

  bool all_finite() const;
};

// Euclidean norm of the concatenation of `grads`. Throws ContractError when
// `grads` is empty.
Real group_grad_norm(std::span<const std::span<const Real>> grads);

}  // namespace nndx
