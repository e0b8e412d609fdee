#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "nndx/tensor.hpp"

namespace nndx {

/// Handle to a value recorded on a Tape.
class Var {
 public:
  explicit Var(std::size_t index) : index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Reverse-mode tape. Operations append nodes in evaluation order, so the node
/// list is always topologically sorted; `backward` walks it once in reverse.
///
/// Parameters are bound by reference: the tape reads their values in place and,
/// after a backward pass, adds the parameter gradient into `Tensor::grad`.
/// Bound tensors must outlive the tape.
class Tape {
 public:
  Var input(Tensor value);
  Var input(Shape shape, std::span<const Real> values);
  // Leaf whose gradient is accumulated into `param.grad` by backward().
  Var parameter(Tensor& param);
  // Leaf that reads `param` in place without collecting its gradient.
  Var parameter_view(const Tensor& param);

  // W [out, in] · x + b. x may have any shape with `in` elements.
  Var dense(Var x, Var weight, Var bias);
  // Stride-1 cross-correlation with zero padding. x [C,H,W], kernels [O,C,kh,kw].
  Var conv2d(Var x, Var kernels, std::size_t padding);
  // Adds bias[c] to every element of channel c of x [C,H,W].
  Var add_channel_bias(Var x, Var bias);
  Var relu(Var x);
  Var reshape(Var x, Shape shape);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, Real factor);
  Var sum(Var a);
  // -log softmax(logits)[label], as a [1] tensor.
  Var softmax_cross_entropy(Var logits, std::size_t label);

  // Seeds d(loss)/d(loss) = 1 and propagates to every node before `loss`.
  // Can be replayed; each call adds one more gradient into bound parameters.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  std::span<const Real> grad(Var v) const;
  std::string_view op(Var v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor* sink = nullptr;
    std::vector<Real> grad;
    std::function<void(std::vector<Node>&, std::size_t)> backprop;

    const Tensor& value() const { return external != nullptr ? *external : owned; }
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace nndx
