#include "nndx/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nndx {

namespace {

std::string describe(std::string_view op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": " + shape_string(a.shape) + " incompatible with " + shape_string(b.shape);
}

}  // namespace

Var Tape::push(Node node) {
  node.grad.assign(node.value().size(), Real{0});
  nodes_.push_back(std::move(node));
  return Var(nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index() >= nodes_.size()) {
    throw IndexError("tape has " + std::to_string(nodes_.size()) + " nodes, no node " +
                     std::to_string(v.index()));
  }
  return nodes_[v.index()];
}

const Tensor& Tape::value(Var v) const { return node(v).value(); }

std::span<const Real> Tape::grad(Var v) const { return node(v).grad; }

std::string_view Tape::op(Var v) const { return node(v).op; }

Var Tape::input(Tensor value) {
  Node n;
  n.op = "input";
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::input(Shape shape, std::span<const Real> values) {
  return input(Tensor(std::move(shape), std::vector<Real>(values.begin(), values.end())));
}

Var Tape::parameter(Tensor& param) {
  Node n;
  n.op = "parameter";
  n.external = &param;
  n.sink = &param;
  return push(std::move(n));
}

Var Tape::parameter_view(const Tensor& param) {
  Node n;
  n.op = "parameter";
  n.external = &param;
  return push(std::move(n));
}

Var Tape::dense(Var x, Var weight, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(weight);
  const Tensor& bv = value(bias);
  if (wv.rank() != 2 || wv.shape[1] != xv.size()) throw DimensionError(describe("dense", wv, xv));
  if (bv.size() != wv.shape[0]) throw DimensionError(describe("dense", wv, bv));

  const std::size_t rows = wv.shape[0];
  const std::size_t cols = wv.shape[1];
  Node n;
  n.op = "dense";
  n.inputs = {x.index(), weight.index(), bias.index()};
  n.owned = Tensor({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    Real acc = bv.values[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wv.values[r * cols + c] * xv.values[c];
    n.owned.values[r] = acc;
  }
  n.backprop = [rows, cols](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& xn = nodes[out.inputs[0]];
    Node& wn = nodes[out.inputs[1]];
    Node& bn = nodes[out.inputs[2]];
    const auto& xs = xn.value().values;
    const auto& ws = wn.value().values;
    for (std::size_t r = 0; r < rows; ++r) {
      const Real g = out.grad[r];
      bn.grad[r] += g;
      for (std::size_t c = 0; c < cols; ++c) {
        wn.grad[r * cols + c] += g * xs[c];
        xn.grad[c] += g * ws[r * cols + c];
      }
    }
  };
  return push(std::move(n));
}

Var Tape::conv2d(Var x, Var kernels, std::size_t padding) {
  const Tensor& xv = value(x);
  const Tensor& kv = value(kernels);
  if (xv.rank() != 3) throw DimensionError("conv2d: input must be [C,H,W], got " + shape_string(xv.shape));
  if (kv.rank() != 4) throw DimensionError("conv2d: kernels must be [O,I,kh,kw], got " + shape_string(kv.shape));
  if (kv.shape[1] != xv.shape[0]) throw DimensionError(describe("conv2d", kv, xv));
  if (kv.shape[2] % 2 == 0 || kv.shape[3] % 2 == 0) {
    throw DimensionError("conv2d: kernel spatial dims must be odd, got " + shape_string(kv.shape));
  }
  const std::size_t ch = xv.shape[0], h = xv.shape[1], w = xv.shape[2];
  const std::size_t oc = kv.shape[0], kh = kv.shape[2], kw = kv.shape[3];
  if (h + 2 * padding < kh || w + 2 * padding < kw) throw DimensionError(describe("conv2d", kv, xv));
  const std::size_t oh = h + 2 * padding - kh + 1;
  const std::size_t ow = w + 2 * padding - kw + 1;

  // Visits every (output, input, kernel) triple that lands inside the unpadded input.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(padding);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                fn((o * oh + oy) * ow + ox, (c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix),
                   ((o * ch + c) * kh + ky) * kw + kx);
              }
            }
  };

  Node n;
  n.op = "conv2d";
  n.inputs = {x.index(), kernels.index()};
  n.owned = Tensor({oc, oh, ow});
  for_each_tap([&](std::size_t out, std::size_t in, std::size_t k) {
    n.owned.values[out] += kv.values[k] * xv.values[in];
  });
  n.backprop = [for_each_tap](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& xn = nodes[out.inputs[0]];
    Node& kn = nodes[out.inputs[1]];
    const auto& xs = xn.value().values;
    const auto& ks = kn.value().values;
    for_each_tap([&](std::size_t o, std::size_t in, std::size_t k) {
      kn.grad[k] += out.grad[o] * xs[in];
      xn.grad[in] += out.grad[o] * ks[k];
    });
  };
  return push(std::move(n));
}

Var Tape::add_channel_bias(Var x, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(bias);
  if (xv.rank() != 3 || bv.size() != xv.shape[0]) throw DimensionError(describe("add_channel_bias", xv, bv));
  const std::size_t plane = xv.shape[1] * xv.shape[2];
  Node n;
  n.op = "add_channel_bias";
  n.inputs = {x.index(), bias.index()};
  n.owned = xv;
  n.owned.grad.clear();
  for (std::size_t i = 0; i < n.owned.size(); ++i) n.owned.values[i] += bv.values[i / plane];
  n.backprop = [plane](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& xn = nodes[out.inputs[0]];
    Node& bn = nodes[out.inputs[1]];
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      xn.grad[i] += out.grad[i];
      bn.grad[i / plane] += out.grad[i];
    }
  };
  return push(std::move(n));
}

Var Tape::relu(Var x) {
  Node n;
  n.op = "relu";
  n.inputs = {x.index()};
  n.owned = Tensor(value(x).shape);
  const auto& xs = value(x).values;
  // NaN passes through so a corrupted layer still surfaces as a non-finite loss.
  for (std::size_t i = 0; i < xs.size(); ++i) n.owned.values[i] = xs[i] > 0 || std::isnan(xs[i]) ? xs[i] : Real{0};
  n.backprop = [](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& xn = nodes[out.inputs[0]];
    const auto& xs = xn.value().values;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] > 0 || std::isnan(xs[i])) xn.grad[i] += out.grad[i];
    }
  };
  return push(std::move(n));
}

Var Tape::reshape(Var x, Shape shape) {
  const Tensor& xv = value(x);
  if (shape_product(shape) != xv.size()) {
    throw DimensionError("reshape: " + shape_string(xv.shape) + " cannot become " + shape_string(shape));
  }
  Node n;
  n.op = "reshape";
  n.inputs = {x.index()};
  n.owned = Tensor(std::move(shape), xv.values);
  n.backprop = [](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& xn = nodes[out.inputs[0]];
    for (std::size_t i = 0; i < out.grad.size(); ++i) xn.grad[i] += out.grad[i];
  };
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape != bv.shape) throw DimensionError(describe("add", av, bv));
  Node n;
  n.op = "add";
  n.inputs = {a.index(), b.index()};
  n.owned = Tensor(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) n.owned.values[i] = av.values[i] + bv.values[i];
  n.backprop = [](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    for (std::size_t k = 0; k < 2; ++k) {
      Node& in = nodes[out.inputs[k]];
      for (std::size_t i = 0; i < out.grad.size(); ++i) in.grad[i] += out.grad[i];
    }
  };
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape != bv.shape) throw DimensionError(describe("mul", av, bv));
  Node n;
  n.op = "mul";
  n.inputs = {a.index(), b.index()};
  n.owned = Tensor(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) n.owned.values[i] = av.values[i] * bv.values[i];
  n.backprop = [](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& an = nodes[out.inputs[0]];
    Node& bn = nodes[out.inputs[1]];
    const auto& as = an.value().values;
    const auto& bs = bn.value().values;
    // a and b may be the same node (x * x); both contributions land in it.
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      an.grad[i] += out.grad[i] * bs[i];
      bn.grad[i] += out.grad[i] * as[i];
    }
  };
  return push(std::move(n));
}

Var Tape::scale(Var a, Real factor) {
  Node n;
  n.op = "scale";
  n.inputs = {a.index()};
  n.owned = Tensor(value(a).shape);
  const auto& as = value(a).values;
  for (std::size_t i = 0; i < as.size(); ++i) n.owned.values[i] = factor * as[i];
  n.backprop = [factor](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& an = nodes[out.inputs[0]];
    for (std::size_t i = 0; i < out.grad.size(); ++i) an.grad[i] += factor * out.grad[i];
  };
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = "sum";
  n.inputs = {a.index()};
  n.owned = Tensor({1});
  for (Real v : value(a).values) n.owned.values[0] += v;
  n.backprop = [](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& an = nodes[out.inputs[0]];
    for (auto& g : an.grad) g += out.grad[0];
  };
  return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& lv = value(logits);
  if (label >= lv.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " + std::to_string(lv.size()) +
                     " logits");
  }
  const Real peak = *std::max_element(lv.values.begin(), lv.values.end());
  std::vector<Real> probs(lv.size());
  Real total = 0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    probs[i] = std::exp(lv.values[i] - peak);
    total += probs[i];
  }
  for (auto& p : probs) p /= total;

  Node n;
  n.op = "softmax_cross_entropy";
  n.inputs = {logits.index()};
  n.owned = Tensor({1}, {std::log(total) + peak - lv.values[label]});
  n.backprop = [probs = std::move(probs), label](std::vector<Node>& nodes, std::size_t self) {
    const Node& out = nodes[self];
    Node& ln = nodes[out.inputs[0]];
    for (std::size_t i = 0; i < probs.size(); ++i) {
      ln.grad[i] += out.grad[0] * (probs[i] - (i == label ? Real{1} : Real{0}));
    }
  };
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(root.value().shape));
  }
  for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), Real{0});
  nodes_[loss.index()].grad[0] = 1;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(nodes_, i);
  }
  for (std::size_t i = 0; i <= loss.index(); ++i) {
    if (nodes_[i].sink != nullptr) nodes_[i].sink->accumulate_grad(nodes_[i].grad);
  }
}

}  // namespace nndx
