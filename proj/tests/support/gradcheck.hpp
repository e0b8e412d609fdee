#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nndx/model.hpp"
#include "nndx/tape.hpp"

namespace nndx::testing {

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Real relative_error(Real analytic, Real numeric) {
  const Real scale = std::max({std::abs(analytic), std::abs(numeric), Real{1e-3}});
  return std::abs(analytic - numeric) / scale;
}

// Largest relative error between backward() and central differences over every
// element of every leaf.
inline Real gradcheck(std::vector<Tensor>& leaves, const LossBuilder& build, Real h = 1e-6) {
  for (auto& t : leaves) t.zero_grad();
  {
    Tape tape;
    std::vector<Var> vars;
    for (auto& t : leaves) vars.push_back(tape.parameter(t));
    tape.backward(build(tape, vars));
  }
  auto eval = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : leaves) vars.push_back(tape.parameter_view(t));
    return tape.value(build(tape, vars)).values[0];
  };
  Real worst = 0;
  for (auto& t : leaves) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Real keep = t.values[i];
      t.values[i] = keep + h;
      const Real up = eval();
      t.values[i] = keep - h;
      const Real down = eval();
      t.values[i] = keep;
      worst = std::max(worst, relative_error(t.grad[i], (up - down) / (2 * h)));
    }
  }
  return worst;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, Real lo = -1, Real hi = 1) {
  std::uniform_real_distribution<Real> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = u(rng);
  return t;
}

// Values bounded away from zero so relu's kink is never inside the difference stencil.
inline Tensor random_tensor_off_zero(std::mt19937_64& rng, Shape shape) {
  Tensor t = random_tensor(rng, std::move(shape), 0.05, 1);
  std::bernoulli_distribution flip(0.5);
  for (auto& v : t.values) v = flip(rng) ? -v : v;
  return t;
}

inline std::size_t dim(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Scalar projection sum(v * w) with fixed random weights w.
inline Var project(Tape& tape, Var v, std::mt19937_64& rng) {
  const Tensor& val = tape.value(v);
  return tape.sum(tape.mul(v, tape.input(random_tensor(rng, val.shape))));
}

// Runs `instances` random gradient checks per op and returns the worst relative error per op.
inline std::map<std::string, Real> gradcheck_all_ops(std::size_t instances, std::uint64_t seed) {
  std::map<std::string, Real> worst;
  std::mt19937_64 rng(seed);
  auto record = [&](const std::string& op, Real err) { worst[op] = std::max(worst[op], err); };
  for (std::size_t k = 0; k < instances; ++k) {
    {
      const std::size_t in = dim(rng, 1, 5), out = dim(rng, 1, 5);
      std::vector<Tensor> leaves{random_tensor(rng, {in}), random_tensor(rng, {out, in}), random_tensor(rng, {out})};
      const auto proj_seed = rng();
      record("dense", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.dense(v[0], v[1], v[2]), r);
             }));
    }
    {
      const std::size_t c = dim(rng, 1, 2), o = dim(rng, 1, 2), h = dim(rng, 2, 4), w = dim(rng, 2, 4);
      const std::size_t kh = 2 * dim(rng, 0, 1) + 1, kw = 2 * dim(rng, 0, 1) + 1;
      const std::size_t pad = dim(rng, 0, 1);
      if (h + 2 * pad >= kh && w + 2 * pad >= kw) {
        std::vector<Tensor> leaves{random_tensor(rng, {c, h, w}), random_tensor(rng, {o, c, kh, kw})};
        const auto proj_seed = rng();
        record("conv2d", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
                 std::mt19937_64 r(proj_seed);
                 return project(t, t.conv2d(v[0], v[1], pad), r);
               }));
      }
    }
    {
      const std::size_t c = dim(rng, 1, 3), h = dim(rng, 1, 3), w = dim(rng, 1, 3);
      std::vector<Tensor> leaves{random_tensor(rng, {c, h, w}), random_tensor(rng, {c})};
      const auto proj_seed = rng();
      record("add_channel_bias", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.add_channel_bias(v[0], v[1]), r);
             }));
    }
    {
      const std::size_t n = dim(rng, 1, 8);
      std::vector<Tensor> leaves{random_tensor_off_zero(rng, {n})};
      const auto proj_seed = rng();
      record("relu", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.relu(v[0]), r);
             }));
    }
    {
      const std::size_t a = dim(rng, 1, 3), b = dim(rng, 1, 3);
      std::vector<Tensor> leaves{random_tensor(rng, {a, b})};
      const auto proj_seed = rng();
      record("reshape", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.reshape(v[0], {b * a}), r);
             }));
    }
    {
      const std::size_t n = dim(rng, 1, 6);
      std::vector<Tensor> leaves{random_tensor(rng, {n}), random_tensor(rng, {n})};
      const auto proj_seed = rng();
      record("add", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.add(v[0], v[1]), r);
             }));
      record("mul", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.add(t.mul(v[0], v[1]), t.mul(v[0], v[0])), r);
             }));
      const Real factor = std::uniform_real_distribution<Real>(-2, 2)(rng);
      record("scale", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               std::mt19937_64 r(proj_seed);
               return project(t, t.scale(v[0], factor), r);
             }));
      record("sum", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               return t.scale(t.sum(t.mul(v[0], v[1])), 1.5);
             }));
    }
    {
      const std::size_t classes = dim(rng, 2, 6);
      std::vector<Tensor> leaves{random_tensor(rng, {classes}, -3, 3)};
      const std::size_t label = dim(rng, 0, classes - 1);
      record("softmax_cross_entropy", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               return t.softmax_cross_entropy(v[0], label);
             }));
    }
    {
      const std::size_t in = dim(rng, 1, 4), hidden = dim(rng, 1, 5), classes = dim(rng, 2, 4);
      std::vector<Tensor> leaves{random_tensor(rng, {in}), random_tensor(rng, {hidden, in}),
                                 random_tensor(rng, {hidden}), random_tensor(rng, {classes, hidden}),
                                 random_tensor(rng, {classes})};
      const std::size_t label = dim(rng, 0, classes - 1);
      record("dense_relu_ce_chain", gradcheck(leaves, [&](Tape& t, const std::vector<Var>& v) {
               const Var hdn = t.relu(t.dense(v[0], v[1], v[2]));
               return t.softmax_cross_entropy(t.dense(hdn, v[3], v[4]), label);
             }));
    }
  }
  return worst;
}

// Gradient check of a whole model's loss against every parameter. Biases are
// first redrawn off zero: zero-initialized biases behind a dead layer put
// pre-activations exactly on relu's kink.
inline Real model_gradcheck(Model& model, std::span<const Real> x, std::size_t label, Real h = 1e-6) {
  std::mt19937_64 rng(model.spec().seed);
  std::uniform_real_distribution<Real> u(0.05, 0.3);
  for (auto& g : model.groups()) {
    for (auto& v : g.tensors.back().values) v = u(rng);
  }
  auto loss = [&](bool bind) {
    Tape tape;
    const Var out = bind ? model.forward(tape, x) : model.forward_view(tape, x);
    const Var l = tape.softmax_cross_entropy(out, label);
    if (bind) tape.backward(l);
    return tape.value(l).values[0];
  };
  model.zero_grad();
  loss(true);
  Real worst = 0;
  for (auto& g : model.groups()) {
    for (auto& t : g.tensors) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const Real keep = t.values[i];
        t.values[i] = keep + h;
        const Real up = loss(false);
        t.values[i] = keep - h;
        const Real down = loss(false);
        t.values[i] = keep;
        worst = std::max(worst, relative_error(t.grad[i], (up - down) / (2 * h)));
      }
    }
  }
  return worst;
}

}  // namespace nndx::testing
