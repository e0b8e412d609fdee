#include "nndx/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <utility>

namespace nndx {

namespace {

struct LayerPlan {
  std::string name;
  Shape weight;
  Shape bias;
  std::size_t fan_in;
  std::size_t fan_out;
};

constexpr std::size_t kKernel = 3;

std::vector<LayerPlan> plan_layers(const ModelSpec& spec) {
  std::vector<LayerPlan> plan;
  const std::size_t n = spec.group_count();
  auto name_of = [n](std::size_t i) { return i + 1 == n ? std::string("fc") : "g" + std::to_string(i); };

  if (spec.kind == ModelKind::mlp) {
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
      const std::size_t in = spec.widths[i], out = spec.widths[i + 1];
      plan.push_back({name_of(i), {out, in}, {out}, in, out});
    }
    return plan;
  }

  const std::size_t h = spec.input_shape[1], w = spec.input_shape[2];
  std::size_t channels = spec.input_shape[0];
  std::size_t idx = 0;
  for (std::size_t oc : spec.conv_channels) {
    plan.push_back({name_of(idx++), {oc, channels, kKernel, kKernel}, {oc}, channels * kKernel * kKernel,
                    oc * kKernel * kKernel});
    channels = oc;
  }
  std::size_t in = channels * h * w;
  for (std::size_t out : spec.widths) {
    plan.push_back({name_of(idx++), {out, in}, {out}, in, out});
    in = out;
  }
  return plan;
}

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const Real limit = std::sqrt(Real{6} / static_cast<Real>(fan_in + fan_out));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  for (auto& v : t.values) v = dist(rng);
}

}  // namespace

std::size_t LayerGroup::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.size();
  return total;
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::mlp ? "mlp" : "smallconv"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "mlp") return ModelKind::mlp;
  if (text == "smallconv") return ModelKind::smallconv;
  throw ValidationError("model.kind: expected mlp or smallconv, got '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
  auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t x) { return x > 0; });
  };
  if (!positive(widths)) throw ValidationError("model.widths: every width must be positive");
  if (kind == ModelKind::mlp) {
    if (widths.size() < 6) {
      throw ValidationError("model.widths: mlp needs input, at least 4 hidden widths and classes (>= 5 groups)");
    }
  } else {
    if (input_shape.size() != 3 || !positive(input_shape)) {
      throw ValidationError("model.input_shape: smallconv needs positive {C,H,W}");
    }
    if (conv_channels.size() != 2 || !positive(conv_channels)) {
      throw ValidationError("model.conv_channels: smallconv needs two positive channel counts");
    }
    if (widths.size() != 3) throw ValidationError("model.widths: smallconv needs {d1, d2, classes}");
  }
  if (widths.back() < 2) throw ValidationError("model.widths: class count must be >= 2");
}

std::size_t ModelSpec::input_size() const {
  return kind == ModelKind::mlp ? widths.front() : shape_product(input_shape);
}

std::size_t ModelSpec::classes() const { return widths.back(); }

std::size_t ModelSpec::group_count() const {
  return kind == ModelKind::mlp ? widths.size() - 1 : conv_channels.size() + widths.size();
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  for (auto& layer : plan_layers(spec_)) {
    LayerGroup g;
    g.name = layer.name;
    g.tensor_names = {layer.name + ".weight", layer.name + ".bias"};
    g.tensors.emplace_back(layer.weight);
    g.tensors.emplace_back(layer.bias);
    glorot_fill(g.tensors[0], layer.fan_in, layer.fan_out, rng);
    groups_.push_back(std::move(g));
  }
}

Model build_model(const ModelSpec& spec) { return Model(spec); }

LayerGroup& Model::group(std::string_view name) {
  return const_cast<LayerGroup&>(std::as_const(*this).group(name));
}

const LayerGroup& Model::group(std::string_view name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw NameError("no layer group named '" + std::string(name) + "'");
}

bool Model::has_group(std::string_view name) const {
  return std::any_of(groups_.begin(), groups_.end(), [&](const LayerGroup& g) { return g.name == name; });
}

std::vector<std::string> Model::group_names() const {
  std::vector<std::string> names;
  for (const auto& g : groups_) names.push_back(g.name);
  return names;
}

template <typename Bind>
Var Model::build_graph(Tape& tape, std::span<const Real> x, Bind&& bind) const {
  if (x.size() != spec_.input_size()) {
    throw DimensionError("model expects " + std::to_string(spec_.input_size()) + " features, got " +
                         std::to_string(x.size()));
  }
  std::size_t idx = 0;
  Var h = tape.input(spec_.kind == ModelKind::mlp ? Shape{x.size()} : Shape(spec_.input_shape), x);
  if (spec_.kind == ModelKind::smallconv) {
    for (; idx < spec_.conv_channels.size(); ++idx) {
      h = tape.conv2d(h, bind(idx, 0), 1);
      h = tape.relu(tape.add_channel_bias(h, bind(idx, 1)));
    }
    h = tape.reshape(h, {tape.value(h).size()});
  }
  for (; idx < groups_.size(); ++idx) {
    h = tape.dense(h, bind(idx, 0), bind(idx, 1));
    if (idx + 1 < groups_.size()) h = tape.relu(h);
  }
  return h;
}

Var Model::forward(Tape& tape, std::span<const Real> x) {
  return build_graph(tape, x, [&](std::size_t g, std::size_t t) { return tape.parameter(groups_[g].tensors[t]); });
}

Var Model::forward_view(Tape& tape, std::span<const Real> x) const {
  return build_graph(tape, x,
                     [&](std::size_t g, std::size_t t) { return tape.parameter_view(groups_[g].tensors[t]); });
}

std::vector<Real> Model::logits(std::span<const Real> x) const {
  Tape tape;
  return tape.value(forward_view(tape, x)).values;
}

std::size_t Model::predict(std::span<const Real> x) const {
  const auto out = logits(x);
  // max_element returns the first maximum, which is the lowest index on ties.
  return static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
}

void Model::zero_grad() {
  for (auto& g : groups_) {
    for (auto& t : g.tensors) t.zero_grad();
  }
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const auto& g : groups_) total += g.parameter_count();
  return total;
}

std::size_t Model::tensor_count() const {
  std::size_t total = 0;
  for (const auto& g : groups_) total += g.tensors.size();
  return total;
}

void Model::reinitialize_group(std::string_view name, std::uint64_t seed) {
  auto plan = plan_layers(spec_);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name != name) continue;
    std::mt19937_64 rng(seed);
    glorot_fill(groups_[i].tensors[0], plan[i].fan_in, plan[i].fan_out, rng);
    std::fill(groups_[i].tensors[1].values.begin(), groups_[i].tensors[1].values.end(), Real{0});
    return;
  }
  throw NameError("no layer group named '" + std::string(name) + "'");
}

void set_frozen(Model& model, const GroupSet& names, bool frozen) {
  for (const auto& n : names) {
    if (!model.has_group(n)) throw NameError("no layer group named '" + n + "'");
  }
  for (auto& g : model.groups()) {
    if (names.count(g.name) != 0) g.frozen = frozen;
  }
}

void set_all_frozen(Model& model, bool frozen) {
  for (auto& g : model.groups()) g.frozen = frozen;
}

std::size_t parameter_count(const Model& model, const GroupSet& names) {
  std::size_t total = 0;
  for (const auto& n : names) total += model.group(n).parameter_count();
  return total;
}

std::size_t tensor_count(const Model& model, const GroupSet& names) {
  std::size_t total = 0;
  for (const auto& n : names) total += model.group(n).tensors.size();
  return total;
}

Real group_grad_norm(const LayerGroup& group) {
  std::vector<std::span<const Real>> grads;
  for (const auto& t : group.tensors) {
    if (!t.has_grad()) throw ContractError("group '" + group.name + "' has an unpopulated gradient");
    grads.emplace_back(t.grad);
  }
  return group_grad_norm(grads);
}

bool tensors_bit_identical_outside(const Model& a, const Model& b, const GroupSet& allowed) {
  if (a.groups().size() != b.groups().size()) return false;
  for (std::size_t g = 0; g < a.groups().size(); ++g) {
    const auto& ga = a.groups()[g];
    const auto& gb = b.groups()[g];
    if (ga.name != gb.name || ga.tensors.size() != gb.tensors.size()) return false;
    if (allowed.count(ga.name) != 0) continue;
    for (std::size_t t = 0; t < ga.tensors.size(); ++t) {
      const auto& va = ga.tensors[t].values;
      const auto& vb = gb.tensors[t].values;
      if (va.size() != vb.size()) return false;
      if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(Real)) != 0) return false;
    }
  }
  return true;
}

}  // namespace nndx
