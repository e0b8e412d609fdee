#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nndx/tape.hpp"
#include "nndx/tensor.hpp"

namespace nndx {

using GroupSet = std::set<std::string>;

/// Named, ordered set of parameter tensors that is attributed and retrained as a unit.
struct LayerGroup {
  std::string name;
  std::vector<std::string> tensor_names;
  std::vector<Tensor> tensors;
  bool frozen = false;

  std::size_t parameter_count() const;
};

enum class ModelKind { mlp, smallconv };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Architecture description.
///
/// mlp:       `widths` = {input, hidden..., classes}; one group per dense layer.
/// smallconv: `input_shape` = {C, H, W}; `conv_channels` = {c1, c2} (3x3, padding 1);
///            `widths` = {d1, d2, classes}. Groups g0,g1 are convolutions, g2,g3 dense, fc last.
struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> input_shape;
  std::vector<std::size_t> conv_channels;
  std::uint64_t seed = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
  std::size_t input_size() const;
  std::size_t classes() const;
  std::size_t group_count() const;

  bool operator==(const ModelSpec&) const = default;
};

class Model {
 public:
  // Glorot-uniform weights, zero biases, all drawn from `spec.seed`.
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::vector<LayerGroup>& groups() { return groups_; }
  const std::vector<LayerGroup>& groups() const { return groups_; }

  LayerGroup& group(std::string_view name);
  const LayerGroup& group(std::string_view name) const;
  bool has_group(std::string_view name) const;
  std::vector<std::string> group_names() const;

  // Records the forward pass; parameter gradients land in the model on backward.
  Var forward(Tape& tape, std::span<const Real> x);
  // Same graph, but parameters are read-only views.
  Var forward_view(Tape& tape, std::span<const Real> x) const;

  std::vector<Real> logits(std::span<const Real> x) const;
  // argmax of logits; exact ties go to the lowest class index.
  std::size_t predict(std::span<const Real> x) const;

  void zero_grad();
  std::size_t parameter_count() const;
  std::size_t tensor_count() const;

  // Redraws the named group's parameters with the initializer, from `seed`.
  void reinitialize_group(std::string_view name, std::uint64_t seed);

 private:
  template <typename Bind>
  Var build_graph(Tape& tape, std::span<const Real> x, Bind&& bind) const;

  ModelSpec spec_;
  std::vector<LayerGroup> groups_;
};

Model build_model(const ModelSpec& spec);

// Throws NameError (and changes nothing) if any name is not a group of `model`.
void set_frozen(Model& model, const GroupSet& names, bool frozen);
void set_all_frozen(Model& model, bool frozen);

std::size_t parameter_count(const Model& model, const GroupSet& names);
std::size_t tensor_count(const Model& model, const GroupSet& names);

// Per-group gradient norm over every tensor in the group.
Real group_grad_norm(const LayerGroup& group);

// True when every tensor of every group outside `allowed` has identical bits in both models.
bool tensors_bit_identical_outside(const Model& a, const Model& b, const GroupSet& allowed);

}  // namespace nndx
