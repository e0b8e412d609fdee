#include "nndx/surgery.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "json.hpp"

namespace nndx {

Real CorrectionPlan::trainable_fraction() const {
  return total_params == 0 ? 0 : static_cast<Real>(trainable_params) / static_cast<Real>(total_params);
}

CorrectionPlan plan_from_flags(const Model& model, const GroupSet& flags, const PlanOverrides& overrides) {
  if (flags.empty()) throw ContractError("correction plan needs at least one flagged group");
  for (const auto& f : flags) {
    if (!model.has_group(f)) throw NameError("flagged group '" + f + "' is not in the model");
  }
  CorrectionPlan plan;
  plan.flagged = flags;
  if (overrides.epochs) plan.epochs = *overrides.epochs;
  if (overrides.lr_max) plan.lr_max = *overrides.lr_max;
  if (overrides.lr_min) plan.lr_min = *overrides.lr_min;
  if (overrides.batch_size) plan.batch_size = *overrides.batch_size;
  if (overrides.weight_decay) plan.weight_decay = *overrides.weight_decay;
  if (overrides.seed) plan.seed = *overrides.seed;
  plan.trainable_params = parameter_count(model, flags);
  plan.total_params = model.parameter_count();
  plan.trainable_tensors = tensor_count(model, flags);
  plan.total_tensors = model.tensor_count();
  return plan;
}

TrainConfig surgery_train_config(const CorrectionPlan& plan) {
  TrainConfig cfg;
  cfg.epochs = plan.epochs;
  cfg.batch_size = plan.batch_size;
  cfg.weight_decay = plan.weight_decay;
  cfg.schedule = LRSchedule{LRKind::cosine, plan.lr_max, plan.lr_min, std::max<std::size_t>(plan.epochs, 1)};
  cfg.momentum = plan.momentum;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.seed = plan.seed;
  return cfg;
}

SurgeryResult surgical_retrain(const Model& model, const CorrectionPlan& plan, const Dataset& train_set,
                               const Dataset& test_set) {
  if (plan.flagged.empty()) throw ContractError("correction plan has no flagged groups");
  SurgeryResult result{model, {}};
  set_all_frozen(result.model, true);
  set_frozen(result.model, plan.flagged, false);
  result.log = train(result.model, train_set, test_set, surgery_train_config(plan));
  for (std::size_t g = 0; g < model.groups().size(); ++g) {
    result.model.groups()[g].frozen = model.groups()[g].frozen;
  }
  return result;
}

Savings compute_savings(std::size_t plan_epochs, std::size_t full_epochs, Real trainable_fraction) {
  if (full_epochs == 0) throw ContractError("compute_savings: full_epochs must be > 0");
  if (!(trainable_fraction > 0 && trainable_fraction <= 1)) {
    throw ContractError("compute_savings: trainable fraction must be in (0, 1]");
  }
  const Real e = static_cast<Real>(plan_epochs);
  const Real full = static_cast<Real>(full_epochs);
  return {1 - e * (1 + 2 * trainable_fraction) / (full * 3), 1 - e / full};
}

bool frozen_integrity(const Model& before, const Model& after, const CorrectionPlan& plan) {
  return tensors_bit_identical_outside(before, after, plan.flagged);
}

VerificationReport verify_correction(const IdSet& errors_before, const IdSet& errors_after, Real acc_before,
                                     Real acc_after, const CorrectionPlan& plan, std::size_t full_epochs,
                                     std::size_t test_size, bool integrity) {
  VerificationReport r;
  r.errors_before = errors_before;
  r.errors_after = errors_after;
  for (auto id : errors_before) r.fixed += errors_after.count(id) == 0 ? 1 : 0;
  for (auto id : errors_after) r.introduced += errors_before.count(id) == 0 ? 1 : 0;
  r.net = static_cast<long long>(r.fixed) - static_cast<long long>(r.introduced);
  r.acc_before = acc_before;
  r.acc_after = acc_after;
  r.test_size = test_size;
  r.trainable_fraction = plan.trainable_fraction();
  r.trainable_tensors = plan.trainable_tensors;
  r.total_tensors = plan.total_tensors;
  r.surgery_epochs = plan.epochs;
  r.full_epochs = full_epochs;
  if (r.trainable_fraction > 0) r.savings = compute_savings(plan.epochs, full_epochs, r.trainable_fraction);
  r.frozen_integrity = integrity;
  return r;
}

std::string verification_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["errors_before"] = r.errors_before;
  j["errors_after"] = r.errors_after;
  j["total_errors_before"] = r.errors_before.size();
  j["total_errors_after"] = r.errors_after.size();
  j["fixed"] = r.fixed;
  j["new"] = r.introduced;
  j["net"] = r.net;
  j["accuracy_before"] = r.acc_before;
  j["accuracy_after"] = r.acc_after;
  j["test_size"] = r.test_size;
  j["trainable_fraction"] = r.trainable_fraction;
  j["trainable_tensors"] = r.trainable_tensors;
  j["total_tensors"] = r.total_tensors;
  j["surgery_epochs"] = r.surgery_epochs;
  j["full_epochs"] = r.full_epochs;
  j["savings"] = {{"cost_model", r.savings.cost_model},
                  {"epoch_ratio", r.savings.epoch_ratio},
                  {"cost_model_definition", "1 - epochs*(1+2*rho)/(full_epochs*3); forward=1, backward=2"}};
  j["frozen_integrity"] = r.frozen_integrity;
  return j.dump(2) + "\n";
}

std::vector<FixedErrorExample> fixed_error_examples(const std::vector<ErrorRecord>& errors_before,
                                                    const std::vector<ErrorRecord>& errors_after,
                                                    const ConfusionTaxonomy& taxonomy, std::size_t k) {
  if (k < 1) throw ContractError("fixed_error_examples: k must be >= 1");
  const IdSet after = error_ids(errors_after);
  std::vector<ErrorRecord> sorted = errors_before;
  std::sort(sorted.begin(), sorted.end(), [](const ErrorRecord& a, const ErrorRecord& b) { return a.id < b.id; });
  std::vector<FixedErrorExample> out;
  for (const auto& e : sorted) {
    if (out.size() == k) break;
    if (after.count(e.id) != 0) continue;
    FixedErrorExample ex{e.id, e.label, e.predicted, e.label, {}};
    for (const auto& row : taxonomy.rows) {
      if (row.label == e.label && row.predicted == e.predicted) ex.group = row.group;
    }
    out.push_back(ex);
  }
  return out;
}

std::string fixed_examples_csv(const std::vector<FixedErrorExample>& examples) {
  std::string out = "id,true,pred_before,pred_after,attributed_group\n";
  for (const auto& e : examples) {
    out += fmt::format("{},{},{},{},{}\n", e.id, e.label, e.pred_before, e.pred_after, e.group);
  }
  return out;
}

}  // namespace nndx
