#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nndx/diagnostics.hpp"
#include "nndx/training.hpp"

namespace nndx {

struct CorrectionPlan {
  GroupSet flagged;
  std::size_t epochs = 30;
  Real lr_max = 0.01;
  Real lr_min = 1e-4;
  PhysicsMomentum momentum;
  std::size_t batch_size = 32;
  Real weight_decay = 5e-4;
  std::uint64_t seed = 42;

  // Recorded from the model the plan was built for.
  std::size_t trainable_params = 0;
  std::size_t total_params = 0;
  std::size_t trainable_tensors = 0;
  std::size_t total_tensors = 0;

  Real trainable_fraction() const;
};

struct PlanOverrides {
  std::optional<std::size_t> epochs;
  std::optional<Real> lr_max;
  std::optional<Real> lr_min;
  std::optional<std::size_t> batch_size;
  std::optional<Real> weight_decay;
  std::optional<std::uint64_t> seed;
};

CorrectionPlan plan_from_flags(const Model& model, const GroupSet& flags, const PlanOverrides& overrides = {});

// Training config equivalent to the plan: cosine lr_max -> lr_min over plan.epochs, physics momentum.
TrainConfig surgery_train_config(const CorrectionPlan& plan);

struct SurgeryResult {
  Model model;
  TrainLog log;
};

// Retrains a copy of `model` with every group outside plan.flagged frozen. The
// input model is never modified; on failure the exception propagates and no
// corrected model exists. The result keeps the input's frozen flags.
SurgeryResult surgical_retrain(const Model& model, const CorrectionPlan& plan, const Dataset& train_set,
                               const Dataset& test_set);

struct Savings {
  Real cost_model = 0;   // 1 - epochs (1 + 2 rho) / (full_epochs * 3)
  Real epoch_ratio = 0;  // 1 - epochs / full_epochs
};

Savings compute_savings(std::size_t plan_epochs, std::size_t full_epochs, Real trainable_fraction);

struct VerificationReport {
  IdSet errors_before;
  IdSet errors_after;
  std::size_t fixed = 0;
  std::size_t introduced = 0;
  long long net = 0;
  Real acc_before = 0;
  Real acc_after = 0;
  std::size_t test_size = 0;
  Real trainable_fraction = 0;
  std::size_t trainable_tensors = 0;
  std::size_t total_tensors = 0;
  std::size_t surgery_epochs = 0;
  std::size_t full_epochs = 0;
  Savings savings;
  bool frozen_integrity = false;
};

VerificationReport verify_correction(const IdSet& errors_before, const IdSet& errors_after, Real acc_before,
                                     Real acc_after, const CorrectionPlan& plan, std::size_t full_epochs,
                                     std::size_t test_size, bool frozen_integrity);

// Bitwise check that only flagged groups changed.
bool frozen_integrity(const Model& before, const Model& after, const CorrectionPlan& plan);

std::string verification_json(const VerificationReport& report);

struct FixedErrorExample {
  std::size_t id = 0;
  std::size_t label = 0;
  std::size_t pred_before = 0;
  std::size_t pred_after = 0;
  std::string group;  // empty when the confusion pair is not in the taxonomy
};

// First k fixed errors in sample-id order. A fixed error is correct afterwards,
// so pred_after equals the true label.
std::vector<FixedErrorExample> fixed_error_examples(const std::vector<ErrorRecord>& errors_before,
                                                    const std::vector<ErrorRecord>& errors_after,
                                                    const ConfusionTaxonomy& taxonomy, std::size_t k);

// id,true,pred_before,pred_after,attributed_group
std::string fixed_examples_csv(const std::vector<FixedErrorExample>& examples);

}  // namespace nndx
