#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nndx/dataset.hpp"
#include "nndx/model.hpp"
#include "nndx/optimizers.hpp"
#include "nndx/schedules.hpp"
#include "nndx/surgery.hpp"
#include "nndx/training.hpp"

namespace nndx {

struct TrainSection {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  Real weight_decay = 5e-4;
  Real lr_max = 0.1;
  Real lr_min = 1e-4;
  std::uint64_t seed = 42;
  Real regime_tol = 0.05;
  bool operator==(const TrainSection&) const = default;
};

struct MomentumSection {
  Real constant = 0.9;
  Real onecycle_lo = 0.85;
  Real onecycle_hi = 0.95;
  Real physics_lo = 0.5;
  Real physics_hi = 0.99;
  bool operator==(const MomentumSection&) const = default;
};

struct AdamSection {
  Real lr_max = 1e-3;
  Real lr_min = 1e-5;
  AdamHyper hyper;
  bool operator==(const AdamSection&) const = default;
};

struct HybridSection {
  Real accuracy_threshold = 0.7;
  // 0 picks the first epoch at which the physics run reached accuracy_threshold.
  std::size_t switch_epoch = 0;
  Real post_mu = 0.9;
  bool operator==(const HybridSection&) const = default;
};

struct PipelineSection {
  // Hidden group to re-randomize after baseline training; empty disables.
  std::string cripple_group;
  std::uint64_t cripple_seed = 1000;
  std::size_t top_k = 5;
  std::size_t fixed_examples = 10;
  bool operator==(const PipelineSection&) const = default;
};

struct SurgerySection {
  std::size_t epochs = 30;
  Real lr_max = 0.01;
  Real lr_min = 1e-4;
  bool operator==(const SurgerySection&) const = default;
};

struct MilestoneSection {
  std::vector<Real> thresholds = {0.85, 0.90, 0.95, 0.98};
  // Thresholds are fractions of each run's best accuracy; false makes them absolute.
  bool relative = true;
  bool operator==(const MilestoneSection&) const = default;
};

/// Everything a run depends on. Text form is one `section.key = value` per line;
/// `#` starts a comment.
struct RunConfig {
  ModelSpec model{ModelKind::mlp, {10, 16, 16, 16, 16, 5}, {}, {}, 7};
  DatasetSpec data{DatasetKind::blobs, 5, 10, 100, 100, 1.5, 3.0, 11};
  std::string train_csv;
  std::string test_csv;
  TrainSection train;
  MomentumSection momentum;
  AdamSection adam;
  HybridSection hybrid;
  PipelineSection pipeline;
  SurgerySection surgery;
  MilestoneSection milestones;
  std::string output_dir = "reports";

  bool operator==(const RunConfig&) const = default;

  // Shifts the model, data and training seeds by `offset` for multi-seed runs.
  RunConfig with_seed_offset(std::uint64_t offset) const;
};

std::string to_text(const RunConfig& config);
// Unknown keys and malformed values raise ParseError with the line number.
RunConfig parse_config(std::string_view text);
// Reads the file; NNDX_OUTPUT_DIR, when set, overrides output.dir.
RunConfig load_config(const std::filesystem::path& path);

LRSchedule sgd_schedule(const RunConfig& config);
LRSchedule adam_schedule(const RunConfig& config);
TrainConfig train_config(const RunConfig& config, const MomentumPolicy& policy);
TrainConfig adam_train_config(const RunConfig& config);
PlanOverrides surgery_overrides(const RunConfig& config);
DataSplit load_data(const RunConfig& config);

}  // namespace nndx
