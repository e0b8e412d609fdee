#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nndx/config.hpp"
#include "nndx/diagnostics.hpp"
#include "nndx/surgery.hpp"

namespace nndx {

enum class ExperimentKind { exp1, exp2, exp3, exp4 };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

// 1-based first epoch whose accuracy reaches `threshold`.
std::optional<std::size_t> epochs_to_threshold(std::span<const Real> accuracy, Real threshold);

struct MilestoneRow {
  std::string condition;
  Real best = 0;
  std::vector<Real> targets;  // absolute accuracy per threshold
  std::vector<std::optional<std::size_t>> hits;
  std::optional<std::size_t> switch_epoch;  // 0-based first post-switch epoch
};

struct MilestoneTable {
  std::vector<Real> thresholds;
  bool relative = true;
  std::vector<MilestoneRow> rows;

  const MilestoneRow& row(std::string_view condition) const;
};

MilestoneRow milestone_row(std::string condition, const TrainLog& log, const MilestoneSection& spec);

// condition,best_acc,<one column per threshold>,switch. Misses print "-".
std::string milestones_csv(const MilestoneTable& table);

struct ConditionRun {
  std::string name;
  MomentumPolicy policy;
  TrainLog log;
  Model model;
};

struct CorrectionOutcome {
  std::vector<ErrorRecord> errors_before;
  AttributionReport attribution;
  CorrectionPlan plan;
  TrainLog log;
  std::vector<ErrorRecord> errors_after;
  VerificationReport verification;
};

struct PipelineOutcome {
  ErrorPartition scan;
  ConfusionTaxonomy taxonomy;
  CorrectionOutcome correction;
  std::vector<FixedErrorExample> fixed;
  std::optional<std::string> crippled_group;
};

/// Everything an experiment produced. `files` maps report file names to contents.
/// When a stage throws, `failed_stage` names it and files from earlier stages stay.
struct ReportBundle {
  std::string name;
  std::map<std::string, std::string> files;
  std::vector<ConditionRun> conditions;
  MilestoneTable milestones;
  std::optional<PipelineOutcome> pipeline;
  std::optional<CorrectionOutcome> sgd_correction;
  std::optional<CorrectionOutcome> adam_correction;
  std::optional<FlagOverlap> overlap;
  std::optional<std::string> failed_stage;
  std::string failure;

  const ConditionRun& condition(std::string_view name) const;
};

// Trains the model on `split` under `policy` from the config's seeds.
ConditionRun run_condition(const RunConfig& config, const DataSplit& split, std::string name,
                           const MomentumPolicy& policy);
ConditionRun run_adam_condition(const RunConfig& config, const DataSplit& split, std::string name);

MomentumPolicy constant_policy(const RunConfig& config);
MomentumPolicy onecycle_policy(const RunConfig& config);
MomentumPolicy physics_policy(const RunConfig& config);

// Attribution, plan, surgical retraining and verification for one trained model.
CorrectionOutcome correct_model(const RunConfig& config, const Model& model, const DataSplit& split);

// exp1: constant / onecycle / physics regime scans and milestones.
// exp2: scan -> localize -> diagnose -> treat -> verify on the constant-momentum baseline.
// exp3: SGD vs Adam attribution overlap and surgery on each.
// exp4: exp1 plus accuracy- and epoch-triggered hybrids.
ReportBundle run_experiment(ExperimentKind kind, const RunConfig& config);

struct ManifestEntry {
  std::string file;
  std::size_t bytes = 0;
  std::string sha256;
};

std::string sha256_hex(std::string_view data);

// Writes every bundle file plus manifest.json into `dir`. Throws IoError.
std::vector<ManifestEntry> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir);
std::string manifest_json(const ReportBundle& bundle, const std::vector<ManifestEntry>& entries);

}  // namespace nndx
