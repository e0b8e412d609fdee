#include "nndx/experiments.hpp"

#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "json.hpp"

namespace nndx {

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::exp1: return "exp1";
    case ExperimentKind::exp2: return "exp2";
    case ExperimentKind::exp3: return "exp3";
    case ExperimentKind::exp4: return "exp4";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::exp1, ExperimentKind::exp2, ExperimentKind::exp3, ExperimentKind::exp4}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(text) + "' (expected exp1|exp2|exp3|exp4)");
}

std::optional<std::size_t> epochs_to_threshold(std::span<const Real> accuracy, Real threshold) {
  for (std::size_t i = 0; i < accuracy.size(); ++i) {
    if (accuracy[i] >= threshold) return i + 1;
  }
  return std::nullopt;
}

const MilestoneRow& MilestoneTable::row(std::string_view condition) const {
  for (const auto& r : rows) {
    if (r.condition == condition) return r;
  }
  throw NameError("no milestone row for '" + std::string(condition) + "'");
}

MilestoneRow milestone_row(std::string condition, const TrainLog& log, const MilestoneSection& spec) {
  MilestoneRow row;
  row.condition = std::move(condition);
  row.best = log.best_accuracy();
  row.switch_epoch = log.switch_epoch;
  const auto history = log.accuracy_history();
  for (Real thr : spec.thresholds) {
    const Real target = spec.relative ? thr * row.best : thr;
    row.targets.push_back(target);
    row.hits.push_back(epochs_to_threshold(history, target));
  }
  return row;
}

std::string milestones_csv(const MilestoneTable& table) {
  std::string out = "condition,best_acc";
  for (Real thr : table.thresholds) out += fmt::format(",{}_{:g}", table.relative ? "rel" : "abs", thr);
  out += ",switch\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{:.6f}", r.condition, r.best);
    for (const auto& h : r.hits) out += h ? fmt::format(",{}", *h) : std::string(",-");
    out += r.switch_epoch ? fmt::format(",{}\n", *r.switch_epoch) : std::string(",-\n");
  }
  return out;
}

const ConditionRun& ReportBundle::condition(std::string_view wanted) const {
  for (const auto& c : conditions) {
    if (c.name == wanted) return c;
  }
  throw NameError("no condition '" + std::string(wanted) + "' in bundle " + name);
}

MomentumPolicy constant_policy(const RunConfig& config) { return ConstantMomentum{config.momentum.constant}; }

MomentumPolicy onecycle_policy(const RunConfig& config) {
  return OneCycleMomentum{config.momentum.onecycle_lo, config.momentum.onecycle_hi};
}

MomentumPolicy physics_policy(const RunConfig& config) {
  return PhysicsMomentum{config.momentum.physics_lo, config.momentum.physics_hi};
}

ConditionRun run_condition(const RunConfig& config, const DataSplit& split, std::string name,
                           const MomentumPolicy& policy) {
  ConditionRun run{std::move(name), policy, {}, Model(config.model)};
  run.log = train(run.model, split.train, split.test, train_config(config, policy));
  return run;
}

ConditionRun run_adam_condition(const RunConfig& config, const DataSplit& split, std::string name) {
  const TrainConfig tc = adam_train_config(config);
  ConditionRun run{std::move(name), tc.momentum, {}, Model(config.model)};
  run.log = train(run.model, split.train, split.test, tc);
  return run;
}

CorrectionOutcome correct_model(const RunConfig& config, const Model& model, const DataSplit& split) {
  CorrectionOutcome out;
  out.errors_before = collect_errors(model, split.test);
  out.attribution = localize(model, out.errors_before, split.test);
  out.plan = plan_from_flags(model, out.attribution.flags, surgery_overrides(config));
  auto result = surgical_retrain(model, out.plan, split.train, split.test);
  out.log = std::move(result.log);
  out.errors_after = collect_errors(result.model, split.test);
  const Real acc_before = evaluate(model, split.test).accuracy;
  const Real acc_after = evaluate(result.model, split.test).accuracy;
  out.verification = verify_correction(error_ids(out.errors_before), error_ids(out.errors_after), acc_before,
                                       acc_after, out.plan, config.train.epochs, split.test.size(),
                                       frozen_integrity(model, result.model, out.plan));
  return out;
}

namespace {

struct StageFailed {};

// Runs `body` as stage `stage`; on an exception the bundle records the stage and throws StageFailed.
void stage(ReportBundle& bundle, std::string_view name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    bundle.failed_stage = std::string(name);
    bundle.failure = e.what();
    throw StageFailed{};
  }
}

void add_condition_files(ReportBundle& b, const RunConfig& config, const ConditionRun& run) {
  b.files["trainlog_" + run.name + ".csv"] = train_log_csv(run.log);
  const auto history = run.log.accuracy_history();
  const auto sched = sgd_schedule(config);
  const auto scan = scan_schedule(sched, run.policy, config.train.epochs, config.train.regime_tol,
                                  PhysicsReading::clamped, history);
  b.files["regimes_" + run.name + ".csv"] = regime_scan_csv(scan);
  if (std::holds_alternative<PhysicsMomentum>(run.policy)) {
    const auto raw = scan_schedule(sched, run.policy, config.train.epochs, config.train.regime_tol,
                                   PhysicsReading::raw, history);
    b.files["regimes_" + run.name + "_raw.csv"] = regime_scan_csv(raw);
  }
}

void finish_milestones(ReportBundle& b, const RunConfig& config) {
  b.milestones.thresholds = config.milestones.thresholds;
  b.milestones.relative = config.milestones.relative;
  b.milestones.rows.clear();
  std::string counts = "condition,reading,underdamped,critical,overdamped\n";
  const auto sched = sgd_schedule(config);
  for (const auto& run : b.conditions) {
    b.milestones.rows.push_back(milestone_row(run.name, run.log, config.milestones));
    const auto history = run.log.accuracy_history();
    for (auto reading : {PhysicsReading::clamped, PhysicsReading::raw}) {
      if (reading == PhysicsReading::raw && !std::holds_alternative<PhysicsMomentum>(run.policy)) continue;
      const auto s = scan_schedule(sched, run.policy, config.train.epochs, config.train.regime_tol, reading, history);
      counts += fmt::format("{},{},{},{},{}\n", run.name, reading == PhysicsReading::raw ? "raw" : "clamped",
                            s.underdamped, s.critical, s.overdamped);
    }
  }
  b.files["milestones.csv"] = milestones_csv(b.milestones);
  b.files["regime_counts.csv"] = counts;
}

void run_base_conditions(ReportBundle& b, const RunConfig& config, const DataSplit& split) {
  const std::vector<std::pair<std::string, MomentumPolicy>> conditions = {
      {"constant", constant_policy(config)}, {"onecycle", onecycle_policy(config)}, {"physics", physics_policy(config)}};
  for (const auto& [name, policy] : conditions) {
    stage(b, "train_" + name, [&] {
      b.conditions.push_back(run_condition(config, split, name, policy));
      add_condition_files(b, config, b.conditions.back());
    });
  }
}

void add_correction_files(ReportBundle& b, const CorrectionOutcome& c, const std::string& suffix) {
  b.files["attribution" + suffix + ".csv"] = attribution_csv(c.attribution);
  b.files["attribution" + suffix + ".json"] = attribution_json(c.attribution);
  b.files["correction_log" + suffix + ".csv"] = train_log_csv(c.log);
  b.files["verification" + suffix + ".json"] = verification_json(c.verification);
}

void run_exp1(ReportBundle& b, const RunConfig& config, const DataSplit& split) {
  run_base_conditions(b, config, split);
  stage(b, "milestones", [&] { finish_milestones(b, config); });
}

void run_exp2(ReportBundle& b, const RunConfig& config, const DataSplit& split) {
  run_base_conditions(b, config, split);
  stage(b, "milestones", [&] { finish_milestones(b, config); });
  PipelineOutcome p;
  b.pipeline = p;
  auto& pipe = *b.pipeline;
  stage(b, "scan", [&] {
    std::vector<std::vector<std::size_t>> preds;
    std::vector<std::string> names;
    for (const auto& run : b.conditions) {
      preds.push_back(evaluate(run.model, split.test).predictions);
      names.push_back(run.name);
    }
    pipe.scan = cross_model_scan(preds, split.test.labels, names);
    b.files["error_scan.csv"] = error_partition_csv(pipe.scan);
  });

  Model baseline = b.condition("constant").model;
  if (!config.pipeline.cripple_group.empty()) {
    stage(b, "cripple", [&] {
      baseline.reinitialize_group(config.pipeline.cripple_group, config.pipeline.cripple_seed);
      pipe.crippled_group = config.pipeline.cripple_group;
    });
  }
  auto& c = pipe.correction;
  stage(b, "localize", [&] {
    c.errors_before = collect_errors(baseline, split.test);
    c.attribution = localize(baseline, c.errors_before, split.test);
    b.files["attribution.csv"] = attribution_csv(c.attribution);
    b.files["attribution.json"] = attribution_json(c.attribution);
  });
  stage(b, "diagnose", [&] {
    pipe.taxonomy = attribute_confusion_pairs(baseline, c.errors_before, split.test, config.pipeline.top_k);
    b.files["taxonomy.csv"] = taxonomy_csv(pipe.taxonomy);
  });
  Model corrected = baseline;
  stage(b, "treat", [&] {
    c.plan = plan_from_flags(baseline, c.attribution.flags, surgery_overrides(config));
    auto result = surgical_retrain(baseline, c.plan, split.train, split.test);
    c.log = std::move(result.log);
    corrected = std::move(result.model);
    b.files["correction_log.csv"] = train_log_csv(c.log);
  });
  stage(b, "verify", [&] {
    c.errors_after = collect_errors(corrected, split.test);
    c.verification = verify_correction(error_ids(c.errors_before), error_ids(c.errors_after),
                                       evaluate(baseline, split.test).accuracy,
                                       evaluate(corrected, split.test).accuracy, c.plan, config.train.epochs,
                                       split.test.size(), frozen_integrity(baseline, corrected, c.plan));
    b.files["verification.json"] = verification_json(c.verification);
    pipe.fixed = fixed_error_examples(c.errors_before, c.errors_after, pipe.taxonomy, config.pipeline.fixed_examples);
    b.files["fixed_examples.csv"] = fixed_examples_csv(pipe.fixed);
  });
}

void run_exp3(ReportBundle& b, const RunConfig& config, const DataSplit& split) {
  stage(b, "train_sgd", [&] {
    b.conditions.push_back(run_condition(config, split, "sgd", constant_policy(config)));
    b.files["trainlog_sgd.csv"] = train_log_csv(b.conditions.back().log);
  });
  stage(b, "train_adam", [&] {
    b.conditions.push_back(run_adam_condition(config, split, "adam"));
    b.files["trainlog_adam.csv"] = train_log_csv(b.conditions.back().log);
  });
  stage(b, "milestones", [&] {
    b.milestones.thresholds = config.milestones.thresholds;
    b.milestones.relative = config.milestones.relative;
    for (const auto& run : b.conditions) b.milestones.rows.push_back(milestone_row(run.name, run.log, config.milestones));
    b.files["milestones.csv"] = milestones_csv(b.milestones);
  });
  stage(b, "correct_sgd", [&] {
    b.sgd_correction = correct_model(config, b.condition("sgd").model, split);
    add_correction_files(b, *b.sgd_correction, "_sgd");
  });
  stage(b, "correct_adam", [&] {
    b.adam_correction = correct_model(config, b.condition("adam").model, split);
    add_correction_files(b, *b.adam_correction, "_adam");
  });
  stage(b, "overlap", [&] {
    const auto& a = b.sgd_correction->attribution.flags;
    const auto& d = b.adam_correction->attribution.flags;
    b.overlap = flag_overlap(a, d);
    b.files["overlap.json"] = flag_overlap_json(*b.overlap, a, d);
  });
}

void run_exp4(ReportBundle& b, const RunConfig& config, const DataSplit& split) {
  run_base_conditions(b, config, split);
  const auto physics_history = b.condition("physics").log.accuracy_history();
  const PhysicsMomentum inner{config.momentum.physics_lo, config.momentum.physics_hi};
  stage(b, "train_hybrid_acc", [&] {
    HybridMomentum h{inner, AccuracyTrigger{config.hybrid.accuracy_threshold}, config.hybrid.post_mu};
    b.conditions.push_back(run_condition(config, split, "hybrid_acc", h));
    add_condition_files(b, config, b.conditions.back());
  });
  stage(b, "train_hybrid_epoch", [&] {
    std::size_t k = config.hybrid.switch_epoch;
    if (k == 0) {
      // Where the physics run first reached the threshold; mid-run when it never did.
      k = epochs_to_threshold(physics_history, config.hybrid.accuracy_threshold)
              .value_or(std::max<std::size_t>(config.train.epochs / 2, 1));
    }
    HybridMomentum h{inner, EpochTrigger{k}, config.hybrid.post_mu};
    b.conditions.push_back(run_condition(config, split, "hybrid_epoch", h));
    add_condition_files(b, config, b.conditions.back());
  });
  stage(b, "milestones", [&] { finish_milestones(b, config); });
}

}  // namespace

ReportBundle run_experiment(ExperimentKind kind, const RunConfig& config) {
  ReportBundle b;
  b.name = std::string(to_string(kind));
  b.files["config.txt"] = to_text(config);
  try {
    DataSplit split;
    stage(b, "data", [&] {
      config.model.validate();
      split = load_data(config);
    });
    switch (kind) {
      case ExperimentKind::exp1: run_exp1(b, config, split); break;
      case ExperimentKind::exp2: run_exp2(b, config, split); break;
      case ExperimentKind::exp3: run_exp3(b, config, split); break;
      case ExperimentKind::exp4: run_exp4(b, config, split); break;
    }
  } catch (const StageFailed&) {
    nlohmann::ordered_json j;
    j["experiment"] = b.name;
    j["failed_stage"] = *b.failed_stage;
    j["error"] = b.failure;
    b.files["failure.json"] = j.dump(2) + "\n";
  }
  return b;
}

}  // namespace nndx
