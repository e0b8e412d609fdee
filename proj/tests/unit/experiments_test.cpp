#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "nndx/experiments.hpp"

using namespace nndx;

namespace {

RunConfig quick() {
  RunConfig c;
  c.train.epochs = 6;
  c.surgery.epochs = 3;
  c.data.per_class = 30;
  c.data.test_per_class = 30;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nndx_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(EpochsToThreshold, FirstHitSemantics) {
  const std::vector<Real> h{0.5, 0.91, 0.89};
  EXPECT_EQ(epochs_to_threshold(h, 0.90), std::optional<std::size_t>(2));
  EXPECT_EQ(epochs_to_threshold(h, 0.95), std::nullopt);
  std::vector<Real> physics(100, 0.8);
  for (std::size_t i = 51; i < 100; ++i) physics[i] = 0.9 + 0.001 * static_cast<Real>(i % 3);
  EXPECT_EQ(epochs_to_threshold(physics, 0.90), std::optional<std::size_t>(52));
}

TEST(Milestones, RelativeAndAbsoluteTargets) {
  TrainLog log;
  const std::vector<Real> acc{0.2, 0.5, 0.7, 0.75, 0.8};
  for (std::size_t i = 0; i < acc.size(); ++i) log.rows.push_back({i + 1, 0, 0, 0, acc[i], 0});
  const auto rel = milestone_row("x", log, {{0.85, 0.9, 1.0}, true});
  EXPECT_EQ(rel.best, 0.8);
  EXPECT_EQ(rel.hits[0], std::optional<std::size_t>(3));
  EXPECT_EQ(rel.hits[1], std::optional<std::size_t>(4));
  EXPECT_EQ(rel.hits[2], std::optional<std::size_t>(5));
  const auto abs = milestone_row("x", log, {{0.5, 0.9}, false});
  EXPECT_EQ(abs.hits[0], std::optional<std::size_t>(2));
  EXPECT_EQ(abs.hits[1], std::nullopt);
  MilestoneTable t{{0.5, 0.9}, false, {abs}};
  EXPECT_EQ(milestones_csv(t), "condition,best_acc,abs_0.5,abs_0.9,switch\nx,0.800000,2,-,-\n");
}

TEST(Experiment, Exp1FilesAndMilestoneConsistency) {
  const auto b = run_experiment(ExperimentKind::exp1, quick());
  ASSERT_FALSE(b.failed_stage) << b.failure;
  for (const char* f : {"milestones.csv", "regimes_constant.csv", "regimes_onecycle.csv", "regimes_physics.csv",
                        "regimes_physics_raw.csv", "trainlog_constant.csv", "trainlog_onecycle.csv",
                        "trainlog_physics.csv", "regime_counts.csv", "config.txt"}) {
    EXPECT_EQ(b.files.count(f), 1u) << f;
  }
  for (const auto& row : b.milestones.rows) {
    const auto log = parse_train_log_csv(b.files.at("trainlog_" + row.condition + ".csv"));
    const auto hist = log.accuracy_history();
    for (std::size_t k = 0; k < row.hits.size(); ++k) {
      EXPECT_EQ(row.hits[k], epochs_to_threshold(hist, row.targets[k])) << row.condition;
    }
  }
}

TEST(Experiment, Exp2PipelineSoundness) {
  auto c = quick();
  c.pipeline.cripple_group = "g2";
  const auto b = run_experiment(ExperimentKind::exp2, c);
  ASSERT_FALSE(b.failed_stage) << *b.failed_stage << ": " << b.failure;
  const auto& v = b.pipeline->correction.verification;
  EXPECT_TRUE(v.frozen_integrity);
  EXPECT_EQ(v.net, static_cast<long long>(v.errors_before.size()) - static_cast<long long>(v.errors_after.size()));
  EXPECT_EQ(b.pipeline->crippled_group, std::optional<std::string>("g2"));
  for (const char* f : {"error_scan.csv", "attribution.csv", "attribution.json", "taxonomy.csv", "correction_log.csv",
                        "verification.json", "fixed_examples.csv"}) {
    EXPECT_EQ(b.files.count(f), 1u) << f;
  }
}

TEST(Experiment, StageFailureKeepsEarlierOutputs) {
  auto c = quick();
  c.pipeline.cripple_group = "nonexistent";
  const auto b = run_experiment(ExperimentKind::exp2, c);
  ASSERT_TRUE(b.failed_stage);
  EXPECT_EQ(*b.failed_stage, "cripple");
  EXPECT_EQ(b.files.count("error_scan.csv"), 1u);
  EXPECT_EQ(b.files.count("trainlog_constant.csv"), 1u);
  EXPECT_EQ(b.files.count("attribution.json"), 0u);
  EXPECT_EQ(b.files.count("failure.json"), 1u);
}

TEST(Experiment, DataStageFailure) {
  auto c = quick();
  c.data.classes = 3;
  const auto b = run_experiment(ExperimentKind::exp1, c);
  ASSERT_TRUE(b.failed_stage);
  EXPECT_EQ(*b.failed_stage, "data");
}

TEST(Experiment, Exp3OverlapIsDeterministic) {
  const auto a = run_experiment(ExperimentKind::exp3, quick());
  const auto b = run_experiment(ExperimentKind::exp3, quick());
  ASSERT_FALSE(a.failed_stage) << *a.failed_stage << ": " << a.failure;
  ASSERT_TRUE(a.overlap);
  EXPECT_EQ(a.files.at("overlap.json"), b.files.at("overlap.json"));
  EXPECT_EQ(a.files.count("verification_adam.json"), 1u);
  EXPECT_EQ(a.condition("adam").log.rows.back().mu, 0.9);
}

TEST(Experiment, Exp4UnreachedTriggerDegeneratesToPhysics) {
  auto c = quick();
  c.hybrid.accuracy_threshold = 1.0;
  c.hybrid.switch_epoch = 3;
  const auto b = run_experiment(ExperimentKind::exp4, c);
  ASSERT_FALSE(b.failed_stage) << b.failure;
  const auto& hybrid = b.condition("hybrid_acc");
  const auto& physics = b.condition("physics");
  if (physics.log.best_accuracy() < 1.0) {
    EXPECT_FALSE(hybrid.log.switch_epoch);
    EXPECT_EQ(train_log_csv(hybrid.log), train_log_csv(physics.log));
    EXPECT_FALSE(b.milestones.row("hybrid_acc").switch_epoch);
  }
  EXPECT_EQ(b.milestones.row("hybrid_epoch").switch_epoch, std::optional<std::size_t>(3));
  EXPECT_NE(b.files.at("milestones.csv").find("hybrid_epoch"), std::string::npos);
}

TEST(Reports, EmptyBundleHasEmptyManifest) {
  const auto dir = scratch("empty_bundle");
  const auto entries = emit_reports(ReportBundle{}, dir);
  EXPECT_TRUE(entries.empty());
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("files").size(), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Reports, ManifestHashesAreStable) {
  ReportBundle b;
  b.name = "t";
  b.files["a.csv"] = "x,y\n1,2\n";
  b.files["b.json"] = "{}\n";
  const auto dir = scratch("hash_bundle");
  const auto first = emit_reports(b, dir);
  const auto second = emit_reports(b, dir);
  ASSERT_EQ(first.size(), 2u);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].sha256, second[i].sha256);
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  std::ifstream in(dir / "a.csv");
  std::string content((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(content, b.files["a.csv"]);
  std::filesystem::remove_all(dir);
}

TEST(Reports, UnwritableDirectoryIsIoError) {
  ReportBundle b;
  b.files["a.csv"] = "1\n";
  const auto blocker = std::filesystem::temp_directory_path() / "nndx_blocker_file";
  { std::ofstream(blocker) << "x"; }
  EXPECT_THROW(emit_reports(b, blocker / "sub"), IoError);
  std::filesystem::remove(blocker);
}

TEST(Experiment, ParseKind) {
  EXPECT_EQ(parse_experiment_kind("exp3"), ExperimentKind::exp3);
  EXPECT_THROW(parse_experiment_kind("exp9"), ConfigError);
}
