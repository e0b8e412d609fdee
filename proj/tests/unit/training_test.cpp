#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "nndx/training.hpp"

using namespace nndx;

namespace {

DataSplit separable_blobs() {
  return generate_dataset({DatasetKind::blobs, 2, 2, 50, 50, 0.3, 6.0, 3});
}

Model small_mlp(std::uint64_t seed = 1) { return Model({ModelKind::mlp, {2, 8, 8, 8, 8, 2}, {}, {}, seed}); }

TrainConfig short_config(std::size_t epochs = 30) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.schedule = {LRKind::cosine, 0.05, 1e-4, epochs};
  c.momentum = ConstantMomentum{0.9};
  return c;
}

}  // namespace

TEST(Train, SeparableBlobsAreFitExactly) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  const auto log = train(m, split.train, split.train, short_config());
  EXPECT_EQ(log.rows.size(), 30u);
  EXPECT_EQ(evaluate(m, split.train).accuracy, 1.0);
  EXPECT_EQ(evaluate(m, split.test).accuracy, 1.0);
}

TEST(Train, LogRowsFollowScheduleAndPolicy) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  auto cfg = short_config(10);
  cfg.momentum = PhysicsMomentum{};
  const auto log = train(m, split.train, split.test, cfg);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(log.rows[t].epoch, t + 1);
    EXPECT_EQ(log.rows[t].alpha, cosine_lr(t, cfg.schedule));
    EXPECT_EQ(log.rows[t].mu, physics_momentum(log.rows[t].alpha));
    EXPECT_DOUBLE_EQ(log.rows[t].delta, log.rows[t].test_acc - log.initial_acc);
  }
}

TEST(Train, DeterministicFromSeed) {
  const auto split = separable_blobs();
  Model a = small_mlp(), b = small_mlp();
  const auto la = train(a, split.train, split.test, short_config(5));
  const auto lb = train(b, split.train, split.test, short_config(5));
  EXPECT_EQ(train_log_csv(la), train_log_csv(lb));
  EXPECT_TRUE(tensors_bit_identical_outside(a, b, {}));
}

TEST(Train, ZeroEpochsIsEmptyLog) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  const Model before = m;
  const auto log = train(m, split.train, split.test, short_config(0));
  EXPECT_TRUE(log.rows.empty());
  EXPECT_TRUE(tensors_bit_identical_outside(before, m, {}));
}

TEST(Train, ScheduleMustCoverEpochs) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  auto cfg = short_config(10);
  cfg.schedule.epochs = 5;
  EXPECT_THROW(train(m, split.train, split.test, cfg), ContractError);
}

TEST(Train, NonFiniteLossReportsEpochAndBatch) {
  auto split = separable_blobs();
  split.train.features[0] = std::numeric_limits<Real>::infinity();
  Model m = small_mlp();
  try {
    train(m, split.train, split.test, short_config(3));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.epoch(), 1u);
    EXPECT_GE(e.batch(), 1u);
  }
}

TEST(Train, HybridRecordsSwitchEpoch) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  auto cfg = short_config(10);
  cfg.momentum = HybridMomentum{PhysicsMomentum{}, EpochTrigger{4}, 0.9};
  const auto log = train(m, split.train, split.test, cfg);
  ASSERT_TRUE(log.switch_epoch.has_value());
  EXPECT_EQ(*log.switch_epoch, 4u);
  EXPECT_EQ(log.rows[4].mu, 0.9);
  EXPECT_EQ(log.rows[3].mu, physics_momentum(log.rows[3].alpha));
}

TEST(Train, AdamRuns) {
  const auto split = separable_blobs();
  Model m = small_mlp();
  auto cfg = short_config(10);
  cfg.optimizer = OptimizerKind::adam;
  cfg.schedule = {LRKind::cosine, 1e-2, 1e-4, 10};
  const auto log = train(m, split.train, split.test, cfg);
  EXPECT_EQ(log.rows.back().mu, 0.9);
  EXPECT_GT(log.best_accuracy(), 0.9);
}

TEST(TrainLog, CsvRoundTrip) {
  TrainLog log;
  log.rows.push_back({1, 0.01, 0.8, 0.0018, 0.9552, 0.0004});
  log.rows.push_back({2, 0.1 / 3, 1 - 1e-9, 1e-300, 0.5, -0.25});
  const auto csv = train_log_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,alpha,mu,loss,test_acc,delta");
  const auto back = parse_train_log_csv(csv);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].alpha, 0.1 / 3);
  EXPECT_EQ(back.rows[1].mu, 1 - 1e-9);
  EXPECT_EQ(train_log_csv(back), csv);
  EXPECT_THROW(parse_train_log_csv("bad header\n"), ParseError);
}

TEST(Evaluate, EmptyDataIsContractError) {
  const Model m = small_mlp();
  EXPECT_THROW(evaluate(m, Dataset{2, 2, {}, {}}), ContractError);
}
