#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nndx/dataset.hpp"
#include "nndx/model.hpp"
#include "nndx/optimizers.hpp"
#include "nndx/schedules.hpp"

namespace nndx {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  Real weight_decay = 5e-4;
  // `schedule.epochs` is the cosine period; it must cover `epochs`.
  LRSchedule schedule;
  MomentumPolicy momentum = ConstantMomentum{0.9};
  OptimizerKind optimizer = OptimizerKind::sgd;
  AdamHyper adam;
  std::uint64_t seed = 42;
};

struct TrainLogRow {
  std::size_t epoch = 0;  // 1-based
  Real alpha = 0;
  Real mu = 0;          // beta1 for Adam
  Real loss = 0;        // mean training loss over the epoch
  Real test_acc = 0;
  Real delta = 0;       // test_acc minus accuracy before the first epoch
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  Real initial_acc = 0;
  // 0-based epoch from which a hybrid policy used its post-switch momentum.
  std::optional<std::size_t> switch_epoch;

  std::vector<Real> accuracy_history() const;
  Real best_accuracy() const;
};

// epoch,alpha,mu,loss,test_acc,delta
std::string train_log_csv(const TrainLog& log);
TrainLog parse_train_log_csv(std::string_view text);

/// Gradient source for optimize(). The trainer zeroes every parameter gradient
/// before each `accumulate` call; `accumulate` adds the batch gradient and
/// returns the batch loss.
struct Objective {
  std::size_t batches_per_epoch = 1;
  std::function<void(std::size_t epoch)> begin_epoch;
  std::function<Real(std::size_t batch)> accumulate;
  std::function<Real()> evaluate;
};

// Runs the epoch loop: alpha and mu are fixed at the start of each epoch from
// the schedule and policy, and `evaluate` feeds the hybrid accuracy trigger.
TrainLog optimize(std::vector<LayerGroup>& params, const Objective& objective, const TrainConfig& config);

// Mean cross-entropy minibatch training on `train`, accuracy on `test` after every epoch.
// Batch order is reshuffled each epoch from `config.seed`. Throws NumericError on a
// non-finite loss.
TrainLog train(Model& model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& config);

struct Evaluation {
  Real accuracy = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> predictions;
};

Evaluation evaluate(const Model& model, const Dataset& data);

}  // namespace nndx
