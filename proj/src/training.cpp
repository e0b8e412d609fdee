#include "nndx/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace nndx {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  throw ValidationError("train.optimizer: expected sgd or adam, got '" + std::string(text) + "'");
}

std::vector<Real> TrainLog::accuracy_history() const {
  std::vector<Real> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.test_acc);
  return out;
}

Real TrainLog::best_accuracy() const {
  Real best = 0;
  for (const auto& r : rows) best = std::max(best, r.test_acc);
  return best;
}

std::string train_log_csv(const TrainLog& log) {
  std::string out = "epoch,alpha,mu,loss,test_acc,delta\n";
  for (const auto& r : log.rows) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.alpha, r.mu, r.loss, r.test_acc,
                       r.delta);
  }
  return out;
}

TrainLog parse_train_log_csv(std::string_view text) {
  TrainLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "epoch,alpha,mu,loss,test_acc,delta") throw ParseError(line_no, "not a training log header");
      continue;
    }
    TrainLogRow row;
    Real epoch = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &epoch, &row.alpha, &row.mu, &row.loss, &row.test_acc,
                    &row.delta) != 6) {
      throw ParseError(line_no, "expected 6 numeric columns");
    }
    row.epoch = static_cast<std::size_t>(epoch);
    log.rows.push_back(row);
  }
  return log;
}

TrainLog optimize(std::vector<LayerGroup>& params, const Objective& objective, const TrainConfig& config) {
  validate(config.momentum);
  TrainLog log;
  if (config.epochs == 0) return log;
  if (config.schedule.epochs < config.epochs) {
    throw ContractError(fmt::format("lr schedule covers {} epochs, training asks for {}", config.schedule.epochs,
                                    config.epochs));
  }
  log.initial_acc = objective.evaluate ? objective.evaluate() : 0;

  SgdMomentum sgd(params, config.weight_decay);
  Adam adam(params, config.weight_decay, config.adam);
  std::vector<Real> history;
  for (std::size_t t = 0; t < config.epochs; ++t) {
    const Real alpha = cosine_lr(t, config.schedule);
    Real mu = config.adam.beta1;
    if (config.optimizer == OptimizerKind::sgd) {
      mu = momentum_at(config.momentum, t, alpha, config.schedule, history);
      sgd.set_hyper(alpha, mu);
      if (const auto* h = std::get_if<HybridMomentum>(&config.momentum); h != nullptr && !log.switch_epoch) {
        log.switch_epoch = hybrid_switch_epoch(*h, t, history);
      }
    } else {
      adam.set_lr(alpha);
    }

    if (objective.begin_epoch) objective.begin_epoch(t);
    Real loss_sum = 0;
    for (std::size_t b = 0; b < objective.batches_per_epoch; ++b) {
      for (auto& g : params) {
        for (auto& tensor : g.tensors) tensor.zero_grad();
      }
      const Real loss = objective.accumulate(b);
      if (!std::isfinite(loss)) throw NumericError(t + 1, b + 1, "loss is not finite");
      loss_sum += loss;
      if (config.optimizer == OptimizerKind::sgd) {
        sgd.step(params);
      } else {
        adam.step(params);
      }
    }

    const Real acc = objective.evaluate ? objective.evaluate() : 0;
    history.push_back(acc);
    log.rows.push_back({t + 1, alpha, mu, loss_sum / static_cast<Real>(objective.batches_per_epoch), acc,
                        acc - log.initial_acc});
  }
  return log;
}

Evaluation evaluate(const Model& model, const Dataset& data) {
  if (data.size() == 0) throw ContractError("evaluate: empty dataset");
  Evaluation ev;
  ev.predictions.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pred = model.predict(data.sample(i));
    ev.predictions.push_back(pred);
    if (pred == data.labels[i]) ++ev.correct;
  }
  ev.accuracy = static_cast<Real>(ev.correct) / static_cast<Real>(data.size());
  return ev;
}

TrainLog train(Model& model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& config) {
  if (train_set.size() == 0) throw ContractError("train: empty training set");
  if (config.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  const std::size_t batch = std::min(config.batch_size, train_set.size());

  Objective obj;
  obj.batches_per_epoch = (train_set.size() + batch - 1) / batch;
  obj.begin_epoch = [&](std::size_t) { std::shuffle(order.begin(), order.end(), rng); };
  obj.accumulate = [&](std::size_t b) {
    const std::size_t begin = b * batch;
    const std::size_t end = std::min(begin + batch, order.size());
    const Real scale = Real{1} / static_cast<Real>(end - begin);
    Real loss = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t s = order[i];
      Tape tape;
      const Var out = tape.scale(tape.softmax_cross_entropy(model.forward(tape, train_set.sample(s)),
                                                            train_set.labels[s]),
                                 scale);
      tape.backward(out);
      loss += tape.value(out).values[0];
    }
    return loss;
  };
  obj.evaluate = [&] { return evaluate(model, test_set).accuracy; };
  return optimize(model.groups(), obj, config);
}

}  // namespace nndx
