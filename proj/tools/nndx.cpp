// Command-line front end. Every subcommand exits 0 on success and prints
// "error [<stage>]: <message>" with a nonzero code on failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "nndx/checkpoint.hpp"
#include "nndx/config.hpp"
#include "nndx/experiments.hpp"
#include "nndx/oscillator.hpp"

using namespace nndx;

namespace {

struct StageError : std::runtime_error {
  StageError(std::string s, const std::string& what) : std::runtime_error(what), stage(std::move(s)) {}
  std::string stage;
};

template <typename F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

MomentumPolicy policy_by_name(const std::string& name, const RunConfig& c, std::size_t switch_epoch) {
  if (name == "constant") return constant_policy(c);
  if (name == "onecycle") return onecycle_policy(c);
  if (name == "physics") return physics_policy(c);
  const PhysicsMomentum inner{c.momentum.physics_lo, c.momentum.physics_hi};
  if (name == "hybrid-acc") return HybridMomentum{inner, AccuracyTrigger{c.hybrid.accuracy_threshold}, c.hybrid.post_mu};
  if (name == "hybrid-epoch") return HybridMomentum{inner, EpochTrigger{switch_epoch}, c.hybrid.post_mu};
  throw ConfigError("unknown policy '" + name + "'");
}

GroupSet flags_from(const std::string& attribution_path, const std::string& flag_list) {
  GroupSet flags;
  if (!flag_list.empty()) {
    std::stringstream ss(flag_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) flags.insert(item);
    }
    return flags;
  }
  if (attribution_path.empty()) throw ConfigError("give --attribution or --flags");
  const auto j = nlohmann::json::parse(read_file(attribution_path));
  for (const auto& f : j.at("flags")) flags.insert(f.get<std::string>());
  return flags;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-ball momentum schedules, error attribution and layer surgery for small networks"};
  app.require_subcommand(1);

  // oscillator
  auto* osc = app.add_subcommand("oscillator", "Simulate heavy-ball on 1/2 lambda theta^2; CSV t,theta,v");
  Real o_lambda = 1, o_alpha = 0.01, o_mu = 0.9, o_eps = 1e-6, o_theta0 = 1, o_v0 = 0;
  std::size_t o_steps = 200;
  std::string o_policy = "fixed", o_out;
  osc->add_option("--lambda", o_lambda, "Curvature")->capture_default_str();
  osc->add_option("--alpha", o_alpha, "Learning rate")->capture_default_str();
  osc->add_option("--mu", o_mu, "Momentum (ignored with --policy physics)")->capture_default_str();
  osc->add_option("--policy", o_policy, "fixed | physics (mu = 1 - 2 sqrt(alpha), unclamped)")
      ->check(CLI::IsMember({"fixed", "physics"}))
      ->capture_default_str();
  osc->add_option("--steps", o_steps, "Iterations")->capture_default_str();
  osc->add_option("--epsilon", o_eps, "Settling band")->capture_default_str();
  osc->add_option("--theta0", o_theta0, "Initial position")->capture_default_str();
  osc->add_option("--v0", o_v0, "Initial velocity")->capture_default_str();
  osc->add_option("--out", o_out, "Trajectory CSV path (default stdout); summary goes to stderr");

  // scan-schedule
  auto* scan = app.add_subcommand("scan-schedule", "Per-epoch damping regime table as CSV");
  Real s_lr_max = 0.1, s_lr_min = 1e-4, s_mu = 0.9, s_tol = 0.05, s_lo = 0.5, s_hi = 0.99;
  std::size_t s_epochs = 200;
  int s_digits = 6;
  std::string s_policy = "constant", s_reading = "clamped", s_out;
  std::vector<std::size_t> s_rows;
  scan->add_option("--lr-max", s_lr_max)->capture_default_str();
  scan->add_option("--lr-min", s_lr_min)->capture_default_str();
  scan->add_option("--epochs", s_epochs, "Cosine period and number of rows")->capture_default_str();
  scan->add_option("--policy", s_policy, "constant | onecycle | physics")
      ->check(CLI::IsMember({"constant", "onecycle", "physics"}))
      ->capture_default_str();
  scan->add_option("--mu", s_mu, "Momentum for --policy constant")->capture_default_str();
  scan->add_option("--clamp-lo", s_lo, "Physics clamp floor")->capture_default_str();
  scan->add_option("--clamp-hi", s_hi, "Physics clamp ceiling")->capture_default_str();
  scan->add_option("--tol", s_tol, "Critical band half-width")->capture_default_str();
  scan->add_option("--reading", s_reading, "clamped | raw momentum for the physics policy")
      ->check(CLI::IsMember({"clamped", "raw"}))
      ->capture_default_str();
  scan->add_option("--digits", s_digits, "Decimal places in the CSV")->capture_default_str();
  scan->add_option("--rows", s_rows, "Only emit these 1-based epochs (comma-separated)")->delimiter(',');
  scan->add_option("--out", s_out, "CSV path (default stdout); regime counts go to stderr");

  // train
  auto* tr = app.add_subcommand("train", "Train one condition; CSV epoch,alpha,mu,loss,test_acc,delta");
  std::string t_config, t_policy = "constant", t_log, t_ckpt;
  std::size_t t_switch = 52;
  tr->add_option("--config", t_config, "Run config (defaults when omitted)");
  tr->add_option("--policy", t_policy, "constant | onecycle | physics | hybrid-acc | hybrid-epoch | adam")
      ->check(CLI::IsMember({"constant", "onecycle", "physics", "hybrid-acc", "hybrid-epoch", "adam"}))
      ->capture_default_str();
  tr->add_option("--switch-epoch", t_switch, "0-based switch epoch for hybrid-epoch")->capture_default_str();
  tr->add_option("--log", t_log, "Training log CSV (default stdout)");
  tr->add_option("--checkpoint", t_ckpt, "Write the trained model here");

  // milestones
  auto* ms = app.add_subcommand("milestones", "Epochs-to-threshold table from training logs");
  std::vector<std::string> m_logs;
  std::vector<Real> m_thr = {0.85, 0.90, 0.95, 0.98};
  bool m_absolute = false;
  std::string m_out;
  ms->add_option("--log", m_logs, "name=path of a training log CSV; repeatable")->required();
  ms->add_option("--thresholds", m_thr, "Thresholds")->capture_default_str();
  ms->add_flag("--absolute", m_absolute, "Thresholds are absolute accuracies, not fractions of best");
  ms->add_option("--out", m_out, "CSV path (default stdout)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Diagnose-and-correct stages on checkpoints");
  pipe->require_subcommand(1);
  std::string p_config;
  pipe->add_option("--config", p_config, "Run config providing data and surgery settings");
  auto* p_scan = pipe->add_subcommand("scan", "Cross-model error partition CSV");
  std::vector<std::string> ps_ckpts, ps_names;
  std::string ps_out;
  p_scan->add_option("--checkpoint", ps_ckpts, "Model checkpoints; repeatable")->required();
  p_scan->add_option("--name", ps_names, "Display names, one per checkpoint");
  p_scan->add_option("--out", ps_out, "CSV path (default stdout)");

  auto* p_loc = pipe->add_subcommand("localize", "Per-group gradient norms on test errors and median flags");
  std::string pl_ckpt, pl_out, pl_csv;
  p_loc->add_option("--checkpoint", pl_ckpt)->required();
  p_loc->add_option("--out", pl_out, "Attribution JSON (default stdout)");
  p_loc->add_option("--csv", pl_csv, "Also write group,grad_norm,flag CSV");

  auto* p_diag = pipe->add_subcommand("diagnose", "Confusion-pair taxonomy CSV");
  std::string pd_ckpt, pd_out;
  std::size_t pd_top = 5;
  p_diag->add_option("--checkpoint", pd_ckpt)->required();
  p_diag->add_option("--top-k", pd_top)->capture_default_str();
  p_diag->add_option("--out", pd_out, "CSV path (default stdout)");

  auto* p_treat = pipe->add_subcommand("treat", "Retrain only the flagged groups");
  std::string pt_ckpt, pt_attr, pt_flags, pt_out, pt_log;
  p_treat->add_option("--checkpoint", pt_ckpt)->required();
  p_treat->add_option("--attribution", pt_attr, "Attribution JSON from localize");
  p_treat->add_option("--flags", pt_flags, "Comma-separated group names instead of --attribution");
  p_treat->add_option("--out", pt_out, "Corrected checkpoint")->required();
  p_treat->add_option("--log", pt_log, "Surgery training log CSV");

  auto* p_ver = pipe->add_subcommand("verify", "Fixed/new/net accounting, savings and frozen integrity");
  std::string pv_before, pv_after, pv_attr, pv_flags, pv_out, pv_fixed;
  std::size_t pv_k = 10, pv_top = 5;
  p_ver->add_option("--before", pv_before)->required();
  p_ver->add_option("--after", pv_after)->required();
  p_ver->add_option("--attribution", pv_attr, "Attribution JSON used for the plan");
  p_ver->add_option("--flags", pv_flags, "Comma-separated group names instead of --attribution");
  p_ver->add_option("--out", pv_out, "Verification JSON (default stdout)");
  p_ver->add_option("--fixed", pv_fixed, "Fixed-example CSV path");
  p_ver->add_option("--fixed-count", pv_k)->capture_default_str();
  p_ver->add_option("--top-k", pv_top, "Taxonomy size for fixed-example attribution")->capture_default_str();

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run exp1|exp2|exp3|exp4 and write a report bundle");
  std::string e_kind, e_config, e_out;
  ex->add_option("kind", e_kind, "exp1 | exp2 | exp3 | exp4")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3", "exp4"}));
  ex->add_option("--config", e_config, "Run config (defaults when omitted)");
  ex->add_option("--out", e_out, "Report directory (default output.dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*osc) {
      const QuadraticProblem prob{o_lambda, o_theta0, o_v0};
      const Real mu = o_policy == "physics" ? critical_momentum(o_alpha) : o_mu;
      const auto traj = in_stage("simulate", [&] { return simulate_heavy_ball(prob, o_alpha, mu, o_steps); });
      write_output(o_out, trajectory_csv(traj));
      const auto [r1, r2] = discrete_characteristic_roots(mu, o_alpha, o_lambda);
      const auto settle = settling_time(traj, o_eps);
      std::cerr << fmt::format(
          "regime={} mu={:.6g} alpha={:.6g} roots=({:.6g}{:+.6g}i, {:.6g}{:+.6g}i) complex={} settling={} "
          "sign_changes={}{}\n",
          to_string(continuous_regime(mu, o_alpha, o_lambda)), mu, o_alpha, r1.real(), r1.imag(), r2.real(),
          r2.imag(), roots_are_complex(mu, o_alpha, o_lambda), settle ? std::to_string(*settle) : "none",
          sign_changes(traj), traj.diverged_at ? fmt::format(" diverged_at={}", *traj.diverged_at) : "");
    } else if (*scan) {
      const LRSchedule sched{LRKind::cosine, s_lr_max, s_lr_min, s_epochs};
      MomentumPolicy policy = ConstantMomentum{s_mu};
      if (s_policy == "onecycle") policy = OneCycleMomentum{};
      if (s_policy == "physics") policy = PhysicsMomentum{s_lo, s_hi};
      auto result = in_stage("scan", [&] {
        return scan_schedule(sched, policy, s_epochs, s_tol,
                             s_reading == "raw" ? PhysicsReading::raw : PhysicsReading::clamped);
      });
      std::cerr << fmt::format("underdamped={} critical={} overdamped={}\n", result.underdamped, result.critical,
                               result.overdamped);
      if (!s_rows.empty()) {
        std::vector<RegimeRecord> kept;
        for (const auto& r : result.records) {
          if (std::find(s_rows.begin(), s_rows.end(), r.epoch) != s_rows.end()) kept.push_back(r);
        }
        result.records = kept;
      }
      write_output(s_out, regime_scan_csv(result, s_digits));
    } else if (*tr) {
      const auto config = in_stage("config", [&] { return config_or_default(t_config); });
      const auto split = in_stage("data", [&] { return load_data(config); });
      const auto run = in_stage("train", [&] {
        return t_policy == "adam" ? run_adam_condition(config, split, "adam")
                                  : run_condition(config, split, t_policy, policy_by_name(t_policy, config, t_switch));
      });
      in_stage("write", [&] {
        write_output(t_log, train_log_csv(run.log));
        if (!t_ckpt.empty()) save_checkpoint(run.model, t_ckpt);
        return 0;
      });
    } else if (*ms) {
      MilestoneTable table;
      table.thresholds = m_thr;
      table.relative = !m_absolute;
      in_stage("milestones", [&] {
        for (const auto& spec : m_logs) {
          const auto eq = spec.find('=');
          if (eq == std::string::npos) throw ConfigError("--log expects name=path, got '" + spec + "'");
          const auto log = parse_train_log_csv(read_file(spec.substr(eq + 1)));
          table.rows.push_back(milestone_row(spec.substr(0, eq), log, {m_thr, !m_absolute}));
        }
        write_output(m_out, milestones_csv(table));
        return 0;
      });
    } else if (*pipe) {
      const auto config = in_stage("config", [&] { return config_or_default(p_config); });
      const auto split = in_stage("data", [&] { return load_data(config); });
      if (*p_scan) {
        in_stage("scan", [&] {
          std::vector<std::vector<std::size_t>> preds;
          for (const auto& c : ps_ckpts) preds.push_back(evaluate(load_checkpoint(c), split.test).predictions);
          write_output(ps_out, error_partition_csv(cross_model_scan(preds, split.test.labels, ps_names)));
          return 0;
        });
      } else if (*p_loc) {
        in_stage("localize", [&] {
          const auto model = load_checkpoint(pl_ckpt);
          const auto report = localize(model, collect_errors(model, split.test), split.test);
          write_output(pl_out, attribution_json(report));
          if (!pl_csv.empty()) write_output(pl_csv, attribution_csv(report));
          return 0;
        });
      } else if (*p_diag) {
        in_stage("diagnose", [&] {
          const auto model = load_checkpoint(pd_ckpt);
          write_output(pd_out, taxonomy_csv(attribute_confusion_pairs(model, collect_errors(model, split.test),
                                                                      split.test, pd_top)));
          return 0;
        });
      } else if (*p_treat) {
        in_stage("treat", [&] {
          const auto model = load_checkpoint(pt_ckpt);
          const auto plan = plan_from_flags(model, flags_from(pt_attr, pt_flags), surgery_overrides(config));
          const auto result = surgical_retrain(model, plan, split.train, split.test);
          save_checkpoint(result.model, pt_out);
          if (!pt_log.empty()) write_output(pt_log, train_log_csv(result.log));
          return 0;
        });
      } else if (*p_ver) {
        in_stage("verify", [&] {
          const auto before = load_checkpoint(pv_before);
          const auto after = load_checkpoint(pv_after);
          const auto plan = plan_from_flags(before, flags_from(pv_attr, pv_flags), surgery_overrides(config));
          const auto eb = collect_errors(before, split.test);
          const auto ea = collect_errors(after, split.test);
          const auto report = verify_correction(error_ids(eb), error_ids(ea), evaluate(before, split.test).accuracy,
                                                evaluate(after, split.test).accuracy, plan, config.train.epochs,
                                                split.test.size(), frozen_integrity(before, after, plan));
          write_output(pv_out, verification_json(report));
          if (!pv_fixed.empty()) {
            const auto tax = eb.empty() ? ConfusionTaxonomy{} : attribute_confusion_pairs(before, eb, split.test, pv_top);
            write_output(pv_fixed, fixed_examples_csv(fixed_error_examples(eb, ea, tax, pv_k)));
          }
          return 0;
        });
      }
    } else if (*ex) {
      auto config = in_stage("config", [&] { return config_or_default(e_config); });
      if (!e_out.empty()) config.output_dir = e_out;
      const auto bundle = run_experiment(parse_experiment_kind(e_kind), config);
      in_stage("emit", [&] { return emit_reports(bundle, config.output_dir); });
      if (bundle.failed_stage) throw StageError(*bundle.failed_stage, bundle.failure);
      std::cerr << fmt::format("{}: {} files written to {}\n", bundle.name, bundle.files.size() + 1,
                               config.output_dir);
    }
  } catch (const StageError& e) {
    std::cerr << fmt::format("error [{}]: {}\n", e.stage, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error: {}\n", e.what());
    return 1;
  }
  return 0;
}
