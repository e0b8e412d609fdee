#include "nndx/diagnostics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "json.hpp"

namespace nndx {

std::vector<ErrorRecord> collect_errors(const Model& model, const Dataset& data) {
  std::vector<ErrorRecord> errors;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pred = model.predict(data.sample(i));
    if (pred != data.labels[i]) errors.push_back({i, data.labels[i], pred});
  }
  return errors;
}

IdSet error_ids(const std::vector<ErrorRecord>& errors) {
  IdSet ids;
  for (const auto& e : errors) ids.insert(e.id);
  return ids;
}

ErrorPartition cross_model_scan(const std::vector<std::vector<std::size_t>>& predictions,
                                const std::vector<std::size_t>& labels, std::vector<std::string> model_names) {
  const std::size_t m = predictions.size();
  if (m == 0) throw ContractError("cross_model_scan: no models");
  for (const auto& p : predictions) {
    if (p.size() != labels.size()) {
      throw ContractError(fmt::format("cross_model_scan: {} predictions for {} labels", p.size(), labels.size()));
    }
  }
  if (model_names.empty()) {
    for (std::size_t k = 0; k < m; ++k) model_names.push_back("model" + std::to_string(k));
  }
  if (model_names.size() != m) throw ContractError("cross_model_scan: one name per model required");

  ErrorPartition part;
  part.models = std::move(model_names);
  part.samples = labels.size();
  part.only_wrong.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a != b) part.correct_wrong[{a, b}];
    }
  }
  std::vector<bool> wrong(m);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t wrong_count = 0;
    for (std::size_t k = 0; k < m; ++k) {
      wrong[k] = predictions[k][i] != labels[i];
      wrong_count += wrong[k] ? 1 : 0;
    }
    if (wrong_count == m) part.common.insert(i);
    if (wrong_count == 1) {
      for (std::size_t k = 0; k < m; ++k) {
        if (wrong[k]) part.only_wrong[k].insert(i);
      }
    }
    for (auto& [pair, ids] : part.correct_wrong) {
      if (!wrong[pair.first] && wrong[pair.second]) ids.insert(i);
    }
  }
  return part;
}

std::string error_partition_csv(const ErrorPartition& part) {
  std::string out = "category,count\n";
  out += fmt::format("common_errors,{}\n", part.common.size());
  for (std::size_t k = 0; k < part.models.size(); ++k) {
    out += fmt::format("only_{}_wrong,{}\n", part.models[k], part.only_wrong[k].size());
  }
  for (const auto& [pair, ids] : part.correct_wrong) {
    out += fmt::format("{}_correct_{}_wrong,{}\n", part.models[pair.first], part.models[pair.second], ids.size());
  }
  return out;
}

std::vector<GroupNorm> grad_norms_on_errors(const Model& model, const std::vector<ErrorRecord>& errors,
                                            const Dataset& data) {
  if (errors.empty()) throw ContractError("no errors to attribute");
  Model work = model;
  work.zero_grad();
  for (const auto& e : errors) {
    if (e.id >= data.size()) throw IndexError(fmt::format("error sample {} outside dataset of {}", e.id, data.size()));
    Tape tape;
    tape.backward(tape.softmax_cross_entropy(work.forward(tape, data.sample(e.id)), data.labels[e.id]));
  }
  std::vector<GroupNorm> norms;
  for (const auto& g : work.groups()) norms.push_back({g.name, group_grad_norm(g)});
  return norms;
}

Real median(std::vector<Real> values) {
  if (values.empty()) throw ContractError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

GroupSet flag_problem_layers(const std::vector<GroupNorm>& norms) {
  if (norms.size() < 2) throw ContractError("flag_problem_layers: need at least 2 groups");
  std::vector<Real> values;
  for (const auto& n : norms) values.push_back(n.norm);
  const Real med = median(values);
  GroupSet flags;
  for (const auto& n : norms) {
    if (n.norm > med) flags.insert(n.group);
  }
  return flags;
}

AttributionReport localize(const Model& model, const std::vector<ErrorRecord>& errors, const Dataset& data) {
  AttributionReport report;
  report.norms = grad_norms_on_errors(model, errors, data);
  report.flags = flag_problem_layers(report.norms);
  std::vector<Real> values;
  for (const auto& n : report.norms) values.push_back(n.norm);
  report.median_norm = median(values);
  report.error_count = errors.size();
  return report;
}

std::string attribution_csv(const AttributionReport& report) {
  std::string out = "group,grad_norm,flag\n";
  for (const auto& n : report.norms) {
    out += fmt::format("{},{:.17g},{}\n", n.group, n.norm, report.flags.count(n.group) ? "problem" : "normal");
  }
  return out;
}

std::string attribution_json(const AttributionReport& report) {
  nlohmann::ordered_json j;
  j["error_count"] = report.error_count;
  j["aggregation"] = report.aggregation;
  j["median"] = report.median_norm;
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& n : report.norms) {
    groups.push_back({{"group", n.group}, {"grad_norm", n.norm}, {"flag", report.flags.count(n.group) > 0}});
  }
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

ConfusionTaxonomy attribute_confusion_pairs(const Model& model, const std::vector<ErrorRecord>& errors,
                                            const Dataset& data, std::size_t top_k) {
  if (top_k < 1) throw ContractError("attribute_confusion_pairs: top_k must be >= 1");
  if (errors.empty()) throw ContractError("no errors to attribute");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<ErrorRecord>> by_pair;
  for (const auto& e : errors) by_pair[{e.label, e.predicted}].push_back(e);

  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::size_t>> ranked;
  for (const auto& [pair, members] : by_pair) ranked.push_back({pair, members.size()});
  // std::map order is (label, predicted); a stable sort on count keeps it for ties.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  ConfusionTaxonomy tax;
  tax.total_errors = errors.size();
  tax.distinct_pairs = ranked.size();
  for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
    const auto& [pair, count] = ranked[i];
    const auto norms = grad_norms_on_errors(model, by_pair[pair], data);
    const auto best = std::max_element(norms.begin(), norms.end(),
                                       [](const GroupNorm& a, const GroupNorm& b) { return a.norm < b.norm; });
    tax.rows.push_back({pair.first, pair.second, count, best->group});
  }
  return tax;
}

std::string taxonomy_csv(const ConfusionTaxonomy& taxonomy) {
  std::string out = "true,pred,count,attributed_group\n";
  for (const auto& r : taxonomy.rows) out += fmt::format("{},{},{},{}\n", r.label, r.predicted, r.count, r.group);
  return out;
}

FlagOverlap flag_overlap(const GroupSet& a, const GroupSet& b) {
  FlagOverlap out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out.shared, out.shared.end()));
  out.numerator = out.shared.size();
  out.denominator = std::max(a.size(), b.size());
  if (out.denominator == 0) {
    out.vacuous = true;
    out.fraction = 1;
  } else {
    out.fraction = static_cast<Real>(out.numerator) / static_cast<Real>(out.denominator);
  }
  return out;
}

std::string flag_overlap_json(const FlagOverlap& overlap, const GroupSet& a, const GroupSet& b) {
  nlohmann::ordered_json j;
  j["flags_a"] = a;
  j["flags_b"] = b;
  j["shared"] = overlap.shared;
  j["numerator"] = overlap.numerator;
  j["denominator"] = overlap.denominator;
  j["fraction"] = overlap.fraction;
  j["vacuous"] = overlap.vacuous;
  return j.dump(2) + "\n";
}

}  // namespace nndx
