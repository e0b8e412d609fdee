#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nndx/dataset.hpp"
#include "nndx/model.hpp"

namespace nndx {

struct ErrorRecord {
  std::size_t id = 0;
  std::size_t label = 0;
  std::size_t predicted = 0;

  bool operator==(const ErrorRecord&) const = default;
};

using IdSet = std::set<std::size_t>;

std::vector<ErrorRecord> collect_errors(const Model& model, const Dataset& data);
IdSet error_ids(const std::vector<ErrorRecord>& errors);

/// Cross-model error categories.
struct ErrorPartition {
  std::vector<std::string> models;
  std::size_t samples = 0;
  IdSet common;                     // every model wrong
  std::vector<IdSet> only_wrong;    // only model k wrong
  // (a, b) -> samples model a gets right and model b gets wrong, a != b.
  std::map<std::pair<std::size_t, std::size_t>, IdSet> correct_wrong;
};

ErrorPartition cross_model_scan(const std::vector<std::vector<std::size_t>>& predictions,
                                const std::vector<std::size_t>& labels, std::vector<std::string> model_names = {});

std::string error_partition_csv(const ErrorPartition& partition);

struct GroupNorm {
  std::string group;
  Real norm = 0;
};

// For every group: norm of the gradient of the summed cross-entropy over all
// error samples (gradients accumulated over the set, then normed per group).
std::vector<GroupNorm> grad_norms_on_errors(const Model& model, const std::vector<ErrorRecord>& errors,
                                            const Dataset& data);

// Groups with norm strictly above the median; even counts use the midpoint median.
GroupSet flag_problem_layers(const std::vector<GroupNorm>& norms);

Real median(std::vector<Real> values);

struct AttributionReport {
  std::vector<GroupNorm> norms;
  GroupSet flags;
  Real median_norm = 0;
  std::size_t error_count = 0;
  std::string aggregation = "sum of per-sample losses, single backward, per-group L2 norm";
};

AttributionReport localize(const Model& model, const std::vector<ErrorRecord>& errors, const Dataset& data);

// group,grad_norm,flag
std::string attribution_csv(const AttributionReport& report);
std::string attribution_json(const AttributionReport& report);

struct ConfusionRow {
  std::size_t label = 0;
  std::size_t predicted = 0;
  std::size_t count = 0;
  std::string group;
};

struct ConfusionTaxonomy {
  std::vector<ConfusionRow> rows;
  std::size_t total_errors = 0;
  std::size_t distinct_pairs = 0;
};

// The top_k most frequent (label, predicted) pairs, ties broken by (label, predicted)
// order. Each pair is attributed to the group with the largest error-gradient norm
// over that pair's own errors (lowest group index on ties).
ConfusionTaxonomy attribute_confusion_pairs(const Model& model, const std::vector<ErrorRecord>& errors,
                                            const Dataset& data, std::size_t top_k);

// true,pred,count,attributed_group
std::string taxonomy_csv(const ConfusionTaxonomy& taxonomy);

struct FlagOverlap {
  GroupSet shared;
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  Real fraction = 0;
  // Both inputs empty; fraction is reported as 1.
  bool vacuous = false;
};

// |a ∩ b| / max(|a|, |b|).
FlagOverlap flag_overlap(const GroupSet& a, const GroupSet& b);
std::string flag_overlap_json(const FlagOverlap& overlap, const GroupSet& a, const GroupSet& b);

}  // namespace nndx
