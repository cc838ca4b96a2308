#ifndef SUFFICE_METRICS_HPP
#define SUFFICE_METRICS_HPP

#include <string>
#include <utility>
#include <vector>

namespace suffice {

/// Per-group 2x2 confusion counts.
struct ConfusionCell {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct GroupConfusion {
  std::vector<ConfusionCell> cells;  // indexed by group id
  int num_groups() const { return static_cast<int>(cells.size()); }
};

/// Rates for one group; NaN where the conditioning cell is empty.
struct GroupRates {
  double ppv, npv, tpr, fpr, positive_rate;
};

struct MetricReport {
  double accuracy = 0.0;
  double suf_gap = 0.0;
  double dp_gap = 0.0;
  double eo_gap = 0.0;
  std::vector<GroupRates> per_group;
  // (group id, rate name) pairs whose conditioning cell was empty.
  std::vector<std::pair<int, std::string>> undefined_cells;
};

GroupConfusion confusion_by_group(const std::vector<int>& preds,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& groups, int num_groups);

/// Half the summed absolute PPV and NPV differences between the two groups.
/// A term whose conditioning cell is empty in either group is dropped from
/// the sum and recorded in `flags` (if given); if both terms are undefined a
/// MetricUndefinedError is thrown.
double sufficiency_gap(const GroupConfusion& conf, int g0, int g1,
                       std::vector<std::pair<int, std::string>>* flags = nullptr);

/// Absolute difference in positive prediction rates.
double dp_gap(const GroupConfusion& conf, int g0, int g1);

/// Half the summed absolute TPR and FPR differences.
double eo_gap(const GroupConfusion& conf, int g0, int g1);

/// Largest pairwise sufficiency gap over the given group ids, with the
/// pair attaining it (first such pair in (i,j) id order on ties). Pairs with
/// no defined term are skipped and flagged.
std::pair<double, std::pair<int, int>> max_pairwise_suf_gap(
    const GroupConfusion& conf, const std::vector<int>& group_subset,
    std::vector<std::pair<int, std::string>>* flags = nullptr);

/// Full report at the fixed 0-logit threshold. With two groups the gaps are
/// the (0,1) pair values; with more, each gap is the max over pairs.
MetricReport compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels,
                             const std::vector<int>& groups, int num_groups);

}  // namespace suffice

#endif  // SUFFICE_METRICS_HPP
