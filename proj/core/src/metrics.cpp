#include "suffice/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "suffice/errors.hpp"

namespace suffice {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? kNan : static_cast<double>(num) / static_cast<double>(den);
}

GroupRates rates_of(const ConfusionCell& c) {
  return GroupRates{ratio(c.tp, c.tp + c.fp), ratio(c.tn, c.tn + c.fn),
                    ratio(c.tp, c.tp + c.fn), ratio(c.fp, c.fp + c.tn),
                    ratio(c.tp + c.fp, c.total())};
}

void check_group(const GroupConfusion& conf, int g) {
  if (g < 0 || g >= conf.num_groups()) {
    throw ValidationError("metrics: group id " + std::to_string(g) + " out of range");
  }
}

}  // namespace

GroupConfusion confusion_by_group(const std::vector<int>& preds,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& groups, int num_groups) {
  const std::size_t n = preds.size();
  if (labels.size() != n || groups.size() != n) {
    throw ValidationError("confusion_by_group: input lengths differ");
  }
  GroupConfusion conf;
  conf.cells.resize(static_cast<std::size_t>(num_groups));
  for (std::size_t i = 0; i < n; ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
      throw ValidationError("confusion_by_group: predictions and labels must be 0/1");
    }
    if (groups[i] < 0 || groups[i] >= num_groups) {
      throw ValidationError("confusion_by_group: group id out of range at row " +
                            std::to_string(i));
    }
    ConfusionCell& c = conf.cells[static_cast<std::size_t>(groups[i])];
    if (preds[i] == 1) {
      labels[i] == 1 ? ++c.tp : ++c.fp;
    } else {
      labels[i] == 0 ? ++c.tn : ++c.fn;
    }
  }
  return conf;
}

double sufficiency_gap(const GroupConfusion& conf, int g0, int g1,
                       std::vector<std::pair<int, std::string>>* flags) {
  check_group(conf, g0);
  check_group(conf, g1);
  const ConfusionCell& a = conf.cells[static_cast<std::size_t>(g0)];
  const ConfusionCell& b = conf.cells[static_cast<std::size_t>(g1)];
  double sum = 0.0;
  int defined_terms = 0;
  // Positive predictive values need at least one predicted positive per group.
  if (a.tp + a.fp > 0 && b.tp + b.fp > 0) {
    sum += std::abs(ratio(a.tp, a.tp + a.fp) - ratio(b.tp, b.tp + b.fp));
    ++defined_terms;
  } else if (flags) {
    if (a.tp + a.fp == 0) flags->emplace_back(g0, "ppv");
    if (b.tp + b.fp == 0) flags->emplace_back(g1, "ppv");
  }
  if (a.tn + a.fn > 0 && b.tn + b.fn > 0) {
    sum += std::abs(ratio(a.tn, a.tn + a.fn) - ratio(b.tn, b.tn + b.fn));
    ++defined_terms;
  } else if (flags) {
    if (a.tn + a.fn == 0) flags->emplace_back(g0, "npv");
    if (b.tn + b.fn == 0) flags->emplace_back(g1, "npv");
  }
  if (defined_terms == 0) {
    throw MetricUndefinedError("sufficiency gap: both PPV and NPV terms undefined for pair (" +
                               std::to_string(g0) + "," + std::to_string(g1) + ")");
  }
  return 0.5 * sum;
}

double dp_gap(const GroupConfusion& conf, int g0, int g1) {
  check_group(conf, g0);
  check_group(conf, g1);
  const ConfusionCell& a = conf.cells[static_cast<std::size_t>(g0)];
  const ConfusionCell& b = conf.cells[static_cast<std::size_t>(g1)];
  if (a.total() == 0 || b.total() == 0) {
    throw MetricUndefinedError("demographic parity gap: empty group");
  }
  return std::abs(ratio(a.tp + a.fp, a.total()) - ratio(b.tp + b.fp, b.total()));
}

double eo_gap(const GroupConfusion& conf, int g0, int g1) {
  check_group(conf, g0);
  check_group(conf, g1);
  const ConfusionCell& a = conf.cells[static_cast<std::size_t>(g0)];
  const ConfusionCell& b = conf.cells[static_cast<std::size_t>(g1)];
  if (a.tp + a.fn == 0 || b.tp + b.fn == 0 || a.fp + a.tn == 0 || b.fp + b.tn == 0) {
    throw MetricUndefinedError(
        "equalized odds gap: a group lacks positive or negative labels");
  }
  const double tpr_diff = std::abs(ratio(a.tp, a.tp + a.fn) - ratio(b.tp, b.tp + b.fn));
  const double fpr_diff = std::abs(ratio(a.fp, a.fp + a.tn) - ratio(b.fp, b.fp + b.tn));
  return 0.5 * (tpr_diff + fpr_diff);
}

std::pair<double, std::pair<int, int>> max_pairwise_suf_gap(
    const GroupConfusion& conf, const std::vector<int>& group_subset,
    std::vector<std::pair<int, std::string>>* flags) {
  if (group_subset.size() < 2) {
    throw ValidationError("max_pairwise_suf_gap: need at least two groups");
  }
  double best = -1.0;
  std::pair<int, int> best_pair{-1, -1};
  for (std::size_t i = 0; i < group_subset.size(); ++i) {
    for (std::size_t j = i + 1; j < group_subset.size(); ++j) {
      double gap = 0.0;
      try {
        gap = sufficiency_gap(conf, group_subset[i], group_subset[j], flags);
      } catch (const MetricUndefinedError&) {
        if (flags) flags->emplace_back(group_subset[i], "suf_pair_skipped");
        continue;
      }
      if (gap > best) {
        best = gap;
        best_pair = {group_subset[i], group_subset[j]};
      }
    }
  }
  if (best < 0.0) {
    throw MetricUndefinedError("max_pairwise_suf_gap: every pair undefined");
  }
  return {best, best_pair};
}

MetricReport compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels,
                             const std::vector<int>& groups, int num_groups) {
  if (preds.empty()) throw ValidationError("compute_metrics: no samples");
  if (num_groups < 2) throw ValidationError("compute_metrics: need at least two groups");
  const GroupConfusion conf = confusion_by_group(preds, labels, groups, num_groups);
  MetricReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  for (const ConfusionCell& c : conf.cells) report.per_group.push_back(rates_of(c));
  for (int g = 0; g < num_groups; ++g) {
    const GroupRates& r = report.per_group[static_cast<std::size_t>(g)];
    if (std::isnan(r.ppv)) report.undefined_cells.emplace_back(g, "ppv");
    if (std::isnan(r.npv)) report.undefined_cells.emplace_back(g, "npv");
    if (std::isnan(r.tpr)) report.undefined_cells.emplace_back(g, "tpr");
    if (std::isnan(r.fpr)) report.undefined_cells.emplace_back(g, "fpr");
  }

  std::vector<int> all_groups;
  for (int g = 0; g < num_groups; ++g) all_groups.push_back(g);
  if (num_groups == 2) {
    report.suf_gap = sufficiency_gap(conf, 0, 1, &report.undefined_cells);
    report.dp_gap = dp_gap(conf, 0, 1);
    report.eo_gap = eo_gap(conf, 0, 1);
  } else {
    report.suf_gap = max_pairwise_suf_gap(conf, all_groups, &report.undefined_cells).first;
    double dp = 0.0, eo = 0.0;
    for (std::size_t i = 0; i < all_groups.size(); ++i) {
      for (std::size_t j = i + 1; j < all_groups.size(); ++j) {
        dp = std::max(dp, dp_gap(conf, all_groups[i], all_groups[j]));
        eo = std::max(eo, eo_gap(conf, all_groups[i], all_groups[j]));
      }
    }
    report.dp_gap = dp;
    report.eo_gap = eo;
  }
  return report;
}

}  // namespace suffice
