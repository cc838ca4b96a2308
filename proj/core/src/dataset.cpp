#include "suffice/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "suffice/errors.hpp"
#include "suffice/rng.hpp"

namespace suffice {

void validate(const Dataset& ds) {
  const std::size_t n = ds.labels.size();
  if (n == 0) throw ValidationError("dataset is empty");
  if (ds.features.rows != n || ds.groups.size() != n) {
    throw ValidationError("dataset arrays disagree on sample count");
  }
  if (ds.feature_names.size() != ds.features.cols) {
    throw ValidationError("feature_names length does not match feature count");
  }
  const int num_groups = ds.num_groups();
  if (num_groups == 0) throw ValidationError("dataset has no group names");
  std::vector<bool> seen(static_cast<std::size_t>(num_groups), false);
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.labels[i] != 0 && ds.labels[i] != 1) {
      throw ValidationError("label at row " + std::to_string(i) + " is not 0/1");
    }
    if (ds.groups[i] < 0 || ds.groups[i] >= num_groups) {
      throw ValidationError("group id at row " + std::to_string(i) + " out of range");
    }
    seen[static_cast<std::size_t>(ds.groups[i])] = true;
  }
  for (int g = 0; g < num_groups; ++g) {
    if (!seen[static_cast<std::size_t>(g)]) {
      throw ValidationError("group id " + std::to_string(g) + " has no samples");
    }
  }
  for (double v : ds.features.data) {
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
  }
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.n == 0) throw ValidationError("synthetic: n must be positive");
  if (!(cfg.pi > 0.0 && cfg.pi < 1.0)) {
    throw ValidationError("synthetic: pi must lie strictly inside (0,1)");
  }
  if (cfg.base_rates.size() != 2) {
    throw ValidationError("synthetic: base_rates must have one entry per group (2)");
  }
  for (double r : cfg.base_rates) {
    if (!(r > 0.0 && r < 1.0)) {
      throw ValidationError("synthetic: base_rates must lie strictly inside (0,1)");
    }
  }
  if (cfg.core_dim == 0) throw ValidationError("synthetic: core_dim must be >= 1");
  if (!(cfg.core_sep > 0.0)) throw ValidationError("synthetic: core_sep must be > 0");
  if (!(cfg.core_noise > 0.0)) throw ValidationError("synthetic: core_noise must be > 0");
  if (cfg.spurious_strength < 0.0) {
    throw ValidationError("synthetic: spurious_strength must be >= 0");
  }
  if (!(cfg.spurious_noise > 0.0)) {
    throw ValidationError("synthetic: spurious_noise must be > 0");
  }
}

Dataset gen_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  const std::size_t d = cfg.core_dim + 1;
  Dataset ds;
  ds.features = Matrix(cfg.n, d);
  ds.labels.resize(cfg.n);
  ds.groups.resize(cfg.n);
  for (std::size_t j = 0; j < cfg.core_dim; ++j) {
    ds.feature_names.push_back("core_" + std::to_string(j));
  }
  ds.feature_names.push_back("spurious");
  ds.group_names = {"group0", "group1"};

  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int a = rng.bernoulli(cfg.pi) ? 1 : 0;
    const int y = rng.bernoulli(cfg.base_rates[static_cast<std::size_t>(a)]) ? 1 : 0;
    ds.groups[i] = a;
    ds.labels[i] = y;
    const double class_sign = y == 1 ? 1.0 : -1.0;
    double* row = ds.features.row(i);
    for (std::size_t j = 0; j < cfg.core_dim; ++j) {
      row[j] = rng.normal(class_sign * cfg.core_sep, cfg.core_noise);
    }
    // The spurious-vs-class alignment flips between groups.
    const double group_sign = a == 0 ? 1.0 : -1.0;
    row[cfg.core_dim] =
        rng.normal(group_sign * class_sign * cfg.spurious_strength, cfg.spurious_noise);
  }
  return ds;
}

Dataset inject_label_noise(const Dataset& ds, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ValidationError("noise ratio must lie in [0,1]");
  }
  Dataset out = ds;
  Rng rng(seed);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (rng.bernoulli(rho)) out.labels[i] = 1 - out.labels[i];
  }
  return out;
}

std::vector<std::size_t> largest_remainder_sizes(std::size_t total,
                                                 const std::vector<double>& fractions) {
  const std::size_t parts = fractions.size();
  std::vector<std::size_t> sizes(parts);
  std::vector<double> remainders(parts);
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const double exact = static_cast<double>(total) * fractions[p];
    sizes[p] = static_cast<std::size_t>(std::floor(exact + 1e-12));
    remainders[p] = exact - static_cast<double>(sizes[p]);
    assigned += sizes[p];
  }
  std::vector<std::size_t> order(parts);
  std::iota(order.begin(), order.end(), 0);
  // Largest remainder first; ties go to the earlier part.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k) {
    sizes[order[k % parts]] += 1;
    ++assigned;
  }
  return sizes;
}

void validate(const SplitSpec& spec) {
  const double fracs[3] = {spec.train_frac, spec.val_frac, spec.test_frac};
  for (double f : fracs) {
    if (!(f > 0.0 && f < 1.0)) {
      throw ValidationError("split fractions must lie strictly inside (0,1)");
    }
  }
  const double sum = spec.train_frac + spec.val_frac + spec.test_frac;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }
}

namespace {

// Shuffles idx and appends its three chunks (sized by largest remainder)
// to the output index lists.
void deal_cell(std::vector<std::size_t>& idx, const SplitSpec& spec, Rng& rng,
               SplitIndices& out) {
  rng.shuffle(idx);
  const std::vector<std::size_t> sizes = largest_remainder_sizes(
      idx.size(), {spec.train_frac, spec.val_frac, spec.test_frac});
  std::size_t pos = 0;
  for (std::size_t k = 0; k < sizes[0]; ++k) out.train.push_back(idx[pos++]);
  for (std::size_t k = 0; k < sizes[1]; ++k) out.val.push_back(idx[pos++]);
  for (std::size_t k = 0; k < sizes[2]; ++k) out.test.push_back(idx[pos++]);
}

}  // namespace

SplitIndices split_indices(const Dataset& ds, const SplitSpec& spec) {
  validate(spec);
  const std::size_t n = ds.size();
  Rng rng(spec.seed);
  SplitIndices out;
  if (!spec.stratified) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    deal_cell(idx, spec, rng, out);
  } else {
    // One cell per (group, label), visited in ascending (group, label) order.
    const int num_groups = ds.num_groups();
    for (int g = 0; g < num_groups; ++g) {
      for (int y = 0; y <= 1; ++y) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
          if (ds.groups[i] == g && ds.labels[i] == y) idx.push_back(i);
        }
        if (idx.empty()) {
          throw ValidationError("stratified split: empty cell (group=" +
                                std::to_string(g) + ", label=" + std::to_string(y) + ")");
        }
        deal_cell(idx, spec, rng, out);
      }
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.features = gather_rows(ds.features, idx);
  out.labels.reserve(idx.size());
  out.groups.reserve(idx.size());
  for (std::size_t i : idx) {
    out.labels.push_back(ds.labels[i]);
    out.groups.push_back(ds.groups[i]);
  }
  out.feature_names = ds.feature_names;
  out.group_names = ds.group_names;
  return out;
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(ds, spec);
  return {subset(ds, idx.train), subset(ds, idx.val), subset(ds, idx.test)};
}

std::map<int, std::vector<std::size_t>> partition_by_group(const Dataset& ds) {
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_group[ds.groups[i]].push_back(i);
  }
  return by_group;
}

}  // namespace suffice
