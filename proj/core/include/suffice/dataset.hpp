#ifndef SUFFICE_DATASET_HPP
#define SUFFICE_DATASET_HPP

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "suffice/matrix.hpp"

namespace suffice {

/// Tabular binary-classification data with a sensitive group per sample.
/// Immutable by convention once built: operations return new datasets.
struct Dataset {
  Matrix features;                         // n x d
  std::vector<int> labels;                 // each 0 or 1
  std::vector<int> groups;                 // each in [0, num_groups)
  std::vector<std::string> feature_names;  // d entries
  std::vector<std::string> group_names;    // one per group id

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols; }
  int num_groups() const { return static_cast<int>(group_names.size()); }
};

/// Throws ValidationError unless all Dataset invariants hold: matching
/// lengths, binary labels, finite features, and every group id occupied.
void validate(const Dataset& ds);

struct SyntheticConfig;
struct SplitSpec;
void validate(const SyntheticConfig& cfg);
void validate(const SplitSpec& spec);

/// Two-group generator with a planted spurious feature. Core features
/// separate the classes weakly in every group; the spurious feature's
/// class alignment flips sign between groups, so a pooled fit that leans
/// on it is miscalibrated in opposite directions per group.
struct SyntheticConfig {
  std::size_t n = 4000;
  double pi = 0.5;                            // P(group = 1)
  std::vector<double> base_rates = {0.3, 0.6};  // P(Y=1 | group)
  std::size_t core_dim = 4;
  double core_sep = 0.5;      // class-mean offset per core coordinate
  double core_noise = 1.0;
  double spurious_strength = 2.0;
  double spurious_noise = 0.5;
  std::uint64_t seed = 0;
};

/// Fractional three-way split. Fractions must be in (0,1) and sum to 1.
struct SplitSpec {
  double train_frac = 0.7;
  double val_frac = 0.1;
  double test_frac = 0.2;
  bool stratified = true;
  std::uint64_t seed = 0;
};

/// Loads a headered CSV. `label_col` must hold 0/1 values; `group_col` values
/// become group ids ordered by sorted distinct value. Every other column is a
/// feature: numeric columns are z-scored with the file's own statistics,
/// string columns are one-hot encoded with categories in order of first
/// appearance. A column's kind is decided by whether its first data cell
/// parses as a number.
Dataset load_csv(const std::string& path, const std::string& label_col,
                 const std::string& group_col);

/// Deterministic in cfg.seed: one generator stream, consumed per sample in
/// the order (group, label, core coordinates, spurious coordinate).
Dataset gen_synthetic(const SyntheticConfig& cfg);

/// Flips each label independently with probability rho. Features and groups
/// are untouched.
Dataset inject_label_noise(const Dataset& ds, double rho, std::uint64_t seed);

/// Index partition behind split(); exposed so callers can relate split rows
/// back to the parent dataset.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

SplitIndices split_indices(const Dataset& ds, const SplitSpec& spec);

/// Disjoint cover of ds with sizes given by largest-remainder rounding of
/// the fractions (applied per (group,label) cell when stratified).
std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Subset view materialized as a new Dataset (keeps group_names).
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx);

/// Ascending index lists per group id; disjoint, covering all samples.
std::map<int, std::vector<std::size_t>> partition_by_group(const Dataset& ds);

/// Largest-remainder apportionment of `total` into parts proportional to
/// `fractions` (ties go to the earlier part). Exposed for tests.
std::vector<std::size_t> largest_remainder_sizes(std::size_t total,
                                                 const std::vector<double>& fractions);

}  // namespace suffice

#endif  // SUFFICE_DATASET_HPP
