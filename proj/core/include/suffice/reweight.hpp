#ifndef SUFFICE_REWEIGHT_HPP
#define SUFFICE_REWEIGHT_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/model.hpp"
#include "suffice/risk.hpp"
#include "suffice/rng.hpp"
#include "suffice/trainer.hpp"

namespace suffice {

using Mask = std::vector<std::uint8_t>;  // 0/1 per sample

enum class OuterOptimizer { kProjectedSgd, kProjectedAdam };

struct OuterConfig {
  std::size_t budget = 800;     // K: cap on the selected-set size
  std::size_t iterations = 500; // T
  OuterOptimizer optimizer = OuterOptimizer::kProjectedAdam;
  double lr = 2.5;
  bool cosine_schedule = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double prob_clamp = 1e-4;  // epsilon keeping score terms finite near 0/1
  bool baseline = false;     // moving-average control variate (off = raw estimator)
  std::uint64_t seed = 0;
};

struct SelectResult {
  std::vector<double> final_s;
  Mask final_mask;
  // (iteration, s snapshot) pairs; iteration T+1 is the post-loop state.
  std::vector<std::pair<std::size_t, std::vector<double>>> s_history;
  std::vector<double> risk_history;  // one entry per iteration
  // Fraction of s_i strictly inside (0.05, 0.95); entry t-1 describes s^t,
  // the last entry describes s^{T+1}.
  std::vector<double> uncertain_fraction_history;
  // Per iteration, per (group, label) cell: selected-count fraction of the
  // sampled mask. Cells are ordered group-major then label.
  std::vector<std::vector<double>> group_weight_history;
  int num_groups = 0;
};

/// Independent Bernoulli(s_i) draws.
Mask sample_mask(const std::vector<double>& s, Rng& rng);

/// Redraws an all-zero mask up to max_tries times, then throws
/// DegenerateProbabilitiesError.
Mask sample_nonempty_mask(const std::vector<double>& s, Rng& rng, int max_tries = 100);

/// d/ds_i of ln p(m|s): m_i/s_i - (1-m_i)/(1-s_i), with s clamped into
/// [clamp, 1-clamp] before the divisions.
std::vector<double> log_prob_grad(const std::vector<double>& s, const Mask& m,
                                  double clamp);

/// Euclidean projection onto {0 <= s_i <= 1, sum s_i <= K}. If clipping to
/// the box already satisfies the budget that is the answer; otherwise the
/// pivot mu solving sum clip(v - mu, 0, 1) = K is found by bisection.
std::vector<double> project_capped_box(const std::vector<double>& v, std::size_t K);

struct OuterState {
  std::vector<double> adam_m1, adam_m2;
  std::size_t step = 0;       // number of updates applied so far
  double risk_baseline = 0.0; // EMA of past risks (used only when enabled)
};

/// One projected update of s from a sampled mask and its observed risk.
/// The gradient estimate is (risk - baseline) * log_prob_grad(s, m).
std::vector<double> outer_step(const std::vector<double>& s, const Mask& m, double risk,
                               const OuterConfig& cfg, OuterState& state);

/// Draws m ~ p(m|s); if more than K coordinates come up the K with largest
/// s survive (ties to the lower index), and an all-zero draw falls back to
/// the single largest-s coordinate.
Mask finalize_mask(const std::vector<double>& s, std::size_t K, Rng& rng);

/// Maps a mask to the outer risk of the model trained on it. The production
/// implementation runs the inner solver; tests may substitute a lookup table.
class RiskEvaluator {
 public:
  virtual ~RiskEvaluator() = default;
  /// `iteration` is the 1-based outer iteration, for per-iteration streams.
  virtual double evaluate(const Mask& m, std::size_t iteration) = 0;
};

/// Production evaluator: trains theta*(m) from a fresh per-iteration
/// initialization, then scores an IRM risk on a group-stratified mini-batch
/// of the outer dataset.
class TrainedRiskEvaluator : public RiskEvaluator {
 public:
  TrainedRiskEvaluator(const Dataset& train, const Dataset& outer,
                       std::vector<std::size_t> model_dims, InnerConfig inner,
                       RiskConfig risk, std::uint64_t seed);
  double evaluate(const Mask& m, std::size_t iteration) override;

  const ModelParams& last_model() const { return last_model_; }

 private:
  const Dataset& train_;
  const Dataset& outer_;
  std::vector<std::size_t> model_dims_;
  InnerConfig inner_;
  RiskConfig risk_;
  std::uint64_t seed_;
  std::map<int, std::vector<std::size_t>> outer_groups_;
  ModelParams last_model_;
};

/// Stratified sample of `batch` indices from the group partition: at least
/// one per group, the rest apportioned by group size (largest remainder),
/// drawn without replacement.
std::vector<std::size_t> stratified_batch(
    const std::map<int, std::vector<std::size_t>>& by_group, std::size_t n,
    std::size_t batch, Rng& rng);

/// The full alternating search: s starts at (K/n)*1; every iteration samples
/// a mask, scores it through `eval`, and applies a projected score-function
/// update; the returned mask is drawn from the final probabilities.
SelectResult run_selection(const Dataset& train, RiskEvaluator& eval,
                           const OuterConfig& cfg);

/// Convenience wrapper wiring up the production evaluator.
SelectResult run_selection(const Dataset& train, const Dataset& outer,
                           const std::vector<std::size_t>& model_dims,
                           const InnerConfig& inner, const OuterConfig& cfg,
                           const RiskConfig& risk);

}  // namespace suffice

#endif  // SUFFICE_REWEIGHT_HPP
