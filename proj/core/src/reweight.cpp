#include "suffice/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "suffice/errors.hpp"

namespace suffice {

Mask sample_mask(const std::vector<double>& s, Rng& rng) {
  Mask m(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) m[i] = rng.bernoulli(s[i]) ? 1 : 0;
  return m;
}

Mask sample_nonempty_mask(const std::vector<double>& s, Rng& rng, int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Mask m = sample_mask(s, rng);
    if (std::find(m.begin(), m.end(), std::uint8_t{1}) != m.end()) return m;
  }
  throw DegenerateProbabilitiesError("drew an empty mask " + std::to_string(max_tries) +
                                     " times in a row");
}

std::vector<double> log_prob_grad(const std::vector<double>& s, const Mask& m,
                                  double clamp) {
  if (s.size() != m.size()) {
    throw ValidationError("log_prob_grad: probability/mask lengths differ");
  }
  std::vector<double> grad(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = std::clamp(s[i], clamp, 1.0 - clamp);
    grad[i] = m[i] ? 1.0 / p : -1.0 / (1.0 - p);
  }
  return grad;
}

std::vector<double> project_capped_box(const std::vector<double>& v, std::size_t K) {
  if (K == 0) throw ValidationError("project_capped_box: budget must be >= 1");
  const auto clipped_sum = [&](double mu, std::vector<double>* out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = std::clamp(v[i] - mu, 0.0, 1.0);
      if (out) (*out)[i] = x;
      sum += x;
    }
    return sum;
  };

  std::vector<double> result(v.size());
  const double budget = static_cast<double>(K);
  if (clipped_sum(0.0, &result) <= budget) return result;

  // sum clip(v - mu, 0, 1) is continuous and non-increasing in mu, equals
  // more than K at mu = 0 and 0 at mu = max(v); bisect for the pivot.
  double lo = 0.0;
  double hi = *std::max_element(v.begin(), v.end());
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double sum = clipped_sum(mid, nullptr);
    if (sum > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 && std::abs(sum - budget) <= 1e-10) break;
  }
  clipped_sum(0.5 * (lo + hi), &result);
  return result;
}

std::vector<double> outer_step(const std::vector<double>& s, const Mask& m, double risk,
                               const OuterConfig& cfg, OuterState& state) {
  if (state.adam_m1.empty()) {
    state.adam_m1.assign(s.size(), 0.0);
    state.adam_m2.assign(s.size(), 0.0);
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);

  const double baseline = cfg.baseline ? state.risk_baseline : 0.0;
  std::vector<double> grad = log_prob_grad(s, m, cfg.prob_clamp);
  for (double& g : grad) g *= risk - baseline;
  if (cfg.baseline) {
    state.risk_baseline = 0.9 * state.risk_baseline + 0.1 * risk;
  }

  double lr_t = cfg.lr;
  if (cfg.cosine_schedule) {
    const double total = static_cast<double>(std::max<std::size_t>(cfg.iterations, 1));
    lr_t = cfg.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t / total));
  }

  std::vector<double> proposal(s.size());
  if (cfg.optimizer == OuterOptimizer::kProjectedSgd) {
    for (std::size_t i = 0; i < s.size(); ++i) proposal[i] = s[i] - lr_t * grad[i];
  } else {
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, t);
    const double corr2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < s.size(); ++i) {
      state.adam_m1[i] = b1 * state.adam_m1[i] + (1.0 - b1) * grad[i];
      state.adam_m2[i] = b2 * state.adam_m2[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m1_hat = state.adam_m1[i] / corr1;
      const double m2_hat = state.adam_m2[i] / corr2;
      proposal[i] = s[i] - lr_t * m1_hat / (std::sqrt(m2_hat) + cfg.adam_eps);
    }
  }
  return project_capped_box(proposal, cfg.budget);
}

Mask finalize_mask(const std::vector<double>& s, std::size_t K, Rng& rng) {
  Mask m = sample_mask(s, rng);
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) selected.push_back(i);
  }
  if (selected.empty()) {
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(s.begin(), s.end()) - s.begin());
    m[best] = 1;
    return m;
  }
  if (selected.size() > K) {
    // Keep the K selected coordinates with largest probability, lower index
    // winning ties.
    std::stable_sort(selected.begin(), selected.end(),
                     [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    for (std::size_t k = K; k < selected.size(); ++k) m[selected[k]] = 0;
  }
  return m;
}

std::vector<std::size_t> stratified_batch(
    const std::map<int, std::vector<std::size_t>>& by_group, std::size_t n,
    std::size_t batch, Rng& rng) {
  const std::size_t num_groups = by_group.size();
  if (batch >= n) {
    std::vector<std::size_t> all;
    all.reserve(n);
    for (const auto& [g, rows] : by_group) all.insert(all.end(), rows.begin(), rows.end());
    std::sort(all.begin(), all.end());
    return all;
  }
  if (batch < num_groups) {
    throw ConfigurationError("outer batch of " + std::to_string(batch) +
                             " cannot contain every one of " + std::to_string(num_groups) +
                             " groups");
  }

  // One slot per group, the rest apportioned by size (largest remainder),
  // capped by group capacity.
  std::vector<const std::vector<std::size_t>*> rows;
  rows.reserve(num_groups);
  for (const auto& [g, r] : by_group) rows.push_back(&r);
  std::vector<std::size_t> alloc(num_groups, 1);
  std::size_t remaining = batch - num_groups;
  const std::size_t spare_total = n - num_groups;
  std::vector<double> remainders(num_groups, 0.0);
  for (std::size_t g = 0; g < num_groups; ++g) {
    const std::size_t spare = rows[g]->size() - 1;
    const double exact =
        spare_total == 0 ? 0.0
                         : static_cast<double>(remaining) * static_cast<double>(spare) /
                               static_cast<double>(spare_total);
    std::size_t take = std::min(spare, static_cast<std::size_t>(std::floor(exact)));
    alloc[g] += take;
    remainders[g] = exact - static_cast<double>(take);
  }
  std::size_t assigned = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
  std::vector<std::size_t> order(num_groups);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t k = 0; assigned < batch; k = (k + 1) % num_groups) {
    const std::size_t g = order[k];
    if (alloc[g] < rows[g]->size()) {
      ++alloc[g];
      ++assigned;
    }
  }

  // Partial Fisher-Yates per group: the first alloc[g] slots are the sample.
  std::vector<std::size_t> batch_idx;
  batch_idx.reserve(batch);
  for (std::size_t g = 0; g < num_groups; ++g) {
    std::vector<std::size_t> pool = *rows[g];
    for (std::size_t k = 0; k < alloc[g]; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(rng.uniform_index(pool.size() - k));
      std::swap(pool[k], pool[j]);
      batch_idx.push_back(pool[k]);
    }
  }
  std::sort(batch_idx.begin(), batch_idx.end());
  return batch_idx;
}

TrainedRiskEvaluator::TrainedRiskEvaluator(const Dataset& train, const Dataset& outer,
                                           std::vector<std::size_t> model_dims,
                                           InnerConfig inner, RiskConfig risk,
                                           std::uint64_t seed)
    : train_(train),
      outer_(outer),
      model_dims_(std::move(model_dims)),
      inner_(inner),
      risk_(risk),
      seed_(seed),
      outer_groups_(partition_by_group(outer)) {
  if (static_cast<int>(outer_groups_.size()) != outer.num_groups()) {
    throw ValidationError("outer dataset is missing samples for some group");
  }
  if (risk_.eval_batch < outer_groups_.size()) {
    throw ConfigurationError("risk eval_batch smaller than the number of groups");
  }
}

double TrainedRiskEvaluator::evaluate(const Mask& m, std::size_t iteration) {
  std::vector<double> weights(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) weights[i] = m[i] ? 1.0 : 0.0;
  // Fresh initialization and fresh batch stream per outer iteration.
  InnerConfig inner = inner_;
  inner.seed = derive_seed(seed_, 2 * iteration);
  const ModelParams init =
      init_mlp(model_dims_, derive_seed(seed_, 2 * iteration + 1));
  const TrainReport report = train_weighted_erm(init, train_, weights, inner);
  last_model_ = report.params;

  Rng batch_rng(derive_seed(seed_, 0x8000000000000000ULL + iteration));
  const std::vector<std::size_t> idx =
      stratified_batch(outer_groups_, outer_.size(), risk_.eval_batch, batch_rng);
  return compute_risk(report.params, outer_, idx, risk_).total;
}

SelectResult run_selection(const Dataset& train, RiskEvaluator& eval,
                           const OuterConfig& cfg) {
  const std::size_t n = train.size();
  if (cfg.budget == 0 || cfg.budget > n) {
    throw ValidationError("selection budget must lie in [1, n]");
  }
  if (cfg.iterations == 0) throw ValidationError("selection needs at least one iteration");
  if (!(cfg.lr > 0.0)) throw ValidationError("outer learning rate must be > 0");
  if (!(cfg.prob_clamp > 0.0 && cfg.prob_clamp < 0.5)) {
    throw ValidationError("prob_clamp must lie in (0, 0.5)");
  }

  SelectResult result;
  result.num_groups = train.num_groups();
  const std::size_t num_cells = static_cast<std::size_t>(result.num_groups) * 2;

  std::vector<double> s(n, static_cast<double>(cfg.budget) / static_cast<double>(n));
  OuterState state;
  Rng mask_rng(derive_seed(cfg.seed, 1));
  Rng final_rng(derive_seed(cfg.seed, 2));

  const std::size_t snapshot_every = std::max<std::size_t>(1, cfg.iterations / 20);
  const auto uncertain_fraction = [&](const std::vector<double>& p) {
    std::size_t count = 0;
    for (double v : p) {
      if (v > 0.05 && v < 0.95) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(p.size());
  };

  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    result.uncertain_fraction_history.push_back(uncertain_fraction(s));
    if ((t - 1) % snapshot_every == 0) result.s_history.emplace_back(t, s);

    Mask m;
    try {
      m = sample_nonempty_mask(s, mask_rng);
    } catch (const DegenerateProbabilitiesError& e) {
      throw DegenerateProbabilitiesError(std::string(e.what()) + " at iteration " +
                                         std::to_string(t));
    }

    const double risk = eval.evaluate(m, t);
    result.risk_history.push_back(risk);

    std::vector<double> cell_counts(num_cells, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!m[i]) continue;
      cell_counts[static_cast<std::size_t>(train.groups[i]) * 2 +
                  static_cast<std::size_t>(train.labels[i])] += 1.0;
      total += 1.0;
    }
    for (double& c : cell_counts) c /= total;
    result.group_weight_history.push_back(std::move(cell_counts));

    s = outer_step(s, m, risk, cfg, state);
  }

  result.uncertain_fraction_history.push_back(uncertain_fraction(s));
  result.s_history.emplace_back(cfg.iterations + 1, s);
  result.final_s = std::move(s);
  result.final_mask = finalize_mask(result.final_s, cfg.budget, final_rng);
  return result;
}

SelectResult run_selection(const Dataset& train, const Dataset& outer,
                           const std::vector<std::size_t>& model_dims,
                           const InnerConfig& inner, const OuterConfig& cfg,
                           const RiskConfig& risk) {
  TrainedRiskEvaluator eval(train, outer, model_dims, inner, risk,
                            derive_seed(cfg.seed, 3));
  return run_selection(train, eval, cfg);
}

}  // namespace suffice
