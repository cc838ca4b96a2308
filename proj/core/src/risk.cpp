#include "suffice/risk.hpp"

#include <cmath>
#include <string>

#include "suffice/errors.hpp"

namespace suffice {

namespace {

// Per-group sample index lists within the batch, with presence checks.
std::vector<std::vector<std::size_t>> group_rows(const Dataset& ds,
                                                 const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ValidationError("risk: empty evaluation batch");
  const int num_groups = ds.num_groups();
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(num_groups));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    if (i >= ds.size()) throw ValidationError("risk: batch index out of range");
    rows[static_cast<std::size_t>(ds.groups[i])].push_back(k);
  }
  for (int g = 0; g < num_groups; ++g) {
    if (rows[static_cast<std::size_t>(g)].empty()) {
      throw DegenerateBatchError("evaluation batch is missing group '" +
                                 ds.group_names[static_cast<std::size_t>(g)] + "' (id " +
                                 std::to_string(g) + ")");
    }
  }
  return rows;
}

double cross_entropy(double logit, int label) {
  return label == 1 ? softplus(-logit) : softplus(logit);
}

}  // namespace

std::vector<double> env_losses(const ModelParams& params, const Dataset& ds,
                               const std::vector<std::size_t>& idx) {
  const auto rows = group_rows(ds, idx);
  const Matrix X = gather_rows(ds.features, idx);
  const std::vector<double> logits = forward(params, X);
  std::vector<double> losses(rows.size(), 0.0);
  for (std::size_t g = 0; g < rows.size(); ++g) {
    double sum = 0.0;
    for (std::size_t k : rows[g]) sum += cross_entropy(logits[k], ds.labels[idx[k]]);
    losses[g] = sum / static_cast<double>(rows[g].size());
  }
  return losses;
}

double irmv1_penalty(const ModelParams& params, const Dataset& ds,
                     const std::vector<std::size_t>& idx, PenaltyForm form) {
  const auto rows = group_rows(ds, idx);
  if (form == PenaltyForm::kDummyScalar) {
    const Matrix X = gather_rows(ds.features, idx);
    const std::vector<double> logits = forward(params, X);
    double penalty = 0.0;
    for (const auto& group : rows) {
      // d/dt of the group's mean CE on logits t*z, at t = 1.
      double grad = 0.0;
      for (std::size_t k : group) {
        const double z = logits[k];
        grad += (sigmoid(z) - static_cast<double>(ds.labels[idx[k]])) * z;
      }
      grad /= static_cast<double>(group.size());
      penalty += grad * grad;
    }
    return penalty;
  }
  // Full last-layer form: squared norm of each group's CE gradient with
  // respect to the final layer's weights and bias.
  double penalty = 0.0;
  for (const auto& group : rows) {
    std::vector<std::size_t> group_idx;
    group_idx.reserve(group.size());
    for (std::size_t k : group) group_idx.push_back(idx[k]);
    const Matrix Xg = gather_rows(ds.features, group_idx);
    const ForwardCache cache = forward_cached(params, Xg);
    const Matrix& last_input = cache.activations[params.layers.size() - 1];
    const double inv = 1.0 / static_cast<double>(group_idx.size());
    std::vector<double> grad_w(last_input.cols, 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < group_idx.size(); ++i) {
      const double d =
          (sigmoid(cache.logits[i]) - static_cast<double>(ds.labels[group_idx[i]])) * inv;
      const double* x = last_input.row(i);
      for (std::size_t k = 0; k < last_input.cols; ++k) grad_w[k] += d * x[k];
      grad_b += d;
    }
    double norm2 = grad_b * grad_b;
    for (double v : grad_w) norm2 += v * v;
    penalty += norm2;
  }
  return penalty;
}

double population_variance(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

std::pair<double, Gradients> irm_objective_backward(const ModelParams& params,
                                                    const Dataset& ds,
                                                    const std::vector<std::size_t>& idx,
                                                    double lambda) {
  const auto rows = group_rows(ds, idx);
  const Matrix X = gather_rows(ds.features, idx);
  const ForwardCache cache = forward_cached(params, X);

  double objective = 0.0;
  std::vector<double> logit_grad(idx.size(), 0.0);
  for (const auto& group : rows) {
    const double inv = 1.0 / static_cast<double>(group.size());
    double loss = 0.0;
    double dummy_grad = 0.0;
    for (std::size_t k : group) {
      const double z = cache.logits[k];
      const int y = ds.labels[idx[k]];
      loss += cross_entropy(z, y);
      dummy_grad += (sigmoid(z) - static_cast<double>(y)) * z;
    }
    loss *= inv;
    dummy_grad *= inv;
    objective += loss + lambda * dummy_grad * dummy_grad;
    for (std::size_t k : group) {
      const double z = cache.logits[k];
      const double sig = sigmoid(z);
      const double residual = sig - static_cast<double>(ds.labels[idx[k]]);
      // d/dz of (sigma(z) - y) * z feeds the squared dummy gradient.
      const double d_dummy = sig * (1.0 - sig) * z + residual;
      logit_grad[k] = inv * (residual + lambda * 2.0 * dummy_grad * d_dummy);
    }
  }
  return {objective, backward_from_logit_grad(params, cache, logit_grad)};
}

RiskValue compute_risk(const ModelParams& params, const Dataset& ds,
                       const std::vector<std::size_t>& idx, const RiskConfig& cfg) {
  if (cfg.lambda < 0.0) throw ValidationError("risk: lambda must be >= 0");
  RiskValue value;
  value.env_losses = env_losses(params, ds, idx);
  double sum = 0.0;
  for (double l : value.env_losses) sum += l;
  if (cfg.variant == RiskVariant::kIrmV1) {
    value.penalty = irmv1_penalty(params, ds, idx, cfg.penalty_form);
  } else {
    value.penalty = population_variance(value.env_losses);
  }
  value.total = sum + cfg.lambda * value.penalty;
  return value;
}

}  // namespace suffice
