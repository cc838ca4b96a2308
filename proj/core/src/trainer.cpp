#include "suffice/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "suffice/errors.hpp"
#include "suffice/rng.hpp"

namespace suffice {

TrainReport train_weighted_erm(const ModelParams& init, const Dataset& ds,
                               const std::vector<double>& weights, const InnerConfig& cfg) {
  if (weights.size() != ds.size()) {
    throw ValidationError("train_weighted_erm: weight vector length != dataset size");
  }
  if (cfg.epochs == 0) throw ValidationError("train_weighted_erm: epochs must be >= 1");
  if (!(cfg.lr > 0.0)) throw ValidationError("train_weighted_erm: lr must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw ValidationError("train_weighted_erm: momentum must lie in [0,1)");
  }
  if (cfg.batch_size == 0) {
    throw ValidationError("train_weighted_erm: batch_size must be >= 1");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("train_weighted_erm: negative weight");
  }

  // Only samples with positive weight take part; gathering them keeps every
  // epoch proportional to the selected-set size, and makes binary-weight
  // training coincide exactly with training on the filtered dataset.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) active.push_back(i);
  }
  if (active.empty()) {
    throw ValidationError("train_weighted_erm: empty selected set (all weights zero)");
  }
  const std::size_t n_active = active.size();
  const Matrix X = gather_rows(ds.features, active);
  std::vector<int> y(n_active);
  std::vector<double> w(n_active);
  for (std::size_t k = 0; k < n_active; ++k) {
    y[k] = ds.labels[active[k]];
    w[k] = weights[active[k]];
  }

  TrainReport report;
  report.params = init;
  Gradients velocity = zero_gradients(init);
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(n_active);
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batch = std::min(cfg.batch_size, n_active);
  std::vector<std::size_t> batch_rows(batch);
  std::vector<int> batch_y(batch);
  std::vector<double> batch_w(batch);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n_active; start += batch) {
      const std::size_t count = std::min(batch, n_active - start);
      batch_rows.resize(count);
      batch_y.resize(count);
      batch_w.resize(count);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t r = order[start + k];
        batch_rows[k] = r;
        batch_y[k] = y[r];
        batch_w[k] = w[r];
      }
      const Matrix Xb = gather_rows(X, batch_rows);
      auto [loss, grads] = backward(report.params, Xb, batch_y, batch_w);
      (void)loss;
      for (std::size_t l = 0; l < grads.size(); ++l) {
        Layer& layer = report.params.layers[l];
        LayerGrad& v = velocity[l];
        const LayerGrad& g = grads[l];
        for (std::size_t k = 0; k < v.weights.data.size(); ++k) {
          v.weights.data[k] = cfg.momentum * v.weights.data[k] + g.weights.data[k];
          layer.weights.data[k] -= cfg.lr * v.weights.data[k];
        }
        for (std::size_t k = 0; k < v.bias.size(); ++k) {
          v.bias[k] = cfg.momentum * v.bias[k] + g.bias[k];
          layer.bias[k] -= cfg.lr * v.bias[k];
        }
      }
    }
    const double epoch_loss = weighted_ce_loss(forward(report.params, X), y, w);
    report.epoch_losses.push_back(epoch_loss);
    report.epochs_run = epoch + 1;
    if (epoch > 0) {
      const double prev = report.epoch_losses[epoch - 1];
      if (std::abs(prev - epoch_loss) < cfg.tol) {
        report.converged = true;
        break;
      }
    }
  }
  return report;
}

}  // namespace suffice
