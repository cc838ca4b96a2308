#ifndef SUFFICE_MODEL_HPP
#define SUFFICE_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "suffice/matrix.hpp"

namespace suffice {

enum class Activation { kRelu, kIdentity };

/// One fully connected layer: y = act(W x + b), W is out x in row-major.
struct Layer {
  Matrix weights;            // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::kIdentity;

  std::size_t fan_in() const { return weights.cols; }
  std::size_t fan_out() const { return weights.rows; }
  bool operator==(const Layer& other) const = default;
};

/// Feed-forward binary classifier emitting one logit. Hidden layers are
/// ReLU, the final layer is linear.
struct ModelParams {
  std::vector<Layer> layers;
  std::size_t input_dim() const { return layers.front().fan_in(); }
  bool operator==(const ModelParams& other) const = default;
};

/// Same shapes as the model's weights/biases.
struct LayerGrad {
  Matrix weights;
  std::vector<double> bias;
};
using Gradients = std::vector<LayerGrad>;

/// Glorot-uniform weights, zero biases. `dims` lists layer widths from the
/// input to the single output logit, e.g. {5, 16, 1}.
ModelParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);

/// Logits for a batch (X is n x input_dim).
std::vector<double> forward(const ModelParams& params, const Matrix& X);

/// (1/n) * sum_i w_i * ce_i with ce_i the binary cross-entropy of
/// sigmoid(logit_i) against label_i, evaluated in softplus form so large
/// logits stay finite.
double weighted_ce_loss(const std::vector<double>& logits, const std::vector<int>& labels,
                        const std::vector<double>& weights);

/// Loss and exact parameter gradient of weighted_ce_loss(forward(...)).
std::pair<double, Gradients> backward(const ModelParams& params, const Matrix& X,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& weights);

/// Layer inputs/outputs retained by a forward pass, for reuse by callers
/// that seed backpropagation with their own per-logit derivative.
struct ForwardCache {
  std::vector<Matrix> pre_activations;  // one per layer, n x fan_out
  std::vector<Matrix> activations;      // input batch followed by layer outputs
  std::vector<double> logits;           // final column, n entries
};

ForwardCache forward_cached(const ModelParams& params, const Matrix& X);

/// Backpropagates an arbitrary dLoss/dlogit vector through the cached pass.
Gradients backward_from_logit_grad(const ModelParams& params, const ForwardCache& cache,
                                   const std::vector<double>& logit_grad);

/// Hard labels: 1 iff logit > 0 (a tie at exactly 0 maps to 0).
std::vector<int> predict(const ModelParams& params, const Matrix& X);

Gradients zero_gradients(const ModelParams& params);

/// Checkpoint I/O. Text format with hex-float parameters so that
/// save -> load round-trips bit-exactly.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

/// Numerically stable sigma(z) = 1 / (1 + exp(-z)).
double sigmoid(double z);
/// log(1 + exp(t)) without overflow.
double softplus(double t);

}  // namespace suffice

#endif  // SUFFICE_MODEL_HPP
