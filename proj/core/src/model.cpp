#include "suffice/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "suffice/errors.hpp"
#include "suffice/rng.hpp"

namespace suffice {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double t) {
  if (t > 30.0) return t;
  return std::log1p(std::exp(t));
}

ModelParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) {
    throw ValidationError("init_mlp: need at least input and output sizes");
  }
  if (dims.back() != 1) {
    throw ValidationError("init_mlp: the final layer must emit a single logit");
  }
  for (std::size_t s : dims) {
    if (s == 0) throw ValidationError("init_mlp: zero layer width");
  }
  ModelParams params;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    layer.weights = Matrix(out, in);
    layer.bias.assign(out, 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights.data) {
      w = (2.0 * rng.uniform01() - 1.0) * bound;
    }
    layer.activation =
        (l + 2 == dims.size()) ? Activation::kIdentity : Activation::kRelu;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardCache forward_cached(const ModelParams& params, const Matrix& X) {
  if (X.cols != params.input_dim()) {
    throw ValidationError("forward: batch has " + std::to_string(X.cols) +
                          " features, model expects " +
                          std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.activations.push_back(X);
  const std::size_t n = X.rows;
  for (const Layer& layer : params.layers) {
    const Matrix& in = cache.activations.back();
    const std::size_t out_dim = layer.fan_out();
    Matrix pre(n, out_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = in.row(i);
      double* z = pre.row(i);
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double* w = layer.weights.row(o);
        double acc = layer.bias[o];
        for (std::size_t k = 0; k < layer.fan_in(); ++k) acc += w[k] * x[k];
        z[o] = acc;
      }
    }
    Matrix act = pre;
    if (layer.activation == Activation::kRelu) {
      for (double& v : act.data) v = v > 0.0 ? v : 0.0;
    }
    cache.pre_activations.push_back(std::move(pre));
    cache.activations.push_back(std::move(act));
  }
  const Matrix& last = cache.activations.back();
  cache.logits.resize(n);
  for (std::size_t i = 0; i < n; ++i) cache.logits[i] = last.at(i, 0);
  return cache;
}

std::vector<double> forward(const ModelParams& params, const Matrix& X) {
  return forward_cached(params, X).logits;
}

double weighted_ce_loss(const std::vector<double>& logits, const std::vector<int>& labels,
                        const std::vector<double>& weights) {
  const std::size_t n = logits.size();
  if (labels.size() != n || weights.size() != n) {
    throw ValidationError("weighted_ce_loss: logits/labels/weights lengths differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits[i];
    const double ce = labels[i] == 1 ? softplus(-z) : softplus(z);
    sum += weights[i] * ce;
  }
  return sum / static_cast<double>(n);
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients grads;
  for (const Layer& layer : params.layers) {
    LayerGrad g;
    g.weights = Matrix(layer.fan_out(), layer.fan_in());
    g.bias.assign(layer.fan_out(), 0.0);
    grads.push_back(std::move(g));
  }
  return grads;
}

Gradients backward_from_logit_grad(const ModelParams& params, const ForwardCache& cache,
                                   const std::vector<double>& logit_grad) {
  const std::size_t n = logit_grad.size();
  Gradients grads = zero_gradients(params);
  // delta holds dLoss/d(pre-activation) for the current layer.
  Matrix delta(n, 1);
  for (std::size_t i = 0; i < n; ++i) delta.at(i, 0) = logit_grad[i];

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Layer& layer = params.layers[l];
    const Matrix& input = cache.activations[l];
    LayerGrad& g = grads[l];
    const std::size_t out_dim = layer.fan_out();
    for (std::size_t i = 0; i < n; ++i) {
      const double* d = delta.row(i);
      const double* x = input.row(i);
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        double* wrow = g.weights.row(o);
        for (std::size_t k = 0; k < layer.fan_in(); ++k) wrow[k] += dv * x[k];
        g.bias[o] += dv;
      }
    }
    if (l == 0) break;
    const Layer& prev = params.layers[l - 1];
    const Matrix& prev_pre = cache.pre_activations[l - 1];
    Matrix next_delta(n, prev.fan_out());
    for (std::size_t i = 0; i < n; ++i) {
      const double* d = delta.row(i);
      double* nd = next_delta.row(i);
      for (std::size_t k = 0; k < prev.fan_out(); ++k) {
        double acc = 0.0;
        for (std::size_t o = 0; o < out_dim; ++o) {
          acc += d[o] * layer.weights.at(o, k);
        }
        // ReLU passes gradient only where the pre-activation was positive.
        if (prev.activation == Activation::kRelu && prev_pre.at(i, k) <= 0.0) acc = 0.0;
        nd[k] = acc;
      }
    }
    delta = std::move(next_delta);
  }
  return grads;
}

std::pair<double, Gradients> backward(const ModelParams& params, const Matrix& X,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& weights) {
  const ForwardCache cache = forward_cached(params, X);
  const std::size_t n = X.rows;
  if (labels.size() != n || weights.size() != n) {
    throw ValidationError("backward: labels/weights lengths differ from the batch");
  }
  const double loss = weighted_ce_loss(cache.logits, labels, weights);
  std::vector<double> logit_grad(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    logit_grad[i] =
        weights[i] * (sigmoid(cache.logits[i]) - static_cast<double>(labels[i])) * inv_n;
  }
  return {loss, backward_from_logit_grad(params, cache, logit_grad)};
}

std::vector<int> predict(const ModelParams& params, const Matrix& X) {
  const std::vector<double> logits = forward(params, X);
  std::vector<int> preds(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) preds[i] = logits[i] > 0.0 ? 1 : 0;
  return preds;
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << "mlp " << params.layers.size() << "\n";
  char buf[40];
  for (const Layer& layer : params.layers) {
    out << (layer.activation == Activation::kRelu ? "relu" : "identity") << " "
        << layer.fan_out() << " " << layer.fan_in() << "\n";
    for (double v : layer.weights.data) {
      std::snprintf(buf, sizeof(buf), "%a", v);
      out << buf << "\n";
    }
    for (double v : layer.bias) {
      std::snprintf(buf, sizeof(buf), "%a", v);
      out << buf << "\n";
    }
  }
  if (!out) throw IoError("failed writing model file: " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string magic;
  std::size_t num_layers = 0;
  in >> magic >> num_layers;
  if (magic != "mlp") throw SchemaError("not a model checkpoint: " + path);
  ModelParams params;
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::string act;
    std::size_t out_dim = 0, in_dim = 0;
    in >> act >> out_dim >> in_dim;
    Layer layer;
    layer.activation = act == "relu" ? Activation::kRelu : Activation::kIdentity;
    layer.weights = Matrix(out_dim, in_dim);
    layer.bias.assign(out_dim, 0.0);
    std::string tok;
    for (double& v : layer.weights.data) {
      in >> tok;
      v = std::strtod(tok.c_str(), nullptr);
    }
    for (double& v : layer.bias) {
      in >> tok;
      v = std::strtod(tok.c_str(), nullptr);
    }
    params.layers.push_back(std::move(layer));
  }
  if (!in) throw SchemaError("truncated model checkpoint: " + path);
  return params;
}

}  // namespace suffice
