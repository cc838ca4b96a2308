#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "suffice/dataset.hpp"
#include "suffice/errors.hpp"
#include "suffice/risk.hpp"
#include "suffice/rng.hpp"

using namespace suffice;

namespace {

// Single identity unit: the sample's one feature IS the logit.
ModelParams identity_model() {
  ModelParams params;
  Layer layer;
  layer.weights = Matrix(1, 1);
  layer.weights.at(0, 0) = 1.0;
  layer.bias = {0.0};
  layer.activation = Activation::kIdentity;
  params.layers.push_back(layer);
  return params;
}

Dataset logit_dataset(const std::vector<double>& logits, const std::vector<int>& labels,
                      const std::vector<int>& groups, int num_groups) {
  Dataset ds;
  ds.features = Matrix(logits.size(), 1);
  for (std::size_t i = 0; i < logits.size(); ++i) ds.features.at(i, 0) = logits[i];
  ds.labels = labels;
  ds.groups = groups;
  ds.feature_names = {"z"};
  for (int g = 0; g < num_groups; ++g) ds.group_names.push_back("g" + std::to_string(g));
  return ds;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Logit whose single-sample (y=1) cross-entropy is exactly L.
double logit_for_loss(double L) { return -std::log(std::expm1(L)); }

}  // namespace

TEST_SUITE("risk") {

TEST_CASE("env_losses: single group is the mean cross-entropy") {
  const Dataset ds = logit_dataset({0.0, 0.0}, {1, 0}, {0, 0}, 1);
  const std::vector<double> losses = env_losses(identity_model(), ds, all_indices(2));
  REQUIRE(losses.size() == 1);
  CHECK(losses[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("env_losses: zero logits give ln 2 per environment") {
  const Dataset ds = logit_dataset({0, 0, 0, 0}, {1, 0, 1, 0}, {0, 0, 1, 1}, 2);
  const std::vector<double> losses = env_losses(identity_model(), ds, all_indices(4));
  REQUIRE(losses.size() == 2);
  CHECK(losses[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(losses[1] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("env_losses names the missing group") {
  const Dataset ds = logit_dataset({0, 0, 0, 0}, {1, 0, 1, 0}, {0, 0, 1, 1}, 2);
  const std::vector<std::size_t> only_group0 = {0, 1};
  CHECK_THROWS_WITH_AS(env_losses(identity_model(), ds, only_group0),
                       doctest::Contains("g1"), DegenerateBatchError);
  CHECK_THROWS_AS(env_losses(identity_model(), ds, {}), ValidationError);
}

TEST_CASE("dummy penalty vanishes at zero logits") {
  const Dataset ds = logit_dataset({0.0}, {1}, {0}, 1);
  CHECK(irmv1_penalty(identity_model(), ds, all_indices(1)) == 0.0);
}

TEST_CASE("dummy penalty on the z=1, y=0 fixture") {
  const Dataset ds = logit_dataset({1.0}, {0}, {0}, 1);
  const double penalty = irmv1_penalty(identity_model(), ds, all_indices(1));
  const double g = sigmoid(1.0) * 1.0;
  CHECK(penalty == doctest::Approx(g * g).epsilon(1e-14));
  CHECK(penalty == doctest::Approx(0.53444).epsilon(2e-5));
}

TEST_CASE("opposite per-environment gradients add their squares") {
  // env 0: one sample (z=a, y=0) with dummy gradient g0 = a*sigmoid(a).
  const double a = 0.2;
  const double g0 = a * sigmoid(a);
  // env 1: one sample (z*, y=1) with gradient (sigmoid(z*)-1)*z* = -g0;
  // z(1-sigmoid(z)) is increasing on [0, 1.27], so bisect for z*.
  double lo = 0.0, hi = 1.27;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid * (1.0 - sigmoid(mid)) < g0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double z_star = 0.5 * (lo + hi);
  const Dataset ds = logit_dataset({a, z_star}, {0, 1}, {0, 1}, 2);
  const double penalty = irmv1_penalty(identity_model(), ds, all_indices(2));
  // Summed squares, not the square of the (zero) sum.
  CHECK(penalty == doctest::Approx(2.0 * g0 * g0).epsilon(1e-9));
  CHECK(penalty > 0.02);
}

TEST_CASE("dummy penalty matches a finite difference in the scaling factor") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 6;
    std::vector<double> logits(n);
    std::vector<int> labels(n), groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = rng.normal() * 2.0;
      labels[i] = rng.bernoulli(0.5) ? 1 : 0;
      groups[i] = i < 3 ? 0 : 1;
    }
    const Dataset ds = logit_dataset(logits, labels, groups, 2);
    const double penalty = irmv1_penalty(identity_model(), ds, all_indices(n));

    const double h = 1e-5;
    const auto env_loss_at = [&](int group, double t) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (groups[i] != group) continue;
        const double z = t * logits[i];
        sum += labels[i] == 1 ? softplus(-z) : softplus(z);
        ++count;
      }
      return sum / static_cast<double>(count);
    };
    double fd_penalty = 0.0;
    for (int g = 0; g < 2; ++g) {
      const double d = (env_loss_at(g, 1.0 + h) - env_loss_at(g, 1.0 - h)) / (2.0 * h);
      fd_penalty += d * d;
    }
    CHECK(penalty == doctest::Approx(fd_penalty).epsilon(1e-4));
  }
}

TEST_CASE("last-layer penalty matches finite differences") {
  Rng rng(19);
  const std::size_t n = 8;
  const ModelParams params = init_mlp({3, 4, 1}, 55);
  Dataset ds;
  ds.features = Matrix(n, 3);
  for (double& v : ds.features.data) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    ds.groups.push_back(i < 4 ? 0 : 1);
  }
  ds.feature_names = {"a", "b", "c"};
  ds.group_names = {"g0", "g1"};

  const double penalty =
      irmv1_penalty(params, ds, all_indices(n), PenaltyForm::kLastLayer);

  // Finite differences of each group's mean CE against last-layer parameters.
  const auto group_loss = [&](const ModelParams& p, int group) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.groups[i] == group) idx.push_back(i);
    }
    const Matrix X = gather_rows(ds.features, idx);
    std::vector<int> y;
    for (std::size_t i : idx) y.push_back(ds.labels[i]);
    return weighted_ce_loss(forward(p, X), y, std::vector<double>(idx.size(), 1.0));
  };
  double fd_penalty = 0.0;
  const double h = 1e-6;
  for (int g = 0; g < 2; ++g) {
    ModelParams work = params;
    Layer& last = work.layers.back();
    double norm2 = 0.0;
    const auto accumulate = [&](double& coord) {
      const double saved = coord;
      coord = saved + h;
      const double up = group_loss(work, g);
      coord = saved - h;
      const double down = group_loss(work, g);
      coord = saved;
      const double d = (up - down) / (2.0 * h);
      norm2 += d * d;
    };
    for (double& wv : last.weights.data) accumulate(wv);
    for (double& bv : last.bias) accumulate(bv);
    fd_penalty += norm2;
  }
  CHECK(penalty == doctest::Approx(fd_penalty).epsilon(1e-4));
}

TEST_CASE("rex risk on exactly constructed env losses") {
  // Single-sample environments with losses exactly 1 and 3.
  const Dataset ds =
      logit_dataset({logit_for_loss(1.0), logit_for_loss(3.0)}, {1, 1}, {0, 1}, 2);
  RiskConfig cfg;
  cfg.variant = RiskVariant::kRex;
  cfg.lambda = 1.0;
  const RiskValue value = compute_risk(identity_model(), ds, all_indices(2), cfg);
  CHECK(value.env_losses[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(value.env_losses[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(value.total == doctest::Approx(5.0).epsilon(1e-9));

  // The variance helper itself is exact on (1, 3).
  CHECK(population_variance({1.0, 3.0}) == 1.0);
}

TEST_CASE("lambda zero reduces to the sum of env losses") {
  Rng rng(4);
  std::vector<double> logits(6);
  std::vector<int> labels(6), groups(6);
  for (std::size_t i = 0; i < 6; ++i) {
    logits[i] = rng.normal();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    groups[i] = static_cast<int>(i % 2);
  }
  const Dataset ds = logit_dataset(logits, labels, groups, 2);
  for (const RiskVariant variant : {RiskVariant::kIrmV1, RiskVariant::kRex}) {
    RiskConfig cfg;
    cfg.variant = variant;
    cfg.lambda = 0.0;
    const RiskValue value = compute_risk(identity_model(), ds, all_indices(6), cfg);
    const std::vector<double> losses = env_losses(identity_model(), ds, all_indices(6));
    CHECK(value.total == losses[0] + losses[1]);
  }
}

TEST_CASE("single-environment rex has zero variance") {
  const Dataset ds = logit_dataset({0.7, -0.2}, {1, 0}, {0, 0}, 1);
  RiskConfig cfg;
  cfg.variant = RiskVariant::kRex;
  cfg.lambda = 5.0;
  const RiskValue value = compute_risk(identity_model(), ds, all_indices(2), cfg);
  CHECK(value.penalty == 0.0);
  CHECK(value.total == value.env_losses[0]);
}

TEST_CASE("rex variance ignores a constant shift of all env losses") {
  const double l1 = 0.8, l2 = 1.7, c = 0.9;
  const auto variance_of = [&](double a, double b) {
    const Dataset ds =
        logit_dataset({logit_for_loss(a), logit_for_loss(b)}, {1, 1}, {0, 1}, 2);
    RiskConfig cfg;
    cfg.variant = RiskVariant::kRex;
    cfg.lambda = 1.0;
    return compute_risk(identity_model(), ds, all_indices(2), cfg).penalty;
  };
  CHECK(variance_of(l1, l2) == doctest::Approx(variance_of(l1 + c, l2 + c)).epsilon(1e-10));
}

TEST_CASE("risk total decomposes as sum plus weighted penalty") {
  Rng rng(14);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> logits(8);
    std::vector<int> labels(8), groups(8);
    for (std::size_t i = 0; i < 8; ++i) {
      logits[i] = rng.normal() * 2.0;
      labels[i] = rng.bernoulli(0.5) ? 1 : 0;
      groups[i] = static_cast<int>(i % 2);
    }
    const Dataset ds = logit_dataset(logits, labels, groups, 2);
    RiskConfig cfg;
    cfg.variant = trial % 2 == 0 ? RiskVariant::kIrmV1 : RiskVariant::kRex;
    cfg.lambda = 0.5 + rng.uniform01();
    const RiskValue v = compute_risk(identity_model(), ds, all_indices(8), cfg);
    double sum = 0.0;
    for (double l : v.env_losses) sum += l;
    CHECK(v.total == doctest::Approx(sum + cfg.lambda * v.penalty).epsilon(1e-9));
  }
}

TEST_CASE("regularized objective gradient matches finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 10;
    const ModelParams params = init_mlp({3, 5, 1}, 900 + trial);
    Dataset ds;
    ds.features = Matrix(n, 3);
    for (double& v : ds.features.data) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      ds.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
      ds.groups.push_back(i < n / 2 ? 0 : 1);
    }
    ds.feature_names = {"a", "b", "c"};
    ds.group_names = {"g0", "g1"};
    const double lambda = 0.7;

    std::vector<std::size_t> idx = all_indices(n);
    const auto [objective, grads] = irm_objective_backward(params, ds, idx, lambda);

    // The objective itself must agree with the risk decomposition.
    RiskConfig cfg;
    cfg.lambda = lambda;
    const RiskValue value = compute_risk(params, ds, idx, cfg);
    CHECK(objective == doctest::Approx(value.total).epsilon(1e-12));

    const std::vector<double> numeric = oracles::fd_gradient(
        params, [&](const ModelParams& p) {
          const RiskValue v = compute_risk(p, ds, idx, cfg);
          return v.total;
        });
    double worst = 0.0;
    const bool ok =
        oracles::gradients_close(oracles::flatten(grads), numeric, 1e-4, &worst);
    CAPTURE(worst);
    CHECK(ok);
  }
}

}  // TEST_SUITE
