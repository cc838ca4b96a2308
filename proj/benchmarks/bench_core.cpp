#include <benchmark/benchmark.h>

#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/model.hpp"
#include "suffice/reweight.hpp"
#include "suffice/rng.hpp"
#include "suffice/trainer.hpp"

namespace {

suffice::Dataset make_data(std::size_t n) {
  suffice::SyntheticConfig cfg;
  cfg.n = n;
  cfg.seed = 1;
  return suffice::gen_synthetic(cfg);
}

void BM_project_capped_box(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  suffice::Rng rng(7);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * 2.0;
  const std::size_t K = n / 4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(suffice::project_capped_box(v, K));
  }
}
BENCHMARK(BM_project_capped_box)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_sample_mask(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n, 0.3);
  suffice::Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(suffice::sample_mask(s, rng));
  }
}
BENCHMARK(BM_sample_mask)->Arg(1000)->Arg(10000);

void BM_forward_backward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const suffice::Dataset ds = make_data(batch);
  const suffice::ModelParams params = suffice::init_mlp({ds.dim(), 16, 1}, 5);
  const std::vector<double> weights(batch, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        suffice::backward(params, ds.features, ds.labels, weights));
  }
}
BENCHMARK(BM_forward_backward)->Arg(128)->Arg(512);

void BM_inner_training(benchmark::State& state) {
  const suffice::Dataset ds = make_data(800);
  const suffice::ModelParams init = suffice::init_mlp({ds.dim(), 16, 1}, 5);
  const std::vector<double> weights(ds.size(), 1.0);
  suffice::InnerConfig cfg;
  cfg.epochs = static_cast<std::size_t>(state.range(0));
  cfg.tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(suffice::train_weighted_erm(init, ds, weights, cfg));
  }
}
BENCHMARK(BM_inner_training)->Arg(1)->Arg(10);

void BM_stratified_batch(benchmark::State& state) {
  const suffice::Dataset ds = make_data(4000);
  const auto by_group = suffice::partition_by_group(ds);
  suffice::Rng rng(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        suffice::stratified_batch(by_group, ds.size(), 512, rng));
  }
}
BENCHMARK(BM_stratified_batch);

}  // namespace

BENCHMARK_MAIN();
