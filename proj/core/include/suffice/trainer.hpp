#ifndef SUFFICE_TRAINER_HPP
#define SUFFICE_TRAINER_HPP

#include <cstdint>
#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/model.hpp"

namespace suffice {

struct InnerConfig {
  std::size_t epochs = 100;  // upper bound; the plateau check can stop earlier
  double lr = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  double tol = 1e-5;  // stop when consecutive epoch losses differ by less
  std::uint64_t seed = 0;
};

struct TrainReport {
  ModelParams params;
  std::vector<double> epoch_losses;  // one entry per epoch actually run
  std::size_t epochs_run = 0;
  bool converged = false;
};

/// Minimizes the weighted empirical cross-entropy with minibatch SGD plus
/// heavy-ball momentum. Only samples with weight > 0 participate: they are
/// gathered once up front, so a binary weight vector trains bit-identically
/// to training on the physically filtered dataset with the same seed.
/// Epoch losses are the weighted mean over the active set, measured after
/// each epoch's updates.
TrainReport train_weighted_erm(const ModelParams& init, const Dataset& ds,
                               const std::vector<double>& weights, const InnerConfig& cfg);

}  // namespace suffice

#endif  // SUFFICE_TRAINER_HPP
