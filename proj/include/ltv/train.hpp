#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ltv/data.hpp"
#include "ltv/loss.hpp"
#include "ltv/model.hpp"

namespace ltv::train {

struct TrainConfig {
  std::size_t batch_size = 1024;
  double learning_rate = 2e-4;
  std::size_t max_epochs = 400;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t early_stop_patience = 10;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  loss::LossKind loss_kind = loss::LossKind::kZiln;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
};

// Raised when a non-finite loss or gradient is encountered; training aborts
// rather than propagating NaN into the parameters.
struct TrainingAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// First/second moment accumulators per parameter tensor.
struct AdamState {
  model::ParamGrads m;
  model::ParamGrads v;
  std::size_t step = 0;

  static AdamState zeros_like(const model::ModelParams& params);
};

// Standard Adam update with bias correction, applied in place.
void adam_step(model::ModelParams& params, const model::ParamGrads& grads,
               AdamState& state, const TrainConfig& config);

// splitmix64-based mixing for derived seeds (per-epoch shuffles,
// per-replication streams).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training: seeded validation split, per-epoch reshuffle with a
// derived seed, early stopping on validation loss with best-checkpoint
// restore.
std::pair<model::ModelParams, TrainHistory> train(
    const model::ModelParams& initial, std::span<const data::LtvExample> dataset,
    const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace ltv::train
