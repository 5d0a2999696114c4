#include "ltv/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace ltv::train {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw TrainingAbort(std::string("non-finite ") + what +
                        " encountered; training aborted");
  }
}

void update_tensor(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                   Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                   const TrainConfig& c, double bc1, double bc2) {
  check_finite(grad, "gradient");
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
  const Eigen::ArrayXXd m_hat = m.array() / bc1;
  const Eigen::ArrayXXd v_hat = v.array() / bc2;
  param.array() -= c.learning_rate * m_hat / (v_hat.sqrt() + c.adam_eps);
}

void update_vector(Eigen::VectorXd& param, const Eigen::VectorXd& grad,
                   Eigen::VectorXd& m, Eigen::VectorXd& v,
                   const TrainConfig& c, double bc1, double bc2) {
  if (!grad.allFinite()) {
    throw TrainingAbort("non-finite gradient encountered; training aborted");
  }
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
  const Eigen::ArrayXd m_hat = m.array() / bc1;
  const Eigen::ArrayXd v_hat = v.array() / bc2;
  param.array() -= c.learning_rate * m_hat / (v_hat.sqrt() + c.adam_eps);
}

data::EncodedBatch take_rows(const data::EncodedBatch& all,
                             std::span<const std::size_t> rows) {
  data::EncodedBatch out;
  out.numeric = Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()),
                                all.numeric.cols());
  out.categorical_indices = Eigen::MatrixXi(
      static_cast<Eigen::Index>(rows.size()), all.categorical_indices.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.numeric.row(static_cast<Eigen::Index>(i)) = all.numeric.row(r);
    if (all.categorical_indices.cols() > 0) {
      out.categorical_indices.row(static_cast<Eigen::Index>(i)) =
          all.categorical_indices.row(r);
    }
    out.labels.push_back(all.labels[rows[i]]);
  }
  return out;
}

double evaluate_loss(const model::ModelParams& params,
                     const data::EncodedBatch& batch,
                     loss::LossKind kind) {
  const auto cache = model::forward(params, batch);
  const auto [value, grads] = loss::batch_loss(batch.labels, cache.logits(), kind);
  return value;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 0.5)");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("batch_size must be >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
}

AdamState AdamState::zeros_like(const model::ModelParams& params) {
  return AdamState{model::ParamGrads::zeros_like(params),
                   model::ParamGrads::zeros_like(params), 0};
}

void adam_step(model::ModelParams& params, const model::ParamGrads& grads,
               AdamState& state, const TrainConfig& config) {
  ++state.step;
  const double bc1 =
      1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
  const double bc2 =
      1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update_tensor(params.layers[l].weight, grads.layers[l].weight,
                  state.m.layers[l].weight, state.v.layers[l].weight, config,
                  bc1, bc2);
    update_vector(params.layers[l].bias, grads.layers[l].bias,
                  state.m.layers[l].bias, state.v.layers[l].bias, config, bc1,
                  bc2);
  }
  for (std::size_t e = 0; e < params.embeddings.size(); ++e) {
    update_tensor(params.embeddings[e], grads.embeddings[e],
                  state.m.embeddings[e], state.v.embeddings[e], config, bc1,
                  bc2);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

std::pair<model::ModelParams, TrainHistory> train(
    const model::ModelParams& initial,
    std::span<const data::LtvExample> dataset, const TrainConfig& config,
    const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.size() < 2) {
    throw std::invalid_argument("train requires at least 2 examples");
  }

  const auto encoding =
      initial.config.architecture == model::Architecture::kLinear
          ? data::CategoricalEncoding::kOneHot
          : data::CategoricalEncoding::kIndices;
  const auto all = data::encode(dataset, initial.schema, encoding);

  // Seeded validation split.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(config.seed, 0x5e11, 0));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(
      config.validation_fraction * static_cast<double>(dataset.size())));
  n_val = std::max<std::size_t>(1, std::min(n_val, dataset.size() - 1));
  std::vector<std::size_t> val_rows(order.begin(),
                                    order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_rows(
      order.begin() + static_cast<long>(n_val), order.end());

  const auto val_batch = take_rows(all, val_rows);

  model::ModelParams params = initial;
  model::ModelParams best = params;
  AdamState state = AdamState::zeros_like(params);

  TrainHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::mt19937_64 epoch_rng(derive_seed(config.seed, epoch, 0xe90c));
    std::shuffle(train_rows.begin(), train_rows.end(), epoch_rng);

    double train_loss_sum = 0.0;
    std::size_t train_count = 0;
    for (std::size_t start = 0; start < train_rows.size();
         start += config.batch_size) {
      const std::size_t size =
          std::min(config.batch_size, train_rows.size() - start);
      const auto batch = take_rows(
          all, std::span<const std::size_t>(train_rows).subspan(start, size));
      const auto cache = model::forward(params, batch);
      const auto [value, grads] =
          loss::batch_loss(batch.labels, cache.logits(), config.loss_kind);
      if (!std::isfinite(value)) {
        throw TrainingAbort("non-finite training loss at epoch " +
                            std::to_string(epoch));
      }
      const auto param_grads = model::backward(params, cache, grads);
      adam_step(params, param_grads, state, config);
      train_loss_sum += value * static_cast<double>(size);
      train_count += size;
    }

    const double train_loss =
        train_loss_sum / static_cast<double>(train_count);
    const double val_loss = evaluate_loss(params, val_batch, config.loss_kind);
    if (!std::isfinite(val_loss)) {
      throw TrainingAbort("non-finite validation loss at epoch " +
                          std::to_string(epoch));
    }

    const EpochRecord record{epoch, train_loss, val_loss};
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best = params;
    }
    history.stopped_epoch = epoch;
    if (epoch - best_epoch >= config.early_stop_patience) {
      break;
    }
  }
  history.best_epoch = best_epoch;
  return {std::move(best), std::move(history)};
}

}  // namespace ltv::train
