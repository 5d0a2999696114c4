#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ltv/data.hpp"
#include "ltv/loss.hpp"

namespace ltv::model {

enum class Architecture { kLinear, kDnn };
enum class Head { kZiln, kScalar };

struct ModelConfig {
  Architecture architecture = Architecture::kLinear;
  std::vector<int> hidden_sizes;  // required non-empty iff architecture = DNN
  Head head = Head::kZiln;
  std::map<std::string, int> embedding_dims;  // optional per-feature override
  std::uint64_t seed = 0;
};

// Standard heuristic: round(6 * vocab^{1/4}), capped at 32.
int default_embedding_dim(std::size_t vocab_size);

struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::VectorXd bias;    // out
};

struct ModelParams {
  ModelConfig config;
  data::FeatureSchema schema;
  std::vector<DenseLayer> layers;
  // One table per categorical feature (DNN only); rows = vocabulary size.
  std::vector<Eigen::MatrixXd> embeddings;

  int input_dim() const;
  int output_dim() const { return config.head == Head::kZiln ? 3 : 1; }
};

// Gradients with the same tensor shapes as ModelParams.
struct ParamGrads {
  std::vector<DenseLayer> layers;
  std::vector<Eigen::MatrixXd> embeddings;

  static ParamGrads zeros_like(const ModelParams& params);
};

// Glorot-uniform dense weights, zero biases, embeddings uniform in
// [-0.05, 0.05]; fully determined by config.seed.
ModelParams init_model(const ModelConfig& config,
                       const data::FeatureSchema& schema);

// Forward-pass intermediates kept for backpropagation.
struct ForwardCache {
  Eigen::MatrixXd input;                // rows x input_dim
  std::vector<Eigen::MatrixXd> hidden;  // post-ReLU activations
  Eigen::MatrixXd outputs;              // rows x output_dim
  Eigen::MatrixXi cat_indices;          // rows x n_categorical

  // Raw pre-activation logits per row. SCALAR-head outputs are mirrored into
  // both p_logit and mu_raw so either baseline loss can read its slot.
  std::vector<loss::RawLogits> logits() const;
  bool is_ziln = true;
};

ForwardCache forward(const ModelParams& params, const data::EncodedBatch& batch);

// Exact reverse-mode gradients of the (already 1/batch-scaled) per-example
// loss gradients with respect to every parameter. Embedding rows not touched
// by the batch get zero gradient.
ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const std::vector<loss::LossGrad>& loss_grads);

struct PredictionRow {
  double p_return = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double mean_ltv = 0.0;
};

std::vector<PredictionRow> predict(const ModelParams& params,
                                   const data::EncodedBatch& batch);

// Versioned JSON checkpoint holding config, schema, and all tensors.
// save -> load -> predict is bit-exact.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ltv::model
