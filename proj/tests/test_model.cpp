#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "ltv/data.hpp"
#include "ltv/loss.hpp"
#include "ltv/model.hpp"

using namespace ltv;

namespace {

data::FeatureSchema small_schema() {
  data::FeatureSchema schema;
  schema.numeric_features = {"f0", "f1"};
  schema.categorical_features = {{"cat", {"<OOV>", "x", "y"}}};
  return schema;
}

data::EncodedBatch random_batch(const data::FeatureSchema& schema,
                                data::CategoricalEncoding encoding,
                                std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> cat(0, 2);
  std::bernoulli_distribution zero(0.4);
  std::vector<data::LtvExample> examples;
  for (std::size_t i = 0; i < rows; ++i) {
    data::LtvExample ex;
    ex.id = "r" + std::to_string(i);
    ex.numerics = {u(rng), u(rng)};
    ex.categoricals = {cat(rng)};
    ex.label = zero(rng) ? 0.0 : std::exp(u(rng));
    examples.push_back(ex);
  }
  return data::encode(examples, schema, encoding);
}

// Mean ZILN batch loss for the current parameters; used by the
// finite-difference check.
double mean_loss(const model::ModelParams& params,
                 const data::EncodedBatch& batch) {
  const auto cache = model::forward(params, batch);
  return loss::batch_loss(batch.labels, cache.logits(), loss::LossKind::kZiln)
      .first;
}

}  // namespace

TEST_CASE("init_model determinism and shapes") {
  const auto schema = small_schema();

  SUBCASE("same seed gives identical parameters") {
    model::ModelConfig config;
    config.architecture = model::Architecture::kDnn;
    config.hidden_sizes = {4};
    config.seed = 5;
    const auto a = model::init_model(config, schema);
    const auto b = model::init_model(config, schema);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      CHECK(a.layers[l].weight == b.layers[l].weight);
      CHECK(a.layers[l].bias == b.layers[l].bias);
    }
    for (std::size_t e = 0; e < a.embeddings.size(); ++e) {
      CHECK(a.embeddings[e] == b.embeddings[e]);
    }
  }
  SUBCASE("linear shape") {
    model::ModelConfig config;  // LINEAR ZILN
    const auto params = model::init_model(config, schema);
    REQUIRE(params.layers.size() == 1);
    CHECK(params.layers[0].weight.rows() == 5);  // 2 numeric + one-hot 3
    CHECK(params.layers[0].weight.cols() == 3);
    CHECK(params.embeddings.empty());
  }
  SUBCASE("dnn shapes per the two-hidden-layer default") {
    data::FeatureSchema dense_schema;
    for (int i = 0; i < 10; ++i) {
      dense_schema.numeric_features.push_back("n" + std::to_string(i));
    }
    model::ModelConfig config;
    config.architecture = model::Architecture::kDnn;
    config.hidden_sizes = {64, 32};
    const auto params = model::init_model(config, dense_schema);
    REQUIRE(params.layers.size() == 3);
    CHECK(params.layers[0].weight.rows() == 10);
    CHECK(params.layers[0].weight.cols() == 64);
    CHECK(params.layers[1].weight.rows() == 64);
    CHECK(params.layers[1].weight.cols() == 32);
    CHECK(params.layers[2].weight.rows() == 32);
    CHECK(params.layers[2].weight.cols() == 3);
  }
  SUBCASE("unknown embedding feature rejected") {
    model::ModelConfig config;
    config.architecture = model::Architecture::kDnn;
    config.hidden_sizes = {4};
    config.embedding_dims = {{"nope", 3}};
    CHECK_THROWS_AS(model::init_model(config, schema), std::invalid_argument);
  }
}

TEST_CASE("forward with zero weights yields the neutral prediction") {
  const auto schema = small_schema();
  model::ModelConfig config;
  auto params = model::init_model(config, schema);
  params.layers[0].weight.setZero();
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kOneHot, 3, 1);
  const auto rows = model::predict(params, batch);
  for (const auto& row : rows) {
    CHECK(row.p_return == doctest::Approx(0.5));
    CHECK(row.mu == doctest::Approx(0.0));
    CHECK(row.sigma ==
          doctest::Approx(std::log(2.0) + loss::kSigmaFloor).epsilon(1e-12));
  }
}

TEST_CASE("linear head equals explicit affine map") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.seed = 9;
  const auto params = model::init_model(config, schema);
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kOneHot, 6, 2);
  const auto cache = model::forward(params, batch);
  for (Eigen::Index r = 0; r < 6; ++r) {
    const Eigen::VectorXd expected =
        params.layers[0].weight.transpose() * batch.numeric.row(r).transpose() +
        params.layers[0].bias;
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(cache.outputs(r, c) == doctest::Approx(expected(c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("batch forward equals per-example forward") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.architecture = model::Architecture::kDnn;
  config.hidden_sizes = {4};
  config.seed = 13;
  const auto params = model::init_model(config, schema);
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kIndices, 8, 3);
  const auto full = model::forward(params, batch);
  for (Eigen::Index r = 0; r < 8; ++r) {
    data::EncodedBatch single;
    single.numeric = batch.numeric.row(r);
    single.categorical_indices = batch.categorical_indices.row(r);
    single.labels = {batch.labels[static_cast<std::size_t>(r)]};
    const auto one = model::forward(params, single);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(one.outputs(0, c) ==
            doctest::Approx(full.outputs(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward matches finite differences end to end") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.architecture = model::Architecture::kDnn;
  config.hidden_sizes = {4};
  config.seed = 21;
  auto params = model::init_model(config, schema);
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kIndices, 8, 4);

  const auto cache = model::forward(params, batch);
  const auto [value, loss_grads] =
      loss::batch_loss(batch.labels, cache.logits(), loss::LossKind::kZiln);
  const auto grads = model::backward(params, cache, loss_grads);

  const double h = 1e-5;
  auto check_entry = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + h;
    const double up = mean_loss(params, batch);
    slot = saved - h;
    const double down = mean_loss(params, batch);
    slot = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double abs_err = std::abs(analytic - numeric);
    const double denom = std::max(std::abs(analytic), std::abs(numeric));
    CHECK((abs_err < 1e-8 || abs_err / denom < 1e-4));
  };

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        check_entry(layer.weight(r, c), grads.layers[l].weight(r, c));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      check_entry(layer.bias(i), grads.layers[l].bias(i));
    }
  }
  for (std::size_t e = 0; e < params.embeddings.size(); ++e) {
    auto& table = params.embeddings[e];
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      for (Eigen::Index c = 0; c < table.cols(); ++c) {
        check_entry(table(r, c), grads.embeddings[e](r, c));
      }
    }
  }
}

TEST_CASE("zero loss gradient gives zero parameter gradient") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.architecture = model::Architecture::kDnn;
  config.hidden_sizes = {4};
  const auto params = model::init_model(config, schema);
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kIndices, 4, 6);
  const auto cache = model::forward(params, batch);
  const std::vector<loss::LossGrad> zero_grads(4);
  const auto grads = model::backward(params, cache, zero_grads);
  for (const auto& layer : grads.layers) {
    CHECK(layer.weight.cwiseAbs().maxCoeff() == 0.0);
    CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
  }
  for (const auto& table : grads.embeddings) {
    CHECK(table.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("permutation equivariance") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.architecture = model::Architecture::kDnn;
  config.hidden_sizes = {4};
  config.seed = 33;
  const auto params = model::init_model(config, schema);
  auto batch = random_batch(schema, data::CategoricalEncoding::kIndices, 6, 7);
  const auto rows = model::predict(params, batch);
  const auto loss_before = mean_loss(params, batch);

  // Reverse the batch.
  data::EncodedBatch reversed = batch;
  for (Eigen::Index r = 0; r < 6; ++r) {
    reversed.numeric.row(r) = batch.numeric.row(5 - r);
    reversed.categorical_indices.row(r) = batch.categorical_indices.row(5 - r);
    reversed.labels[static_cast<std::size_t>(r)] =
        batch.labels[static_cast<std::size_t>(5 - r)];
  }
  const auto rows_rev = model::predict(params, reversed);
  for (int r = 0; r < 6; ++r) {
    CHECK(rows_rev[static_cast<std::size_t>(r)].mean_ltv ==
          doctest::Approx(rows[static_cast<std::size_t>(5 - r)].mean_ltv));
  }
  CHECK(mean_loss(params, reversed) ==
        doctest::Approx(loss_before).epsilon(1e-12));
}

TEST_CASE("scalar head prediction") {
  data::FeatureSchema schema;
  schema.numeric_features = {"f0"};
  model::ModelConfig config;
  config.head = model::Head::kScalar;
  config.seed = 3;
  const auto params = model::init_model(config, schema);
  REQUIRE(params.layers[0].weight.cols() == 1);

  std::vector<data::LtvExample> examples(2);
  examples[0].numerics = {1.0};
  examples[1].numerics = {-2.0};
  const auto batch =
      data::encode(examples, schema, data::CategoricalEncoding::kOneHot);
  const auto rows = model::predict(params, batch);
  const double w = params.layers[0].weight(0, 0);
  CHECK(rows[0].mean_ltv == doctest::Approx(w).epsilon(1e-12));
  CHECK(rows[0].p_return == doctest::Approx(loss::sigmoid(w)).epsilon(1e-12));
  CHECK(rows[1].mean_ltv == doctest::Approx(-2.0 * w).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto schema = small_schema();
  model::ModelConfig config;
  config.architecture = model::Architecture::kDnn;
  config.hidden_sizes = {4, 3};
  config.seed = 1234;
  const auto params = model::init_model(config, schema);
  const std::string path = "/tmp/ltv_test_checkpoint.json";
  model::save_checkpoint(params, path);
  const auto loaded = model::load_checkpoint(path);
  std::remove(path.c_str());

  REQUIRE(loaded.layers.size() == params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    CHECK(loaded.layers[l].weight == params.layers[l].weight);
    CHECK(loaded.layers[l].bias == params.layers[l].bias);
  }
  REQUIRE(loaded.embeddings.size() == params.embeddings.size());
  for (std::size_t e = 0; e < params.embeddings.size(); ++e) {
    CHECK(loaded.embeddings[e] == params.embeddings[e]);
  }
  const auto batch =
      random_batch(schema, data::CategoricalEncoding::kIndices, 5, 8);
  const auto a = model::predict(params, batch);
  const auto b = model::predict(loaded, batch);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_ltv == b[i].mean_ltv);
  }
}

TEST_CASE("default embedding dimension heuristic") {
  CHECK(model::default_embedding_dim(16) == 12);
  CHECK(model::default_embedding_dim(1000000) == 32);  // capped
}
