#include "ltv/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace ltv::model {

namespace {

using nlohmann::json;

json tensor_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd tensor_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                    .get<double>();
    }
  }
  return m;
}

int embedding_dim_for(const ModelConfig& config,
                      const data::CategoricalFeature& feature) {
  auto it = config.embedding_dims.find(feature.name);
  if (it != config.embedding_dims.end()) return it->second;
  return default_embedding_dim(feature.vocabulary.size());
}

}  // namespace

int default_embedding_dim(std::size_t vocab_size) {
  const int dim = static_cast<int>(
      std::lround(6.0 * std::pow(static_cast<double>(vocab_size), 0.25)));
  return std::min(dim, 32);
}

int ModelParams::input_dim() const {
  int dim = static_cast<int>(schema.numeric_features.size());
  if (config.architecture == Architecture::kLinear) {
    for (const auto& c : schema.categorical_features) {
      dim += static_cast<int>(c.vocabulary.size());
    }
  } else {
    for (const auto& e : embeddings) dim += static_cast<int>(e.cols());
  }
  return dim;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& params) {
  ParamGrads grads;
  for (const auto& layer : params.layers) {
    grads.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(),
                                                  layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
  }
  for (const auto& e : params.embeddings) {
    grads.embeddings.push_back(Eigen::MatrixXd::Zero(e.rows(), e.cols()));
  }
  return grads;
}

ModelParams init_model(const ModelConfig& config,
                       const data::FeatureSchema& schema) {
  schema.validate();
  if (config.architecture == Architecture::kDnn && config.hidden_sizes.empty()) {
    throw std::invalid_argument("DNN architecture requires hidden_sizes");
  }
  if (config.architecture == Architecture::kLinear &&
      !config.hidden_sizes.empty()) {
    throw std::invalid_argument("LINEAR architecture takes no hidden_sizes");
  }
  for (const auto& [name, dim] : config.embedding_dims) {
    const bool known =
        std::any_of(schema.categorical_features.begin(),
                    schema.categorical_features.end(),
                    [&](const auto& c) { return c.name == name; });
    if (!known) {
      throw std::invalid_argument("embedding_dims names unknown feature: " +
                                  name);
    }
  }

  ModelParams params;
  params.config = config;
  params.schema = schema;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> emb_dist(-0.05, 0.05);

  if (config.architecture == Architecture::kDnn) {
    for (const auto& feature : schema.categorical_features) {
      const auto rows = static_cast<Eigen::Index>(feature.vocabulary.size());
      const auto cols =
          static_cast<Eigen::Index>(embedding_dim_for(config, feature));
      Eigen::MatrixXd table(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) table(r, c) = emb_dist(rng);
      }
      params.embeddings.push_back(std::move(table));
    }
  }

  std::vector<int> dims;
  dims.push_back(params.input_dim());
  for (int h : config.hidden_sizes) dims.push_back(h);
  dims.push_back(params.output_dim());

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> w_dist(-bound, bound);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = w_dist(rng);
    }
    params.layers.push_back({std::move(w), Eigen::VectorXd::Zero(fan_out)});
  }
  return params;
}

std::vector<loss::RawLogits> ForwardCache::logits() const {
  std::vector<loss::RawLogits> out(static_cast<std::size_t>(outputs.rows()));
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    auto& l = out[static_cast<std::size_t>(r)];
    if (is_ziln) {
      l.p_logit = outputs(r, 0);
      l.mu_raw = outputs(r, 1);
      l.sigma_raw = outputs(r, 2);
    } else {
      l.p_logit = outputs(r, 0);
      l.mu_raw = outputs(r, 0);
      l.sigma_raw = 0.0;
    }
  }
  return out;
}

ForwardCache forward(const ModelParams& params,
                     const data::EncodedBatch& batch) {
  const Eigen::Index rows = batch.numeric.rows();
  const auto n_cat =
      static_cast<Eigen::Index>(params.embeddings.size());
  if (batch.categorical_indices.cols() != n_cat) {
    throw std::invalid_argument(
        "batch categorical layout does not match model");
  }

  const Eigen::Index expected_numeric =
      params.config.architecture == Architecture::kLinear
          ? static_cast<Eigen::Index>(params.input_dim())
          : static_cast<Eigen::Index>(params.schema.numeric_features.size());
  if (batch.numeric.cols() != expected_numeric) {
    throw std::invalid_argument("batch column layout does not match schema");
  }

  ForwardCache cache;
  cache.is_ziln = params.config.head == Head::kZiln;
  cache.cat_indices = batch.categorical_indices;
  cache.input = Eigen::MatrixXd(rows, params.input_dim());
  cache.input.leftCols(batch.numeric.cols()) = batch.numeric;
  Eigen::Index col = batch.numeric.cols();
  for (Eigen::Index k = 0; k < n_cat; ++k) {
    const auto& table = params.embeddings[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < rows; ++r) {
      const int idx = batch.categorical_indices(r, k);
      if (idx < 0 || idx >= table.rows()) {
        throw std::invalid_argument("categorical id outside vocabulary");
      }
      cache.input.block(r, col, 1, table.cols()) = table.row(idx);
    }
    col += table.cols();
  }
  Eigen::MatrixXd h = cache.input;
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    h = ((h * layer.weight).rowwise() + layer.bias.transpose())
            .cwiseMax(0.0);
    cache.hidden.push_back(h);
  }
  const auto& out_layer = params.layers.back();
  cache.outputs =
      (h * out_layer.weight).rowwise() + out_layer.bias.transpose();
  return cache;
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const std::vector<loss::LossGrad>& loss_grads) {
  const Eigen::Index rows = cache.outputs.rows();
  if (static_cast<Eigen::Index>(loss_grads.size()) != rows) {
    throw std::invalid_argument("loss grads do not match cached forward");
  }
  Eigen::MatrixXd delta(rows, params.output_dim());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& g = loss_grads[static_cast<std::size_t>(r)];
    if (cache.is_ziln) {
      delta(r, 0) = g.d_p_logit;
      delta(r, 1) = g.d_mu_raw;
      delta(r, 2) = g.d_sigma_raw;
    } else {
      delta(r, 0) = g.d_p_logit + g.d_mu_raw;
    }
  }

  ParamGrads grads = ParamGrads::zeros_like(params);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& inputs =
        l == 0 ? cache.input : cache.hidden[l - 1];
    grads.layers[l].weight = inputs.transpose() * delta;
    grads.layers[l].bias = delta.colwise().sum();
    if (l == 0) {
      delta = delta * params.layers[l].weight.transpose();
    } else {
      delta = (delta * params.layers[l].weight.transpose())
                  .cwiseProduct((cache.hidden[l - 1].array() > 0.0)
                                    .cast<double>()
                                    .matrix());
    }
  }

  // delta now carries gradients with respect to the concatenated input row.
  Eigen::Index col = static_cast<Eigen::Index>(
      params.schema.numeric_features.size());
  for (std::size_t k = 0; k < params.embeddings.size(); ++k) {
    const auto width = params.embeddings[k].cols();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const int idx = cache.cat_indices(r, static_cast<Eigen::Index>(k));
      grads.embeddings[k].row(idx) += delta.block(r, col, 1, width);
    }
    col += width;
  }
  return grads;
}

std::vector<PredictionRow> predict(const ModelParams& params,
                                   const data::EncodedBatch& batch) {
  const auto cache = forward(params, batch);
  const auto logits = cache.logits();
  std::vector<PredictionRow> rows(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    PredictionRow& row = rows[i];
    if (params.config.head == Head::kZiln) {
      const auto ziln = loss::activate(logits[i]);
      row.p_return = ziln.p;
      row.mu = ziln.lognormal.mu;
      row.sigma = ziln.lognormal.sigma;
      row.mean_ltv = dist::ziln_mean(ziln);
    } else {
      row.p_return = loss::sigmoid(logits[i].p_logit);
      row.mu = logits[i].mu_raw;
      row.sigma = 0.0;
      row.mean_ltv = logits[i].mu_raw;
    }
  }
  return rows;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["config"] = {
      {"architecture",
       params.config.architecture == Architecture::kLinear ? "linear" : "dnn"},
      {"hidden_sizes", params.config.hidden_sizes},
      {"head", params.config.head == Head::kZiln ? "ziln" : "scalar"},
      {"embedding_dims", params.config.embedding_dims},
      {"seed", params.config.seed}};
  json schema;
  schema["numeric_features"] = params.schema.numeric_features;
  schema["categorical_features"] = json::array();
  for (const auto& c : params.schema.categorical_features) {
    schema["categorical_features"].push_back(
        {{"name", c.name}, {"vocabulary", c.vocabulary}});
  }
  schema["label_name"] = params.schema.label_name;
  if (params.schema.first_purchase_value_name) {
    schema["first_purchase_value_name"] =
        *params.schema.first_purchase_value_name;
  }
  j["schema"] = std::move(schema);
  j["layers"] = json::array();
  for (const auto& layer : params.layers) {
    json bias = json::array();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      bias.push_back(layer.bias(i));
    }
    j["layers"].push_back(
        {{"weight", tensor_to_json(layer.weight)}, {"bias", std::move(bias)}});
  }
  j["embeddings"] = json::array();
  for (const auto& e : params.embeddings) {
    j["embeddings"].push_back(tensor_to_json(e));
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint: " + path);
  }
  out << j.dump() << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path);
  }
  json j;
  in >> j;
  if (j.value("format_version", 0) != 1) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  ModelParams params;
  const auto& jc = j.at("config");
  params.config.architecture = jc.at("architecture").get<std::string>() ==
                                       "linear"
                                   ? Architecture::kLinear
                                   : Architecture::kDnn;
  params.config.hidden_sizes = jc.at("hidden_sizes").get<std::vector<int>>();
  params.config.head = jc.at("head").get<std::string>() == "ziln"
                           ? Head::kZiln
                           : Head::kScalar;
  params.config.embedding_dims =
      jc.at("embedding_dims").get<std::map<std::string, int>>();
  params.config.seed = jc.at("seed").get<std::uint64_t>();
  const auto& js = j.at("schema");
  params.schema.numeric_features =
      js.at("numeric_features").get<std::vector<std::string>>();
  for (const auto& c : js.at("categorical_features")) {
    params.schema.categorical_features.push_back(
        {c.at("name").get<std::string>(),
         c.at("vocabulary").get<std::vector<std::string>>()});
  }
  params.schema.label_name = js.at("label_name").get<std::string>();
  if (js.contains("first_purchase_value_name")) {
    params.schema.first_purchase_value_name =
        js["first_purchase_value_name"].get<std::string>();
  }
  for (const auto& jl : j.at("layers")) {
    DenseLayer layer;
    layer.weight = tensor_from_json(jl.at("weight"));
    const auto& jb = jl.at("bias");
    layer.bias = Eigen::VectorXd(static_cast<Eigen::Index>(jb.size()));
    for (std::size_t i = 0; i < jb.size(); ++i) {
      layer.bias(static_cast<Eigen::Index>(i)) = jb[i].get<double>();
    }
    params.layers.push_back(std::move(layer));
  }
  for (const auto& je : j.at("embeddings")) {
    params.embeddings.push_back(tensor_from_json(je));
  }
  return params;
}

}  // namespace ltv::model
