// Command-line entry point: featurize transactions, train models, evaluate
// predictions, and run the estimator efficiency simulation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltv/data.hpp"
#include "ltv/metrics.hpp"
#include "ltv/model.hpp"
#include "ltv/sim.hpp"
#include "ltv/text.hpp"
#include "ltv/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ltv;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTrainingAbort = 3;

void write_resolved_config(const CLI::App& app, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "config_resolved.ini");
  out << app.config_to_str(true, true);
}

loss::LossKind parse_loss(const std::string& name) {
  if (name == "ziln") return loss::LossKind::kZiln;
  if (name == "mse") return loss::LossKind::kMse;
  if (name == "bce") return loss::LossKind::kBce;
  throw CLI::ValidationError("--loss", "unknown loss: " + name);
}

struct EvalMetrics {
  std::map<std::string, double> values;  // stable (sorted) key order
  metrics::GiniReport gini_report;
  metrics::DecileTable deciles;
  bool decile_mape_defined = false;
};

EvalMetrics compute_eval_metrics(const std::vector<model::PredictionRow>& rows,
                                 const std::vector<data::LtvExample>& examples,
                                 std::optional<double> cost) {
  EvalMetrics result;
  std::vector<double> preds, labels, fpv;
  std::vector<int> binary;
  std::vector<double> scores;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    preds.push_back(rows[i].mean_ltv);
    labels.push_back(examples[i].label);
    fpv.push_back(examples[i].first_purchase_value);
    binary.push_back(examples[i].label > 0.0 ? 1 : 0);
    scores.push_back(rows[i].p_return);
  }

  try {
    result.values["spearman"] = metrics::spearman(preds, labels);
  } catch (const std::invalid_argument&) {
    // Constant predictions or labels leave rank correlation undefined.
  }
  result.gini_report = metrics::normalized_gini(preds, labels, fpv);
  result.values["label_gini"] = result.gini_report.label_gini;
  result.values["model_gini"] = result.gini_report.model_gini;
  if (result.gini_report.baseline_gini) {
    result.values["baseline_gini"] = *result.gini_report.baseline_gini;
  }
  result.values["normalized_gini"] = result.gini_report.normalized_gini;

  try {
    result.deciles = metrics::decile_table(preds, labels);
    result.values["decile_mape"] = metrics::decile_mape(result.deciles);
    result.decile_mape_defined = true;
  } catch (const std::invalid_argument&) {
    // Fewer than 10 customers, or a decile with zero mean label, leaves the
    // decile diagnostics undefined.
  }
  try {
    result.values["auc_roc"] = metrics::auc_roc(binary, scores);
    result.values["auc_pr"] = metrics::auc_pr(binary, scores);
  } catch (const std::invalid_argument&) {
    // Single-class labels leave the classifier metrics undefined.
  }
  if (cost) {
    result.values["total_profit"] = metrics::total_profit(preds, labels, *cost);
  }
  return result;
}

void write_report(const std::map<std::string, double>& values,
                  bool mape_defined, const std::string& path) {
  std::ofstream out(path);
  for (const auto& [key, value] : values) {
    out << key << "=" << text::format_double(value) << "\n";
  }
  if (!mape_defined) {
    out << "decile_mape=undefined\n";
  }
}

void write_predictions(const std::vector<model::PredictionRow>& rows,
                       const std::vector<data::LtvExample>& examples,
                       const std::string& path) {
  std::ofstream out(path);
  out << "id,p_return,mu,sigma,mean_ltv,label\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << examples[i].id << "," << text::format_double(rows[i].p_return)
        << "," << text::format_double(rows[i].mu) << ","
        << text::format_double(rows[i].sigma) << ","
        << text::format_double(rows[i].mean_ltv) << ","
        << text::format_double(examples[i].label) << "\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Zero-inflated lognormal LTV modeling toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for run outputs")
      ->capture_default_str();

  // featurize
  auto* featurize = app.add_subcommand(
      "featurize", "Build per-customer examples from a transaction log");
  std::string transactions_path, examples_out, schema_out;
  std::string cohort_start = "2012-03-01", cohort_end = "2012-07-01";
  int horizon = 365;
  featurize->add_option("--transactions", transactions_path)->required();
  featurize->add_option("--examples", examples_out, "Output examples CSV")
      ->required();
  featurize->add_option("--schema", schema_out, "Output schema JSON")
      ->required();
  featurize->add_option("--cohort-start", cohort_start)->capture_default_str();
  featurize->add_option("--cohort-end", cohort_end)->capture_default_str();
  featurize->add_option("--horizon", horizon, "Label horizon in days")
      ->capture_default_str();

  // train
  auto* train_cmd =
      app.add_subcommand("train", "Train a model on an examples CSV");
  std::string train_examples, train_schema, model_out, log_path;
  std::string loss_name = "ziln", arch_name = "linear";
  std::vector<int> hidden_sizes{64, 32};
  train::TrainConfig tconfig;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  train_cmd->add_option("--examples", train_examples)->required();
  train_cmd->add_option("--schema", train_schema)->required();
  train_cmd->add_option("--model-out", model_out)->required();
  train_cmd->add_option("--log", log_path, "Epoch log path (JSON lines)");
  train_cmd->add_option("--loss", loss_name, "ziln|mse|bce")
      ->capture_default_str();
  train_cmd->add_option("--arch", arch_name, "linear|dnn")
      ->capture_default_str();
  train_cmd->add_option("--hidden", hidden_sizes, "DNN hidden layer sizes")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", tconfig.batch_size)
      ->capture_default_str();
  train_cmd->add_option("--lr", tconfig.learning_rate)->capture_default_str();
  train_cmd->add_option("--max-epochs", tconfig.max_epochs)
      ->capture_default_str();
  train_cmd->add_option("--patience", tconfig.early_stop_patience)
      ->capture_default_str();
  train_cmd->add_option("--val-fraction", tconfig.validation_fraction)
      ->capture_default_str();
  train_cmd->add_option("--seed", seed)->capture_default_str();
  train_cmd->add_option("--repeats", repeats)->capture_default_str();

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "Score a trained model on examples");
  std::string model_in, eval_examples;
  double cost = -1.0;
  evaluate->add_option("--model-in", model_in)->required();
  evaluate->add_option("--examples", eval_examples)->required();
  evaluate->add_option("--cost", cost,
                       "Per-contact cost for the profit rule (optional)");

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Estimator relative-efficiency Monte Carlo study");
  std::vector<double> sigmas{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::size_t sim_n = 10000, sim_reps = 2000;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "efficiency.csv";
  simulate->add_option("--sigmas", sigmas)->capture_default_str();
  simulate->add_option("--n", sim_n)->capture_default_str();
  simulate->add_option("--reps", sim_reps)->capture_default_str();
  simulate->add_option("--seed", sim_seed)->capture_default_str();
  simulate->add_option("--out", sim_out, "Output CSV path")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  write_resolved_config(app, out_dir);

  if (*featurize) {
    const auto records = data::load_transactions(transactions_path);
    const auto [schema, examples] =
        data::featurize_transactions(records, cohort_start, cohort_end,
                                     horizon);
    data::save_schema(schema, schema_out);
    data::save_examples(examples, schema, examples_out);
    return 0;
  }

  if (*train_cmd) {
    const auto schema = data::load_schema(train_schema);
    const auto examples = data::load_examples(train_examples, schema);

    model::ModelConfig mconfig;
    mconfig.architecture = arch_name == "dnn" ? model::Architecture::kDnn
                                              : model::Architecture::kLinear;
    if (arch_name != "dnn" && arch_name != "linear") {
      throw CLI::ValidationError("--arch", "unknown architecture: " + arch_name);
    }
    tconfig.loss_kind = parse_loss(loss_name);
    mconfig.head = tconfig.loss_kind == loss::LossKind::kZiln
                       ? model::Head::kZiln
                       : model::Head::kScalar;
    if (mconfig.architecture == model::Architecture::kDnn) {
      mconfig.hidden_sizes = hidden_sizes;
    }

    for (std::size_t r = 0; r < repeats; ++r) {
      mconfig.seed = train::derive_seed(seed, 0xd0de1, r);
      tconfig.seed = train::derive_seed(seed, 0x7a41, r);
      const auto initial = model::init_model(mconfig, schema);

      std::string log_file = log_path;
      if (log_file.empty()) {
        log_file = (fs::path(out_dir) /
                    ("train_log_r" + std::to_string(r) + ".jsonl"))
                       .string();
      } else if (repeats > 1) {
        log_file += ".r" + std::to_string(r);
      }
      std::ofstream log(log_file);

      const auto [best, history] = train::train(
          initial, examples, tconfig, [&](const train::EpochRecord& e) {
            log << "{\"epoch\":" << e.epoch
                << ",\"train_loss\":" << text::format_double(e.train_loss)
                << ",\"val_loss\":" << text::format_double(e.val_loss)
                << "}\n";
          });

      std::string path = model_out;
      if (repeats > 1) {
        const fs::path p(model_out);
        path = (p.parent_path() /
                (p.stem().string() + "_r" + std::to_string(r) +
                 p.extension().string()))
                   .string();
      }
      model::save_checkpoint(best, path);
      std::cerr << "trained " << path << ": best epoch " << history.best_epoch
                << " of " << history.stopped_epoch << "\n";
    }
    return 0;
  }

  if (*evaluate) {
    const auto params = model::load_checkpoint(model_in);
    const auto examples = data::load_examples(eval_examples, params.schema);
    const auto encoding =
        params.config.architecture == model::Architecture::kLinear
            ? data::CategoricalEncoding::kOneHot
            : data::CategoricalEncoding::kIndices;
    const auto batch = data::encode(examples, params.schema, encoding);
    const auto rows = model::predict(params, batch);

    std::optional<double> cost_opt;
    if (evaluate->count("--cost")) cost_opt = cost;
    const auto eval = compute_eval_metrics(rows, examples, cost_opt);

    fs::create_directories(out_dir);
    write_report(eval.values, eval.decile_mape_defined,
                 (fs::path(out_dir) / "report.txt").string());
    metrics::save_curve_csv(eval.gini_report.model_curve,
                            (fs::path(out_dir) / "gain_curve.csv").string());
    metrics::save_decile_csv(eval.deciles,
                             (fs::path(out_dir) / "deciles.csv").string());
    write_predictions(rows, examples,
                      (fs::path(out_dir) / "predictions.csv").string());
    return 0;
  }

  if (*simulate) {
    const auto results =
        sim::run_efficiency_study(sigmas, sim_n, sim_reps, sim_seed);
    sim::save_efficiency_csv(results, sim_out);
    return 0;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const train::TrainingAbort& e) {
    std::cerr << "training abort: " << e.what() << "\n";
    return kExitTrainingAbort;
  } catch (const data::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
