#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ltv::metrics {

struct CurvePoint {
  double x;  // cumulative fraction of customers
  double y;  // cumulative fraction of total value
};

struct GiniResult {
  double gini;
  std::vector<CurvePoint> curve;  // n+1 points from (0,0) to (1,1)
};

struct GiniReport {
  double label_gini = 0.0;
  double model_gini = 0.0;
  std::optional<double> baseline_gini;
  double normalized_gini = 0.0;  // model_gini / label_gini, unclamped
  std::vector<CurvePoint> label_curve;
  std::vector<CurvePoint> model_curve;
};

struct DecileRow {
  int decile_index;  // 1 = highest predictions
  double mean_prediction;
  double mean_label;
  std::size_t count;
};

using DecileTable = std::vector<DecileRow>;

// Pearson correlation of average-tie-adjusted ranks. Throws when either
// vector is constant.
double spearman(std::span<const double> a, std::span<const double> b);

// Lorenz/gain curve Gini: stable descending sort by key, cumulative value
// share against cumulative customer share, trapezoid area over all n+1
// points, gini = 2 * (area - 0.5). Values must be non-negative with a
// positive total.
GiniResult gini(std::span<const double> sort_key,
                std::span<const double> value);

// Label, model, and optional baseline Gini plus the model/label ratio.
GiniReport normalized_gini(
    std::span<const double> predictions, std::span<const double> labels,
    std::span<const double> first_purchase_values = {});

// Ranks by prediction descending (stable ties) and splits into 10 contiguous
// groups; the n mod 10 larger groups take the highest-prediction deciles.
DecileTable decile_table(std::span<const double> predictions,
                         std::span<const double> labels);

// Sum over the 10 deciles of |mean_prediction - mean_label| / mean_label.
// Note the conventional name notwithstanding, the sum is not divided by 10;
// divide by 10 if comparing against an externally reported decile MAPE.
double decile_mape(const DecileTable& table);

// Mann-Whitney U with half-credit for ties, normalized by #pos * #neg.
double auc_roc(std::span<const int> labels, std::span<const double> scores);

// Non-interpolated average precision with stable tie order.
double auc_pr(std::span<const int> labels, std::span<const double> scores);

// Overlap of the top-ceil(fraction*n) sets ranked by label and by prediction.
double hit_rate(std::span<const double> predictions,
                std::span<const double> labels, double top_fraction);

// Sum of (donation - cost) over customers whose predicted value exceeds cost.
double total_profit(std::span<const double> predicted_value,
                    std::span<const double> donation, double cost);

void save_curve_csv(std::span<const CurvePoint> curve, const std::string& path);
void save_decile_csv(const DecileTable& table, const std::string& path);

}  // namespace ltv::metrics
