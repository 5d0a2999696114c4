#include "ltv/metrics.hpp"

#include "ltv/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ltv::metrics {

namespace {

// Indices sorted by key descending; ties keep input order.
std::vector<std::size_t> stable_desc_order(std::span<const double> key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) {
    throw std::invalid_argument("correlation undefined for constant input");
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman requires equal lengths >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

GiniResult gini(std::span<const double> sort_key,
                std::span<const double> value) {
  if (sort_key.size() != value.size() || value.empty()) {
    throw std::invalid_argument("gini requires equal non-empty vectors");
  }
  double total = 0.0;
  for (double v : value) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument("gini values must be non-negative");
    }
    total += v;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("gini requires a positive total value");
  }
  const auto order = stable_desc_order(sort_key);
  const auto n = static_cast<double>(value.size());

  GiniResult result;
  result.curve.reserve(value.size() + 1);
  result.curve.push_back({0.0, 0.0});
  double cum = 0.0;
  double area = 0.0;
  double prev_y = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += value[order[i]];
    const double y = cum / total;
    result.curve.push_back({static_cast<double>(i + 1) / n, y});
    area += (prev_y + y) / (2.0 * n);
    prev_y = y;
  }
  result.gini = 2.0 * (area - 0.5);
  return result;
}

GiniReport normalized_gini(std::span<const double> predictions,
                           std::span<const double> labels,
                           std::span<const double> first_purchase_values) {
  GiniReport report;
  auto label_result = gini(labels, labels);
  auto model_result = gini(predictions, labels);
  report.label_gini = label_result.gini;
  report.model_gini = model_result.gini;
  report.normalized_gini = report.model_gini / report.label_gini;
  report.label_curve = std::move(label_result.curve);
  report.model_curve = std::move(model_result.curve);
  if (!first_purchase_values.empty()) {
    report.baseline_gini = gini(first_purchase_values, labels).gini;
  }
  return report;
}

DecileTable decile_table(std::span<const double> predictions,
                         std::span<const double> labels) {
  if (predictions.size() != labels.size() || predictions.size() < 10) {
    throw std::invalid_argument("decile_table requires n >= 10");
  }
  const auto order = stable_desc_order(predictions);
  const std::size_t n = order.size();
  const std::size_t big = (n + 9) / 10;
  const std::size_t small = n / 10;
  const std::size_t n_big = n % 10;

  DecileTable table;
  std::size_t pos = 0;
  for (int d = 0; d < 10; ++d) {
    const std::size_t size = d < static_cast<int>(n_big) ? big : small;
    double sum_pred = 0.0, sum_label = 0.0;
    for (std::size_t i = pos; i < pos + size; ++i) {
      sum_pred += predictions[order[i]];
      sum_label += labels[order[i]];
    }
    table.push_back({d + 1, sum_pred / static_cast<double>(size),
                     sum_label / static_cast<double>(size), size});
    pos += size;
  }
  return table;
}

double decile_mape(const DecileTable& table) {
  double sum = 0.0;
  for (const auto& row : table) {
    if (row.mean_label <= 0.0) {
      throw std::invalid_argument(
          "decile_mape undefined: decile " + std::to_string(row.decile_index) +
          " has mean label <= 0");
    }
    sum += std::abs(row.mean_prediction - row.mean_label) / row.mean_label;
  }
  return sum;
}

double auc_roc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size() || labels.empty()) {
    throw std::invalid_argument("auc_roc requires equal non-empty vectors");
  }
  // Rank-sum form: U = sum of positive ranks - P(P+1)/2, with average ranks
  // granting half credit for ties.
  const auto ranks = average_ranks(scores);
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) {
      pos_rank_sum += ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc_roc requires both classes present");
  }
  const double u = pos_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_pr(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size() || labels.empty()) {
    throw std::invalid_argument("auc_pr requires equal non-empty vectors");
  }
  const std::size_t n_pos = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
  if (n_pos == 0) {
    throw std::invalid_argument("auc_pr requires at least one positive");
  }
  const auto order = stable_desc_order(scores);
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0) {
      ++tp;
      const double precision =
          static_cast<double>(tp) / static_cast<double>(rank + 1);
      ap += precision / static_cast<double>(n_pos);
    }
  }
  return ap;
}

double hit_rate(std::span<const double> predictions,
                std::span<const double> labels, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) {
    throw std::invalid_argument("top_fraction must lie in (0,1)");
  }
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw std::invalid_argument("hit_rate requires equal non-empty vectors");
  }
  const auto k = static_cast<std::size_t>(
      std::ceil(top_fraction * static_cast<double>(predictions.size())));
  const auto by_pred = stable_desc_order(predictions);
  const auto by_label = stable_desc_order(labels);
  std::vector<char> in_pred_top(predictions.size(), 0);
  for (std::size_t i = 0; i < k; ++i) in_pred_top[by_pred[i]] = 1;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += in_pred_top[by_label[i]];
  return static_cast<double>(hits) / static_cast<double>(k);
}

double total_profit(std::span<const double> predicted_value,
                    std::span<const double> donation, double cost) {
  if (predicted_value.size() != donation.size()) {
    throw std::invalid_argument("total_profit length mismatch");
  }
  if (cost < 0.0) {
    throw std::invalid_argument("cost must be >= 0");
  }
  double profit = 0.0;
  for (std::size_t i = 0; i < donation.size(); ++i) {
    if (donation[i] < 0.0) {
      throw std::invalid_argument("donations must be non-negative");
    }
    if (predicted_value[i] > cost) {
      profit += donation[i] - cost;
    }
  }
  return profit;
}

void save_curve_csv(std::span<const CurvePoint> curve,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write curve CSV: " + path);
  }
  out << "fraction_customers,fraction_value\n";
  for (const auto& p : curve) {
    out << text::format_double(p.x) << "," << text::format_double(p.y) << "\n";
  }
}

void save_decile_csv(const DecileTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write decile CSV: " + path);
  }
  out << "decile,mean_prediction,mean_label,count\n";
  for (const auto& row : table) {
    out << row.decile_index << "," << text::format_double(row.mean_prediction) << ","
        << text::format_double(row.mean_label) << "," << row.count << "\n";
  }
}

}  // namespace ltv::metrics
