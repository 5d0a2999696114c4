#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ltv/metrics.hpp"

using namespace ltv;

namespace {

// Brute-force oracles, independent of the implementations under test.

double oracle_auc_roc(const std::vector<int>& labels,
                      const std::vector<double>& scores) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++below;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = below + (equal + 1.0) / 2.0;
  }
  return ranks;
}

double oracle_spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  const auto ra = oracle_ranks(a);
  const auto rb = oracle_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

double oracle_gini(const std::vector<double>& key,
                   const std::vector<double>& value) {
  std::vector<std::size_t> order(value.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  const double total = std::accumulate(value.begin(), value.end(), 0.0);
  const double n = static_cast<double>(value.size());
  double area = 0.0, cum = 0.0, prev = 0.0;
  for (std::size_t i : order) {
    cum += value[i] / total;
    area += (prev + cum) / 2.0 / n;
    prev = cum;
  }
  return 2.0 * (area - 0.5);
}

double oracle_auc_pr(const std::vector<int>& labels,
                     const std::vector<double>& scores) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double n_pos =
      static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double ap = 0.0, tp = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      tp += 1.0;
      ap += tp / static_cast<double>(r + 1) / n_pos;
    }
  }
  return ap;
}

}  // namespace

TEST_CASE("spearman basics") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(metrics::spearman(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<double> rev{5.0, 4.0, 3.0, 2.0, 1.0};
  CHECK(metrics::spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-14));
  const std::vector<double> x{1.0, 2.0, 2.0, 4.0};
  const std::vector<double> y{1.0, 3.0, 2.0, 4.0};
  CHECK(metrics::spearman(x, y) ==
        doctest::Approx(oracle_spearman(x, y)).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::spearman(a, std::vector<double>{1, 1, 1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("gini hand cases") {
  SUBCASE("perfect equality") {
    const std::vector<double> v{1.0, 1.0, 1.0, 1.0};
    CHECK(metrics::gini(v, v).gini == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("single spender") {
    const std::vector<double> v{0.0, 0.0, 0.0, 10.0};
    const auto result = metrics::gini(v, v);
    CHECK(result.gini == doctest::Approx(0.75).epsilon(1e-14));
    REQUIRE(result.curve.size() == 5);
    CHECK(result.curve.front().x == 0.0);
    CHECK(result.curve.front().y == 0.0);
    CHECK(result.curve[1].y == doctest::Approx(1.0));
    CHECK(result.curve.back().x == 1.0);
    CHECK(result.curve.back().y == doctest::Approx(1.0));
  }
  SUBCASE("errors") {
    const std::vector<double> neg{1.0, -1.0};
    CHECK_THROWS_AS(metrics::gini(neg, neg), std::invalid_argument);
    const std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(metrics::gini(zeros, zeros), std::invalid_argument);
  }
}

TEST_CASE("lorenz curve of the label ordering is concave and above diagonal") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(u(rng));
  const auto result = metrics::gini(v, v);
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    CHECK(result.curve[i].y >= result.curve[i].x - 1e-12);
    if (i + 1 < result.curve.size()) {
      const double left = result.curve[i].y - result.curve[i - 1].y;
      const double right = result.curve[i + 1].y - result.curve[i].y;
      CHECK(left >= right - 1e-12);
    }
  }
}

TEST_CASE("normalized gini") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<double> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(u(rng));

  SUBCASE("perfect predictions") {
    const auto report = metrics::normalized_gini(labels, labels);
    CHECK(report.normalized_gini == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("monotone transform invariance") {
    std::vector<double> transformed;
    for (double v : labels) transformed.push_back(std::exp(0.3 * v) + 7.0);
    const auto a = metrics::normalized_gini(labels, labels);
    const auto b = metrics::normalized_gini(transformed, labels);
    CHECK(a.model_gini == doctest::Approx(b.model_gini).epsilon(1e-14));
  }
  SUBCASE("baseline gini present when first purchase values given") {
    std::vector<double> fpv;
    for (int i = 0; i < 40; ++i) fpv.push_back(u(rng));
    const auto report = metrics::normalized_gini(labels, labels, fpv);
    CHECK(report.baseline_gini.has_value());
  }
}

TEST_CASE("gini vs auc identity on binary labels") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> n_dist(5, 200);
    const int n = n_dist(rng);
    std::vector<int> labels;
    std::vector<double> scores, label_values;
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
      const int l = u(rng) < 0.4 ? 1 : 0;
      labels.push_back(l);
      label_values.push_back(static_cast<double>(l));
      scores.push_back(u(rng));
      n_pos += l;
    }
    if (n_pos == 0 || n_pos == n) continue;
    const auto report = metrics::normalized_gini(scores, label_values);
    const double auc = metrics::auc_roc(labels, scores);
    CHECK(std::abs(report.normalized_gini - (2.0 * auc - 1.0)) < 1e-9);
  }
}

TEST_CASE("metrics match brute-force oracles on random instances") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n_dist(4, 50);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = n_dist(rng);
    std::vector<int> labels;
    std::vector<double> scores, values, b;
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
      const int l = u(rng) < 0.5 ? 1 : 0;
      labels.push_back(l);
      n_pos += l;
      // Coarse grid so ties actually occur.
      scores.push_back(std::floor(u(rng) * 8.0) / 8.0);
      values.push_back(u(rng) * 10.0 + 0.01);
      b.push_back(u(rng));
    }
    CHECK(metrics::gini(scores, values).gini ==
          doctest::Approx(oracle_gini(scores, values)).epsilon(1e-10));
    if (n_pos > 0 && n_pos < n) {
      CHECK(metrics::auc_roc(labels, scores) ==
            doctest::Approx(oracle_auc_roc(labels, scores)).epsilon(1e-10));
      CHECK(metrics::auc_pr(labels, scores) ==
            doctest::Approx(oracle_auc_pr(labels, scores)).epsilon(1e-10));
    }
    CHECK(metrics::spearman(values, b) ==
          doctest::Approx(oracle_spearman(values, b)).epsilon(1e-10));
  }
}

TEST_CASE("auc hand cases") {
  const std::vector<int> labels{1, 0, 1, 0};
  const std::vector<double> scores{0.9, 0.8, 0.4, 0.2};
  CHECK(metrics::auc_roc(labels, scores) == doctest::Approx(0.75));
  const std::vector<double> equal(4, 0.5);
  CHECK(metrics::auc_roc(labels, equal) == doctest::Approx(0.5));
  CHECK_THROWS_AS(
      metrics::auc_roc(std::vector<int>{1, 1}, std::vector<double>{1, 2}),
      std::invalid_argument);

  const std::vector<int> pr_labels{1, 0, 1};
  const std::vector<double> pr_scores{0.9, 0.5, 0.1};
  CHECK(metrics::auc_pr(pr_labels, pr_scores) ==
        doctest::Approx(1.0 / 2.0 + 2.0 / 3.0 / 2.0).epsilon(1e-12));
  // Single positive ranked last.
  const std::vector<int> last{0, 0, 0, 1};
  const std::vector<double> last_scores{4.0, 3.0, 2.0, 1.0};
  CHECK(metrics::auc_pr(last, last_scores) == doctest::Approx(0.25));
  CHECK_THROWS_AS(
      metrics::auc_pr(std::vector<int>{0, 0}, std::vector<double>{1, 2}),
      std::invalid_argument);
}

TEST_CASE("decile table") {
  SUBCASE("n=10 distinct") {
    std::vector<double> preds, labels;
    for (int i = 0; i < 10; ++i) {
      preds.push_back(10.0 - i);
      labels.push_back(1.0);
    }
    const auto table = metrics::decile_table(preds, labels);
    REQUIRE(table.size() == 10);
    for (int i = 0; i < 10; ++i) {
      CHECK(table[i].count == 1);
      CHECK(table[i].mean_prediction == doctest::Approx(10.0 - i));
    }
  }
  SUBCASE("n=23 size allocation") {
    std::vector<double> preds, labels;
    for (int i = 0; i < 23; ++i) {
      preds.push_back(static_cast<double>(23 - i));
      labels.push_back(1.0);
    }
    const auto table = metrics::decile_table(preds, labels);
    const std::vector<std::size_t> expected{3, 3, 3, 2, 2, 2, 2, 2, 2, 2};
    for (int i = 0; i < 10; ++i) CHECK(table[i].count == expected[i]);
  }
  SUBCASE("partition property") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<double> preds, labels;
    for (int i = 0; i < 137; ++i) {
      preds.push_back(u(rng));
      labels.push_back(u(rng));
    }
    const auto table = metrics::decile_table(preds, labels);
    std::size_t total = 0;
    double weighted = 0.0;
    for (const auto& row : table) {
      total += row.count;
      weighted += row.mean_label * static_cast<double>(row.count);
    }
    CHECK(total == 137);
    const double global =
        std::accumulate(labels.begin(), labels.end(), 0.0) / 137.0;
    CHECK(weighted / 137.0 == doctest::Approx(global).epsilon(1e-10));
  }
  SUBCASE("too small") {
    const std::vector<double> v(9, 1.0);
    CHECK_THROWS_AS(metrics::decile_table(v, v), std::invalid_argument);
  }
}

TEST_CASE("decile mape") {
  metrics::DecileTable table;
  for (int i = 1; i <= 10; ++i) {
    table.push_back({i, 2.0, 2.0, 5});
  }
  CHECK(metrics::decile_mape(table) == doctest::Approx(0.0));
  for (auto& row : table) row.mean_prediction = 2.2;
  CHECK(metrics::decile_mape(table) ==
        doctest::Approx(1.0).epsilon(1e-12));  // 10 deciles x 10% each
  table[0].mean_prediction = 2.0;
  table[0].mean_label = 0.0;
  CHECK_THROWS_AS(metrics::decile_mape(table), std::invalid_argument);
}

TEST_CASE("hit rate") {
  std::vector<double> labels{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  CHECK(metrics::hit_rate(labels, labels, 0.25) == doctest::Approx(1.0));
  std::vector<double> reversed(labels.rbegin(), labels.rend());
  CHECK(metrics::hit_rate(reversed, labels, 0.25) == doctest::Approx(0.0));
  CHECK_THROWS_AS(metrics::hit_rate(labels, labels, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(metrics::hit_rate(labels, labels, 1.0),
                  std::invalid_argument);

  // Random case against a brute-force set intersection.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> preds, labs;
  for (int i = 0; i < 37; ++i) {
    preds.push_back(u(rng));
    labs.push_back(u(rng));
  }
  const std::size_t k = static_cast<std::size_t>(std::ceil(0.25 * 37));
  auto top_k = [&](const std::vector<double>& key) {
    std::vector<std::size_t> order(key.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return key[a] > key[b];
    });
    return std::vector<std::size_t>(order.begin(), order.begin() + static_cast<long>(k));
  };
  const auto tp = top_k(preds);
  const auto tl = top_k(labs);
  std::size_t hits = 0;
  for (auto i : tl) {
    hits += std::count(tp.begin(), tp.end(), i) > 0 ? 1 : 0;
  }
  CHECK(metrics::hit_rate(preds, labs, 0.25) ==
        doctest::Approx(static_cast<double>(hits) / static_cast<double>(k)));
}

TEST_CASE("total profit") {
  const std::vector<double> preds{1.0, 0.5};
  const std::vector<double> donations{5.0, 3.0};
  CHECK(metrics::total_profit(preds, donations, 0.68) ==
        doctest::Approx(4.32).epsilon(1e-15));
  const std::vector<double> low{0.1, 0.2};
  CHECK(metrics::total_profit(low, donations, 0.68) == doctest::Approx(0.0));
  const std::vector<double> bad{-1.0, 3.0};
  CHECK_THROWS_AS(metrics::total_profit(preds, bad, 0.68),
                  std::invalid_argument);
}

TEST_CASE("rank metrics invariant under positive rescaling") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<double> scores, values;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    scores.push_back(u(rng));
    values.push_back(u(rng));
    labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  std::vector<double> scaled;
  for (double s : scores) scaled.push_back(3.5 * s);
  CHECK(metrics::gini(scores, values).gini ==
        doctest::Approx(metrics::gini(scaled, values).gini).epsilon(1e-14));
  CHECK(metrics::auc_roc(labels, scores) ==
        doctest::Approx(metrics::auc_roc(labels, scaled)).epsilon(1e-14));
  CHECK(metrics::spearman(scores, values) ==
        doctest::Approx(metrics::spearman(scaled, values)).epsilon(1e-14));
}
