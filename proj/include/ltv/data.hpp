#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ltv::data {

inline constexpr const char* kOovToken = "<OOV>";

// Vocabulary: index 0 is always the out-of-vocabulary token.
using Vocabulary = std::vector<std::string>;

struct CategoricalFeature {
  std::string name;
  Vocabulary vocabulary;
};

struct FeatureSchema {
  std::vector<std::string> numeric_features;
  std::vector<CategoricalFeature> categorical_features;
  std::string label_name = "label";
  std::optional<std::string> first_purchase_value_name;

  void validate() const;  // throws on duplicate names or empty vocabularies
};

struct LtvExample {
  std::string id;
  std::vector<double> numerics;
  std::vector<int> categoricals;  // vocabulary indices, 0 = OOV
  double label = 0.0;             // exactly 0.0 for non-returning customers
  double first_purchase_value = 0.0;
};

struct TransactionRecord {
  std::string customer_id;
  std::string date;  // ISO-8601 YYYY-MM-DD
  double amount = 0.0;
  std::string chain;
  std::string category;
  std::string brand;
  std::string size_measure;
};

// Errors raised by ingestion and featurization; the CLI maps these to its
// data-error exit code.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Days since 1970-01-01 for an ISO date string. Throws DataError on bad input.
std::int64_t parse_date(const std::string& iso_date);

FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

// CSV with header id,label,first_purchase_value,<numerics...>,<categoricals...>
// Categorical cells hold the string value; unknown strings map to index 0.
std::vector<LtvExample> load_examples(const std::string& path,
                                      const FeatureSchema& schema);
void save_examples(std::span<const LtvExample> examples,
                   const FeatureSchema& schema, const std::string& path);

// CSV with header customer_id,date,amount,chain,category,brand,size_measure.
std::vector<TransactionRecord> load_transactions(const std::string& path);

// Builds per-customer examples from a transaction log. A customer's initial
// purchase date is their earliest transaction date; customers are kept iff it
// falls in [cohort_start, cohort_end). Features come from day-0 transactions
// only; the label is net spend over days 1..horizon_days, floored at 0.
// Vocabularies for the four categorical attributes are built from the kept
// customers (min_count 1). Output is sorted by customer id.
std::pair<FeatureSchema, std::vector<LtvExample>> featurize_transactions(
    std::span<const TransactionRecord> records, const std::string& cohort_start,
    const std::string& cohort_end, int horizon_days = 365);

// Seeded shuffle then prefix/suffix split; test side gets
// round(test_fraction * n) examples.
std::pair<std::vector<LtvExample>, std::vector<LtvExample>> split(
    std::span<const LtvExample> examples, double test_fraction,
    std::uint64_t seed);

// Distinct values with frequency >= min_count, ordered by descending
// frequency then lexicographically, with the OOV token at index 0.
Vocabulary build_vocab(std::span<const std::string> values,
                       std::size_t min_count = 1);

// Maps a value through a vocabulary; 0 when absent.
int vocab_index(const Vocabulary& vocab, const std::string& value);

// Dense feature matrix plus categorical index matrix. Linear models use
// one-hot expansion (indices matrix left empty); DNN models keep indices for
// embedding lookup.
struct EncodedBatch {
  Eigen::MatrixXd numeric;              // rows x numeric dim
  Eigen::MatrixXi categorical_indices;  // rows x n_categorical (may be 0 cols)
  std::vector<double> labels;
};

enum class CategoricalEncoding { kOneHot, kIndices };

EncodedBatch encode(std::span<const LtvExample> examples,
                    const FeatureSchema& schema, CategoricalEncoding encoding);

}  // namespace ltv::data
