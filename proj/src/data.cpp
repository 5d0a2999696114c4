#include "ltv/data.hpp"

#include "ltv/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ltv::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& s, const std::string& context) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError("unparseable number '" + s + "' (" + context + ")");
  }
  return value;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  return lines;
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name, const std::string& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError("missing column '" + name + "' in " + path);
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

}  // namespace

void FeatureSchema::validate() const {
  std::set<std::string> names;
  auto check = [&](const std::string& n) {
    if (!names.insert(n).second) {
      throw DataError("duplicate feature name: " + n);
    }
  };
  for (const auto& n : numeric_features) check(n);
  for (const auto& c : categorical_features) {
    check(c.name);
    if (c.vocabulary.empty() || c.vocabulary.front() != kOovToken) {
      throw DataError("vocabulary for " + c.name +
                      " must reserve index 0 for " + std::string(kOovToken));
    }
  }
  check(label_name);
  if (first_purchase_value_name) check(*first_purchase_value_name);
}

std::int64_t parse_date(const std::string& iso_date) {
  int year = 0, month = 0, day = 0;
  if (iso_date.size() != 10 || iso_date[4] != '-' || iso_date[7] != '-' ||
      std::sscanf(iso_date.c_str(), "%4d-%2d-%2d", &year, &month, &day) != 3 ||
      month < 1 || month > 12 || day < 1 || day > 31) {
    throw DataError("bad date (expected YYYY-MM-DD): '" + iso_date + "'");
  }
  static const int cum[] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
  std::int64_t days = 0;
  for (int y = 1970; y < year; ++y) days += is_leap(y) ? 366 : 365;
  for (int y = year; y < 1970; ++y) days -= is_leap(y) ? 366 : 365;
  days += cum[month - 1] + (month > 2 && is_leap(year) ? 1 : 0) + day - 1;
  return days;
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open schema file: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad schema file " + path + ": " + e.what());
  }
  FeatureSchema schema;
  schema.numeric_features = j.at("numeric_features").get<std::vector<std::string>>();
  for (const auto& c : j.at("categorical_features")) {
    schema.categorical_features.push_back(
        {c.at("name").get<std::string>(),
         c.at("vocabulary").get<std::vector<std::string>>()});
  }
  schema.label_name = j.value("label_name", std::string("label"));
  if (j.contains("first_purchase_value_name") &&
      !j["first_purchase_value_name"].is_null()) {
    schema.first_purchase_value_name =
        j["first_purchase_value_name"].get<std::string>();
  }
  schema.validate();
  return schema;
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
  nlohmann::json j;
  j["numeric_features"] = schema.numeric_features;
  j["categorical_features"] = nlohmann::json::array();
  for (const auto& c : schema.categorical_features) {
    j["categorical_features"].push_back(
        {{"name", c.name}, {"vocabulary", c.vocabulary}});
  }
  j["label_name"] = schema.label_name;
  if (schema.first_purchase_value_name) {
    j["first_purchase_value_name"] = *schema.first_purchase_value_name;
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write schema file: " + path);
  }
  out << j.dump(2) << "\n";
}

int vocab_index(const Vocabulary& vocab, const std::string& value) {
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    if (vocab[i] == value) return static_cast<int>(i);
  }
  return 0;
}

std::vector<LtvExample> load_examples(const std::string& path,
                                      const FeatureSchema& schema) {
  schema.validate();
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw DataError("empty examples file: " + path);
  }
  const auto header = split_line(lines[0]);
  const std::size_t id_col = find_column(header, "id", path);
  const std::size_t label_col = find_column(header, schema.label_name, path);
  const std::size_t fpv_col =
      find_column(header, "first_purchase_value", path);
  std::vector<std::size_t> numeric_cols;
  for (const auto& n : schema.numeric_features) {
    numeric_cols.push_back(find_column(header, n, path));
  }
  std::vector<std::size_t> cat_cols;
  for (const auto& c : schema.categorical_features) {
    cat_cols.push_back(find_column(header, c.name, path));
  }

  std::vector<LtvExample> examples;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const auto fields = split_line(lines[row]);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row + 1) + " of " + path +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    const std::string context = path + " row " + std::to_string(row + 1);
    LtvExample ex;
    ex.id = fields[id_col];
    ex.label = parse_number(fields[label_col], context);
    if (ex.label < 0.0) {
      throw DataError("negative label at " + context);
    }
    ex.first_purchase_value = parse_number(fields[fpv_col], context);
    for (std::size_t c : numeric_cols) {
      ex.numerics.push_back(parse_number(fields[c], context));
    }
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
      ex.categoricals.push_back(vocab_index(
          schema.categorical_features[k].vocabulary, fields[cat_cols[k]]));
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

void save_examples(std::span<const LtvExample> examples,
                   const FeatureSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write examples file: " + path);
  }
  out << "id," << schema.label_name << ",first_purchase_value";
  for (const auto& n : schema.numeric_features) out << "," << n;
  for (const auto& c : schema.categorical_features) out << "," << c.name;
  out << "\n";
  for (const auto& ex : examples) {
    out << ex.id << "," << text::format_double(ex.label) << ","
        << text::format_double(ex.first_purchase_value);
    for (double v : ex.numerics) out << "," << text::format_double(v);
    for (std::size_t k = 0; k < ex.categoricals.size(); ++k) {
      const auto& vocab = schema.categorical_features[k].vocabulary;
      out << "," << vocab[static_cast<std::size_t>(ex.categoricals[k])];
    }
    out << "\n";
  }
}

std::vector<TransactionRecord> load_transactions(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw DataError("empty transactions file: " + path);
  }
  const auto header = split_line(lines[0]);
  const std::size_t id_col = find_column(header, "customer_id", path);
  const std::size_t date_col = find_column(header, "date", path);
  const std::size_t amount_col = find_column(header, "amount", path);
  const std::size_t chain_col = find_column(header, "chain", path);
  const std::size_t cat_col = find_column(header, "category", path);
  const std::size_t brand_col = find_column(header, "brand", path);
  const std::size_t size_col = find_column(header, "size_measure", path);

  std::vector<TransactionRecord> records;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const auto fields = split_line(lines[row]);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row + 1) + " of " + path +
                      ": malformed record");
    }
    TransactionRecord r;
    r.customer_id = fields[id_col];
    r.date = fields[date_col];
    try {
      parse_date(r.date);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " at " + path + " row " +
                      std::to_string(row + 1));
    }
    r.amount = parse_number(fields[amount_col],
                            path + " row " + std::to_string(row + 1));
    r.chain = fields[chain_col];
    r.category = fields[cat_col];
    r.brand = fields[brand_col];
    r.size_measure = fields[size_col];
    records.push_back(std::move(r));
  }
  return records;
}

Vocabulary build_vocab(std::span<const std::string> values,
                       std::size_t min_count) {
  if (min_count < 1) {
    throw DataError("min_count must be >= 1");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [value, count] : counts) {
    if (count >= min_count) kept.emplace_back(value, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab{kOovToken};
  for (const auto& [value, count] : kept) vocab.push_back(value);
  return vocab;
}

std::pair<FeatureSchema, std::vector<LtvExample>> featurize_transactions(
    std::span<const TransactionRecord> records, const std::string& cohort_start,
    const std::string& cohort_end, int horizon_days) {
  if (records.empty()) {
    throw DataError("featurize_transactions requires at least one record");
  }
  if (horizon_days < 1) {
    throw DataError("horizon_days must be >= 1");
  }
  const std::int64_t start_day = parse_date(cohort_start);
  const std::int64_t end_day = parse_date(cohort_end);
  if (end_day <= start_day) {
    throw DataError("cohort_end must be after cohort_start");
  }

  struct Customer {
    std::int64_t initial_day = 0;
    double initial_amount = 0.0;
    std::size_t item_count = 0;
    double best_amount = -std::numeric_limits<double>::infinity();
    std::string chain, category, brand, size_measure;
    double label = 0.0;
  };

  // First pass: earliest transaction day per customer.
  std::map<std::string, std::int64_t> initial_day;
  for (const auto& r : records) {
    const std::int64_t d = parse_date(r.date);
    auto [it, inserted] = initial_day.emplace(r.customer_id, d);
    if (!inserted && d < it->second) it->second = d;
  }

  std::map<std::string, Customer> customers;
  for (const auto& r : records) {
    const std::int64_t init = initial_day.at(r.customer_id);
    if (init < start_day || init >= end_day) continue;
    auto& c = customers[r.customer_id];
    c.initial_day = init;
    const std::int64_t d = parse_date(r.date);
    if (d == init) {
      c.initial_amount += r.amount;
      ++c.item_count;
      if (r.amount > c.best_amount) {
        c.best_amount = r.amount;
        c.chain = r.chain;
        c.category = r.category;
        c.brand = r.brand;
        c.size_measure = r.size_measure;
      }
    } else if (d - init >= 1 && d - init <= horizon_days) {
      c.label += r.amount;
    }
  }

  std::vector<std::string> chains, categories, brands, sizes;
  for (const auto& [id, c] : customers) {
    chains.push_back(c.chain);
    categories.push_back(c.category);
    brands.push_back(c.brand);
    sizes.push_back(c.size_measure);
  }

  FeatureSchema schema;
  schema.numeric_features = {"initial_amount", "item_count"};
  schema.categorical_features = {{"chain", build_vocab(chains)},
                                 {"category", build_vocab(categories)},
                                 {"brand", build_vocab(brands)},
                                 {"size_measure", build_vocab(sizes)}};
  schema.label_name = "label";
  schema.first_purchase_value_name = "first_purchase_value";

  std::vector<LtvExample> examples;
  for (const auto& [id, c] : customers) {
    LtvExample ex;
    ex.id = id;
    ex.numerics = {c.initial_amount, static_cast<double>(c.item_count)};
    ex.categoricals = {
        vocab_index(schema.categorical_features[0].vocabulary, c.chain),
        vocab_index(schema.categorical_features[1].vocabulary, c.category),
        vocab_index(schema.categorical_features[2].vocabulary, c.brand),
        vocab_index(schema.categorical_features[3].vocabulary, c.size_measure)};
    // Returns can drive net future spend negative; the label floors at 0.
    ex.label = std::max(0.0, c.label);
    ex.first_purchase_value = c.initial_amount;
    examples.push_back(std::move(ex));
  }
  return {std::move(schema), std::move(examples)};
}

std::pair<std::vector<LtvExample>, std::vector<LtvExample>> split(
    std::span<const LtvExample> examples, double test_fraction,
    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test_fraction must lie in (0,1)");
  }
  if (examples.size() < 2) {
    throw DataError("split requires at least 2 examples");
  }
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(examples.size())));
  std::vector<LtvExample> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < examples.size() - n_test ? train : test)
        .push_back(examples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

EncodedBatch encode(std::span<const LtvExample> examples,
                    const FeatureSchema& schema,
                    CategoricalEncoding encoding) {
  const auto rows = static_cast<Eigen::Index>(examples.size());
  Eigen::Index numeric_dim =
      static_cast<Eigen::Index>(schema.numeric_features.size());
  if (encoding == CategoricalEncoding::kOneHot) {
    for (const auto& c : schema.categorical_features) {
      numeric_dim += static_cast<Eigen::Index>(c.vocabulary.size());
    }
  }
  EncodedBatch batch;
  batch.numeric = Eigen::MatrixXd::Zero(rows, numeric_dim);
  const Eigen::Index n_cat =
      encoding == CategoricalEncoding::kIndices
          ? static_cast<Eigen::Index>(schema.categorical_features.size())
          : 0;
  batch.categorical_indices = Eigen::MatrixXi::Zero(rows, n_cat);
  batch.labels.reserve(examples.size());

  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& ex = examples[static_cast<std::size_t>(r)];
    if (ex.numerics.size() != schema.numeric_features.size() ||
        ex.categoricals.size() != schema.categorical_features.size()) {
      throw DataError("example '" + ex.id + "' does not match schema");
    }
    Eigen::Index col = 0;
    for (double v : ex.numerics) batch.numeric(r, col++) = v;
    for (std::size_t k = 0; k < ex.categoricals.size(); ++k) {
      const int idx = ex.categoricals[k];
      const auto vocab_size =
          static_cast<int>(schema.categorical_features[k].vocabulary.size());
      if (idx < 0 || idx >= vocab_size) {
        throw DataError("categorical index out of vocabulary for example '" +
                        ex.id + "'");
      }
      if (encoding == CategoricalEncoding::kOneHot) {
        batch.numeric(r, col + idx) = 1.0;
        col += vocab_size;
      } else {
        batch.categorical_indices(r, static_cast<Eigen::Index>(k)) = idx;
      }
    }
    batch.labels.push_back(ex.label);
  }
  return batch;
}

}  // namespace ltv::data
