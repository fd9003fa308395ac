#pragma once

#include "frtsvm/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

namespace frtsvm {

// Labeled instance matrix. Rows are instances, labels are +1 / -1.
struct Dataset {
  Matrix features;
  Labels labels;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1 || features.cols() < 1) throw DataError("dataset is empty");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
      throw DataError("feature rows (" + std::to_string(features.rows()) + ") != label count (" +
                      std::to_string(labels.size()) + ")");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != 1 && labels[i] != -1)
        throw DataError("label at row " + std::to_string(i + 1) + " is not +1 or -1");
    if (!features.allFinite()) throw DataError("dataset contains non-finite feature values");
  }

  Index count(int label) const {
    return static_cast<Index>(std::count(labels.begin(), labels.end(), label));
  }
};

inline Dataset subset(const Dataset& data, const IndexList& rows) {
  Dataset out;
  out.features = detail::take_rows(data.features, rows);
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
  return out;
}

// ---------------------------------------------------------------------------
// Binarization

// Majority class -> +1, every other class -> -1. Count ties go to the
// smallest class id.
template <typename Id>
Labels binarize_majority(const std::vector<Id>& raw) {
  std::map<Id, std::size_t> counts;
  for (const auto& id : raw) ++counts[id];
  if (counts.size() < 2) throw DataError("binarize_majority needs at least two distinct classes");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;  // strict: map order keeps the smallest id on ties
  Labels out;
  out.reserve(raw.size());
  for (const auto& id : raw) out.push_back(id == best->first ? 1 : -1);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  int label_column = -1;  // 0-based; negative counts from the end (-1 = last)
  bool skip_header = false;
  bool binarize = false;  // map raw class ids to +1/-1 by majority-vs-rest
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && opts.skip_header) continue;
    if (detail::trim(line).empty()) continue;
    ++row_no;
    auto cells = detail::split_commas(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) throw DataError(path + ": row 1 needs at least one feature and a label");
    } else if (cells.size() != width) {
      throw DataError(path + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(width));
    }
    const int w = static_cast<int>(width);
    const int label_col = opts.label_column < 0 ? w + opts.label_column : opts.label_column;
    if (label_col < 0 || label_col >= w)
      throw ConfigError("label column " + std::to_string(opts.label_column) + " out of range for " +
                        std::to_string(w) + " columns");
    std::vector<double> feats;
    feats.reserve(width - 1);
    for (int c = 0; c < w; ++c) {
      if (c == label_col) {
        raw_labels.emplace_back(detail::trim(cells[static_cast<std::size_t>(c)]));
        continue;
      }
      double v = 0.0;
      if (!detail::parse_double(cells[static_cast<std::size_t>(c)], v))
        throw DataError(path + ": row " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                        ": cannot parse '" + std::string(detail::trim(cells[static_cast<std::size_t>(c)])) +
                        "' as a number");
      feats.push_back(v);
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw DataError(path + ": no rows");

  Dataset data;
  data.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      data.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];

  if (opts.binarize) {
    std::vector<double> numeric(raw_labels.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < raw_labels.size() && all_numeric; ++i)
      all_numeric = detail::parse_double(raw_labels[i], numeric[i]);
    data.labels = all_numeric ? binarize_majority(numeric) : binarize_majority(raw_labels);
  } else {
    data.labels.reserve(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      double v = 0.0;
      if (!detail::parse_double(raw_labels[i], v) || (v != 1.0 && v != -1.0))
        throw DataError(path + ": row " + std::to_string(i + 1) + ": label '" + raw_labels[i] +
                        "' is not +1 or -1 (use binarization for raw class ids)");
      data.labels.push_back(v > 0 ? 1 : -1);
    }
  }
  data.validate();
  return data;
}

// Writes features followed by the label, one instance per line.
inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  char buf[32];
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features(r, c));
      out << buf << ',';
    }
    out << data.labels[static_cast<std::size_t>(r)] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Min-max scaling

struct MinMaxScaler {
  Vector min;
  Vector range;

  static MinMaxScaler fit(const Matrix& x) {
    if (x.rows() < 1) throw DataError("cannot fit scaler on empty data");
    MinMaxScaler s;
    s.min = x.colwise().minCoeff().transpose();
    s.range = x.colwise().maxCoeff().transpose() - s.min;
    return s;
  }
  static MinMaxScaler fit(const Dataset& d) { return fit(d.features); }

  // Identity map on n features.
  static MinMaxScaler identity(Index n) { return {Vector::Zero(n), Vector::Ones(n)}; }

  // Affine, unclamped. Zero-range features map to 0.
  Matrix transform(const Matrix& x) const {
    if (x.cols() != min.size()) throw DataError("scaler dimension mismatch");
    Matrix out(x.rows(), x.cols());
    for (Index c = 0; c < x.cols(); ++c) {
      if (range(c) > 0.0)
        out.col(c) = (x.col(c).array() - min(c)) / range(c);
      else
        out.col(c).setZero();
    }
    return out;
  }

  Vector transform(const Vector& x) const {
    if (x.size() != min.size()) throw DataError("scaler dimension mismatch");
    Vector out(x.size());
    for (Index c = 0; c < x.size(); ++c) out(c) = range(c) > 0.0 ? (x(c) - min(c)) / range(c) : 0.0;
    return out;
  }

  Dataset transform(const Dataset& d) const { return {transform(d.features), d.labels}; }
};

// ---------------------------------------------------------------------------
// Class split

struct ClassSplit {
  Matrix plus;
  Matrix minus;
  IndexList plus_rows;
  IndexList minus_rows;
};

inline ClassSplit split_by_class(const Dataset& data) {
  ClassSplit s;
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    (data.labels[i] > 0 ? s.plus_rows : s.minus_rows).push_back(static_cast<Index>(i));
  if (s.plus_rows.empty()) throw DataError("no +1 instances");
  if (s.minus_rows.empty()) throw DataError("no -1 instances");
  s.plus = detail::take_rows(data.features, s.plus_rows);
  s.minus = detail::take_rows(data.features, s.minus_rows);
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic data
//
// All generators draw from std::mt19937_64 seeded with the given 64-bit seed.

namespace detail {

inline double sine_band_center(double x1) { return std::sin(x1); }
inline double sine_negative_center(double x1) { return 0.6 * std::sin(x1 / 1.05 + 0.5); }

}  // namespace detail

// True when (x1, x2) lies in the positive band |x2 - sin(x1)| <= 0.25.
inline bool in_sine_positive_band(double x1, double x2) {
  return std::abs(x2 - detail::sine_band_center(x1)) <= 0.25;
}

// True when (x1, x2) lies in the negative band
// 0.6 sin(x1/1.05 + 0.5) + [-1.3, 0.8]. It overlaps the positive band.
inline bool in_sine_negative_band(double x1, double x2) {
  const double c = detail::sine_negative_center(x1);
  return x2 >= c - 1.3 && x2 <= c + 0.8;
}

// Two-class sine band data, x1 uniform on [-pi/2, 2pi] and x2 uniform within
// the class band at x1. Even rows are +1, odd rows -1. A draw that rounds
// outside its band is redrawn, so every row satisfies its band inequality.
inline Dataset gen_sine_band(Index count, std::uint64_t seed) {
  if (count < 2) throw ConfigError("gen_sine_band: count must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x1_dist(-std::numbers::pi / 2.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset d;
  d.features.resize(count, 2);
  d.labels.resize(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const bool positive = (i % 2 == 0);
    double x1 = 0.0, x2 = 0.0;
    do {
      x1 = x1_dist(rng);
      x2 = positive ? detail::sine_band_center(x1) - 0.25 + 0.5 * unit(rng)
                    : detail::sine_negative_center(x1) - 1.3 + 2.1 * unit(rng);
    } while (positive ? !in_sine_positive_band(x1, x2) : !in_sine_negative_band(x1, x2));
    d.features(i, 0) = x1;
    d.features(i, 1) = x2;
    d.labels[static_cast<std::size_t>(i)] = positive ? 1 : -1;
  }
  return d;
}

// Two-component Gaussian mixture per class, isotropic covariance 0.03 I.
inline Dataset gen_ripley(Index count, std::mt19937_64& rng) {
  static constexpr double centers_plus[2][2] = {{-0.3, 0.7}, {0.4, 0.7}};
  static constexpr double centers_minus[2][2] = {{-0.7, 0.3}, {0.3, 0.3}};
  std::normal_distribution<double> noise(0.0, std::sqrt(0.03));
  std::bernoulli_distribution component(0.5);
  Dataset d;
  d.features.resize(count, 2);
  d.labels.resize(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const bool positive = (i % 2 == 0);
    const auto& c = positive ? centers_plus[component(rng)] : centers_minus[component(rng)];
    d.features(i, 0) = c[0] + noise(rng);
    d.features(i, 1) = c[1] + noise(rng);
    d.labels[static_cast<std::size_t>(i)] = positive ? 1 : -1;
  }
  return d;
}

inline std::pair<Dataset, Dataset> gen_ripley_mixture(Index count_train, Index count_test, std::uint64_t seed) {
  if (count_train < 2 || count_test < 2) throw ConfigError("gen_ripley_mixture: counts must be >= 2");
  std::mt19937_64 rng(seed);
  Dataset train = gen_ripley(count_train, rng);
  Dataset test = gen_ripley(count_test, rng);
  return {std::move(train), std::move(test)};
}

// Adds independent N(0, sigma^2) noise to every feature entry.
inline Dataset add_gaussian_noise(const Dataset& data, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("add_gaussian_noise: sigma must be >= 0");
  Dataset out = data;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Index r = 0; r < out.rows(); ++r)
    for (Index c = 0; c < out.cols(); ++c) out.features(r, c) += noise(rng);
  return out;
}

// Seeded permutation of [0, l).
inline IndexList permutation(Index l, std::uint64_t seed) {
  IndexList idx(static_cast<std::size_t>(l));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Random train/test split: the first train_count entries of a seeded
// permutation form the training set.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& data, Index train_count, std::uint64_t seed) {
  if (train_count < 1 || train_count >= data.rows()) throw ConfigError("train_test_split: bad train count");
  auto perm = permutation(data.rows(), seed);
  IndexList tr(perm.begin(), perm.begin() + train_count);
  IndexList te(perm.begin() + train_count, perm.end());
  return {subset(data, tr), subset(data, te)};
}

// ---------------------------------------------------------------------------
// K-fold partitioning

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;

  IndexList test_rows(int fold) const {
    IndexList out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(static_cast<Index>(i));
    return out;
  }
  IndexList train_rows(int fold) const {
    IndexList out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(static_cast<Index>(i));
    return out;
  }
};

// Shuffles [0, l) with the seed and deals positions round-robin into k folds.
inline FoldPlan make_folds(Index l, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("make_folds: k must be >= 2");
  if (l < k) throw ConfigError("make_folds: k (" + std::to_string(k) + ") exceeds instance count (" +
                               std::to_string(l) + ")");
  auto perm = permutation(l, seed);
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(static_cast<std::size_t>(l), 0);
  for (std::size_t pos = 0; pos < perm.size(); ++pos)
    plan.assignments[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return plan;
}

}  // namespace frtsvm
