#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsaudit/corpus.hpp"
#include "gsaudit/error.hpp"
#include "gsaudit/rng.hpp"
#include "gsaudit/stereotype.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

/// Compressed sparse row matrix of doubles. Column indices are strictly
/// increasing within a row; explicit zeros are never stored.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t cols) : cols_(cols) {}

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  /// Appends a row given (column, value) pairs in any order; zeros dropped.
  void append_row(std::vector<std::pair<std::uint32_t, double>> entries) {
    std::sort(entries.begin(), entries.end());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto [col, value] = entries[i];
      if (col >= cols_) throw DimensionError("column index out of range");
      if (i > 0 && entries[i - 1].first == col) throw DimensionError("duplicate column in row");
      if (value == 0.0) continue;
      col_idx_.push_back(col);
      values_.push_back(value);
    }
    row_ptr_.push_back(values_.size());
  }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return std::span(col_idx_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
  }
  std::span<const double> row_values(std::size_t r) const {
    return std::span(values_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
  }
  std::span<double> row_values_mut(std::size_t r) {
    return std::span(values_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
  }

  double at(std::size_t r, std::size_t c) const {
    const auto cols = row_cols(r);
    const auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0.0;
    return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
  }

  double dot(std::size_t r, std::span<const double> w) const {
    double s = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * w[col_idx_[k]];
    return s;
  }

  /// out += scale * row r
  void axpy(std::size_t r, double scale, std::span<double> out) const {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      out[col_idx_[k]] += scale * values_[k];
    }
  }

  double row_squared_norm(std::size_t r) const {
    double s = 0.0;
    for (const double v : row_values(r)) s += v * v;
    return s;
  }

  SparseMatrix select_rows(std::span<const std::size_t> rows) const {
    SparseMatrix out(cols_);
    for (const auto r : rows) {
      const auto cols = row_cols(r);
      const auto vals = row_values(r);
      out.col_idx_.insert(out.col_idx_.end(), cols.begin(), cols.end());
      out.values_.insert(out.values_.end(), vals.begin(), vals.end());
      out.row_ptr_.push_back(out.values_.size());
    }
    return out;
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

/// Column-major copy with each column's entries sorted by value; used by the
/// threshold searches of the tree learners.
struct SortedColumns {
  struct Entry {
    double value;
    std::uint32_t row;
  };
  std::vector<std::size_t> offsets;  // cols + 1
  std::vector<Entry> entries;

  explicit SortedColumns(const SparseMatrix& x) {
    std::vector<std::size_t> counts(x.cols() + 1, 0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (const auto c : x.row_cols(r)) ++counts[c + 1];
    }
    for (std::size_t c = 0; c < x.cols(); ++c) counts[c + 1] += counts[c];
    offsets = counts;
    entries.resize(x.nnz());
    auto cursor = counts;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto cols = x.row_cols(r);
      const auto vals = x.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        entries[cursor[cols[k]]++] = {vals[k], static_cast<std::uint32_t>(r)};
      }
    }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::sort(entries.begin() + static_cast<std::ptrdiff_t>(offsets[c]),
                entries.begin() + static_cast<std::ptrdiff_t>(offsets[c + 1]),
                [](const Entry& a, const Entry& b) {
                  return a.value < b.value || (a.value == b.value && a.row < b.row);
                });
    }
  }

  std::span<const Entry> column(std::size_t c) const {
    return std::span(entries).subspan(offsets[c], offsets[c + 1] - offsets[c]);
  }
};

/// User-by-feature matrix: one column per movie (value = rating, absent = 0)
/// plus, when stereotype-augmented, trailing d_male and d_female columns.
struct FeatureMatrix {
  SparseMatrix x;
  std::vector<Gender> labels;
  std::vector<std::int64_t> user_ids;
  std::size_t rating_columns = 0;
  bool gs_augmented = false;

  std::size_t rows() const { return x.rows(); }
  std::size_t cols() const { return x.cols(); }

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.x = x.select_rows(rows);
    out.rating_columns = rating_columns;
    out.gs_augmented = gs_augmented;
    out.labels.reserve(rows.size());
    out.user_ids.reserve(rows.size());
    for (const auto r : rows) {
      out.labels.push_back(labels[r]);
      out.user_ids.push_back(user_ids[r]);
    }
    return out;
  }
};

/// +1 for Male (positive class), -1 for Female.
inline std::vector<double> signed_labels(std::span<const Gender> labels) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == Gender::Male ? 1.0 : -1.0;
  return y;
}

inline FeatureMatrix build_matrix(const RatingCorpus& corpus,
                                  const std::optional<StereotypeModel>& model = std::nullopt,
                                  AggregationMode mode = AggregationMode::Cardinality) {
  if (corpus.users().empty()) throw DomainError("cannot build features for an empty corpus");
  const auto layout = movie_column_layout(corpus);
  FeatureMatrix fm;
  fm.rating_columns = layout.column_count;
  fm.gs_augmented = model.has_value();
  fm.x = SparseMatrix(layout.column_count + (model ? 2 : 0));
  std::vector<AlignmentDegrees> degrees;
  if (model) degrees = all_alignment_degrees(corpus, *model, mode);
  const auto gs_col = static_cast<std::uint32_t>(layout.column_count);

  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t u = 0; u < corpus.users().size(); ++u) {
    row.clear();
    const auto ratings = corpus.ratings_of(u);
    const auto movies = corpus.rated_movies_of(u);
    for (std::size_t k = 0; k < ratings.size(); ++k) {
      row.emplace_back(layout.column_of_movie[movies[k]], static_cast<double>(ratings[k].rating));
    }
    if (model) {
      row.emplace_back(gs_col, static_cast<double>(degrees[u].d_male));
      row.emplace_back(gs_col + 1, static_cast<double>(degrees[u].d_female));
    }
    fm.x.append_row(row);
    fm.labels.push_back(corpus.users()[u].gender);
    fm.user_ids.push_back(corpus.users()[u].user_id);
  }
  return fm;
}

/// Scales every non-zero row to unit Euclidean norm. Rows are independent,
/// so there is no fitted state to leak between train and test.
inline FeatureMatrix l2_normalize_rows(FeatureMatrix m) {
  for (std::size_t r = 0; r < m.x.rows(); ++r) {
    const double norm = std::sqrt(m.x.row_squared_norm(r));
    if (norm == 0.0) continue;
    for (double& v : m.x.row_values_mut(r)) v /= norm;
  }
  return m;
}

struct ClassWeights {
  double male = 1.0;
  double female = 1.0;
  double of(Gender g) const { return g == Gender::Male ? male : female; }
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

/// weight_c = N / (2 N_c)
inline ClassWeights balanced_weights(std::span<const Gender> labels) {
  const auto n = labels.size();
  const auto males = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Gender::Male));
  const auto females = n - males;
  if (males == 0 || females == 0) throw DomainError("class weights need both classes present");
  return {static_cast<double>(n) / (2.0 * static_cast<double>(males)),
          static_cast<double>(n) / (2.0 * static_cast<double>(females))};
}

inline std::vector<double> sample_weights(std::span<const Gender> labels, const ClassWeights& w) {
  std::vector<double> s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) s[i] = w.of(labels[i]);
  return s;
}

struct SplitKind {
  enum class Type { Holdout, StratifiedKFold };
  Type type = Type::Holdout;
  double test_fraction = 0.2;
  std::size_t k = 10;

  static SplitKind holdout(double fraction) { return {Type::Holdout, fraction, 1}; }
  static SplitKind kfold(std::size_t k) { return {Type::StratifiedKFold, 0.0, k}; }
};

/// Partition of row indices. Holdout: assignment 1 = test, 0 = train (one
/// "fold"). K-fold: assignment = index of the fold the row is tested in.
struct SplitPlan {
  SplitKind kind;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> assignments;

  std::size_t fold_count() const {
    return kind.type == SplitKind::Type::Holdout ? 1 : kind.k;
  }
  std::vector<std::size_t> test_indices(std::size_t fold) const {
    const auto tag = kind.type == SplitKind::Type::Holdout ? 1U : static_cast<std::uint32_t>(fold);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == tag) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> train_indices(std::size_t fold) const {
    const auto tag = kind.type == SplitKind::Type::Holdout ? 1U : static_cast<std::uint32_t>(fold);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != tag) out.push_back(i);
    }
    return out;
  }
};

/// Stratified, seed-deterministic split. Each class is shuffled separately
/// (males first, then females, from one generator). Holdout sends the first
/// round(N_c * fraction) of each class to test; k-fold deals the
/// concatenated class lists round-robin so fold sizes and per-class counts
/// differ by at most one.
inline SplitPlan make_split(std::span<const Gender> labels, SplitKind kind, std::uint64_t seed) {
  std::vector<std::size_t> male_rows;
  std::vector<std::size_t> female_rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Gender::Male ? male_rows : female_rows).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(std::span(male_rows));
  rng.shuffle(std::span(female_rows));

  SplitPlan plan{kind, seed, std::vector<std::uint32_t>(labels.size(), 0)};
  if (kind.type == SplitKind::Type::Holdout) {
    if (!(kind.test_fraction > 0.0 && kind.test_fraction < 1.0)) {
      throw ConfigError("holdout test fraction must lie strictly between 0 and 1");
    }
    for (const auto* rows : {&male_rows, &female_rows}) {
      const auto n_test = static_cast<std::size_t>(
          std::llround(kind.test_fraction * static_cast<double>(rows->size())));
      for (std::size_t j = 0; j < n_test; ++j) plan.assignments[(*rows)[j]] = 1;
    }
    return plan;
  }
  if (kind.k < 2) throw ConfigError("k-fold split needs k >= 2");
  if (male_rows.size() < kind.k || female_rows.size() < kind.k) {
    throw DomainError("each class needs at least k = " + std::to_string(kind.k) +
                      " members for a stratified split");
  }
  std::size_t position = 0;
  for (const auto* rows : {&male_rows, &female_rows}) {
    for (const auto r : *rows) plan.assignments[r] = static_cast<std::uint32_t>(position++ % kind.k);
  }
  return plan;
}

/// Dumps `matrix.csv` (row,col,value triplets) and `labels.csv`
/// (row,user_id,gender) for external verification.
inline void write_triplets(const FeatureMatrix& m, const std::filesystem::path& dir) {
  std::string triplets = "row,col,value\n";
  char buffer[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto cols = m.x.row_cols(r);
    const auto vals = m.x.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::snprintf(buffer, sizeof buffer, "%zu,%u,%.17g\n", r, cols[k], vals[k]);
      triplets += buffer;
    }
  }
  std::string labels = "row,user_id,gender\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    labels += std::to_string(r) + "," + std::to_string(m.user_ids[r]) +
              (m.labels[r] == Gender::Male ? ",M\n" : ",F\n");
  }
  text::write_file_atomic(dir / "matrix.csv", triplets);
  text::write_file_atomic(dir / "labels.csv", labels);
}

}  // namespace gsaudit
