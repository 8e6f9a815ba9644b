#pragma once

#include "hybridloss/types.hpp"

#include <string>
#include <vector>

namespace hybridloss {

/// Immutable once loaded; freely shared read-only across parallel runs.
/// Labels are a single {0,1} column for two-class problems, one-hot rows
/// otherwise.
struct Dataset {
  std::string name;
  Matrix features;  // N x D, raw (unstandardized)
  Matrix labels;    // N x K
  int class_count = 0;
  Index dropped_rows = 0;  // rows removed for missing values

  Index size() const { return features.rows(); }
  Index feature_count() const { return features.cols(); }
  Index label_width() const { return labels.cols(); }
};

/// Declares how to read a labelled CSV: the label column, the class set (in
/// encoding order) and columns to ignore.
struct CsvSchema {
  std::string label_column;
  std::vector<std::string> classes;
  std::vector<std::string> drop_columns;

  static CsvSchema parse(const std::string& text);
  static CsvSchema parse_file(const std::string& path);
};

/// Reads a header-rowed CSV. Rows with missing cells (empty or "?") are
/// dropped and counted; anything else unparseable is an error naming the row.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Reads an images/labels pair in IDX binary format (big-endian dimensions).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Row-wise concatenation; shapes and class counts must agree.
Dataset concat(const Dataset& a, const Dataset& b);

/// Per-feature z-score fitted on a training fold, applied anywhere.
/// Features with near-zero spread map to 0. Population sigma (divide by n).
struct Standardizer {
  Vector mean;
  Vector sigma;

  static Standardizer fit(const Matrix& train_features);
  Matrix apply(const Matrix& features) const;
};

Matrix standardize(const Matrix& train_features, const Matrix& apply_to);

/// Assignment of every observation to one of `fold_count` folds, sizes
/// differing by at most one. Deterministic given the seed.
struct FoldPlan {
  int fold_count = 0;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<Index> test_indices(int fold) const;
  std::vector<Index> train_indices(int fold) const;
};

FoldPlan make_folds(Index n, int k, std::uint64_t seed);

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);

}  // namespace hybridloss
