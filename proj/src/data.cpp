#include "hybridloss/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hybridloss {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

}  // namespace

CsvSchema CsvSchema::parse(const std::string& text) {
  CsvSchema schema;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("schema line is not key = value: " + line);
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "label") {
      schema.label_column = value;
    } else if (key == "classes") {
      for (const std::string& c : split_csv_line(value)) schema.classes.push_back(c);
    } else if (key == "drop") {
      for (const std::string& c : split_csv_line(value)) schema.drop_columns.push_back(c);
    } else {
      throw std::invalid_argument("unknown schema key: " + key);
    }
  }
  if (schema.label_column.empty()) throw std::invalid_argument("schema missing label column");
  if (schema.classes.size() < 2) throw std::invalid_argument("schema needs >= 2 classes");
  return schema;
}

CsvSchema CsvSchema::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  std::vector<std::string> header = split_csv_line(line);

  Index label_col = -1;
  std::vector<Index> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) {
      label_col = static_cast<Index>(c);
    } else if (std::find(schema.drop_columns.begin(), schema.drop_columns.end(), header[c]) ==
               schema.drop_columns.end()) {
      feature_cols.push_back(static_cast<Index>(c));
    }
  }
  if (label_col < 0) {
    throw std::runtime_error("label column '" + schema.label_column + "' not in header of " + path);
  }

  const Index d = static_cast<Index>(feature_cols.size());
  const int k = static_cast<int>(schema.classes.size());

  std::vector<double> feat_values;
  std::vector<int> class_ids;
  Index dropped = 0;
  std::size_t row_number = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path + ": row " + std::to_string(row_number) +
                               " has wrong column count");
    }
    bool missing = is_missing(cells[static_cast<std::size_t>(label_col)]);
    for (Index c : feature_cols) missing = missing || is_missing(cells[static_cast<std::size_t>(c)]);
    if (missing) {
      ++dropped;
      continue;
    }

    const std::string& label = cells[static_cast<std::size_t>(label_col)];
    auto it = std::find(schema.classes.begin(), schema.classes.end(), label);
    if (it == schema.classes.end()) {
      throw std::runtime_error(path + ": row " + std::to_string(row_number) +
                               " has unknown class label '" + label + "'");
    }
    class_ids.push_back(static_cast<int>(it - schema.classes.begin()));

    for (Index c : feature_cols) {
      const std::string& cell = cells[static_cast<std::size_t>(c)];
      try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        feat_values.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": row " + std::to_string(row_number) +
                                 " has unparseable value '" + cell + "'");
      }
    }
  }

  const Index n = static_cast<Index>(class_ids.size());
  if (n == 0) throw std::runtime_error(path + ": no usable rows");

  Dataset ds;
  ds.name = path;
  ds.dropped_rows = dropped;
  ds.class_count = k;
  ds.features.resize(n, d);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) ds.features(r, c) = feat_values[static_cast<std::size_t>(r * d + c)];
  }
  if (k == 2) {
    ds.labels = Matrix::Zero(n, 1);
    for (Index r = 0; r < n; ++r) ds.labels(r, 0) = class_ids[static_cast<std::size_t>(r)];
  } else {
    ds.labels = Matrix::Zero(n, k);
    for (Index r = 0; r < n; ++r) ds.labels(r, class_ids[static_cast<std::size_t>(r)]) = 1.0;
  }
  return ds;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("IDX file truncated: " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open IDX file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open IDX file: " + labels_path);

  if (read_be_u32(img, images_path) != 0x00000803u) {
    throw std::runtime_error("bad IDX magic in " + images_path);
  }
  const std::uint32_t n_img = read_be_u32(img, images_path);
  const std::uint32_t rows = read_be_u32(img, images_path);
  const std::uint32_t cols = read_be_u32(img, images_path);

  if (read_be_u32(lab, labels_path) != 0x00000801u) {
    throw std::runtime_error("bad IDX magic in " + labels_path);
  }
  const std::uint32_t n_lab = read_be_u32(lab, labels_path);
  if (n_img != n_lab) {
    throw std::runtime_error("IDX image/label counts differ: " + images_path);
  }

  const Index n = static_cast<Index>(n_img);
  const Index d = static_cast<Index>(rows) * static_cast<Index>(cols);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n * d));
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
    throw std::runtime_error("IDX file truncated: " + images_path);
  }
  std::vector<unsigned char> raw_labels(static_cast<std::size_t>(n));
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()))) {
    throw std::runtime_error("IDX file truncated: " + labels_path);
  }

  int max_label = 0;
  for (unsigned char l : raw_labels) max_label = std::max(max_label, static_cast<int>(l));
  const int k = max_label + 1;

  Dataset ds;
  ds.name = images_path;
  ds.class_count = k;
  ds.features.resize(n, d);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) {
      ds.features(r, c) = static_cast<double>(pixels[static_cast<std::size_t>(r * d + c)]);
    }
  }
  ds.labels = Matrix::Zero(n, k);
  for (Index r = 0; r < n; ++r) ds.labels(r, raw_labels[static_cast<std::size_t>(r)]) = 1.0;
  return ds;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.feature_count() != b.feature_count() || a.label_width() != b.label_width() ||
      a.class_count != b.class_count) {
    throw std::invalid_argument("datasets are not concatenable");
  }
  Dataset out;
  out.name = a.name;
  out.class_count = a.class_count;
  out.dropped_rows = a.dropped_rows + b.dropped_rows;
  out.features.resize(a.size() + b.size(), a.feature_count());
  out.features << a.features, b.features;
  out.labels.resize(a.size() + b.size(), a.label_width());
  out.labels << a.labels, b.labels;
  return out;
}

Standardizer Standardizer::fit(const Matrix& train_features) {
  if (train_features.rows() == 0) {
    throw std::invalid_argument("cannot standardize with an empty training fold");
  }
  Standardizer s;
  const double n = static_cast<double>(train_features.rows());
  s.mean = train_features.colwise().mean();
  Matrix centered = train_features.rowwise() - s.mean.transpose();
  s.sigma = (centered.array().square().colwise().sum() / n).sqrt();
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size()) {
    throw std::invalid_argument("feature width does not match the fitted statistics");
  }
  Matrix out(features.rows(), features.cols());
  for (Index c = 0; c < features.cols(); ++c) {
    if (sigma[c] < 1e-12) {
      out.col(c).setZero();
    } else {
      out.col(c) = (features.col(c).array() - mean[c]) / sigma[c];
    }
  }
  return out;
}

Matrix standardize(const Matrix& train_features, const Matrix& apply_to) {
  return Standardizer::fit(train_features).apply(apply_to);
}

std::vector<Index> FoldPlan::test_indices(int fold) const {
  std::vector<Index> idx;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) idx.push_back(static_cast<Index>(i));
  }
  return idx;
}

std::vector<Index> FoldPlan::train_indices(int fold) const {
  std::vector<Index> idx;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) idx.push_back(static_cast<Index>(i));
  }
  return idx;
}

FoldPlan make_folds(Index n, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("fold count must be >= 1");
  if (n < k) throw std::invalid_argument("need at least one observation per fold");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(perm);

  FoldPlan plan;
  plan.fold_count = k;
  plan.seed = seed;
  plan.assignments.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) {
    plan.assignments[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace hybridloss
