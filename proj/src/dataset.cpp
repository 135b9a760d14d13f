#include "sgas/dataset.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sgas {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Zero mean / unit variance per column; constant columns stay at zero.
void standardize_columns(RowMat& m) {
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mu = m.col(c).mean();
    m.col(c).array() -= mu;
    const double sd = std::sqrt(m.col(c).squaredNorm() / n);
    if (sd > 1e-12) m.col(c) /= sd;
  }
}

// Zero-pad raw columns to `width` and apply a seeded random rotation so every
// final coordinate mixes the informative ones.
RowMat embed_rotated(const RowMat& raw, int width, Rng rot_rng) {
  if (width < raw.cols()) throw Error("dataset: width smaller than raw dimension");
  RowMat padded = RowMat::Zero(raw.rows(), width);
  padded.leftCols(raw.cols()) = raw;

  Eigen::MatrixXd g(width, width);
  for (int i = 0; i < width; ++i)
    for (int j = 0; j < width; ++j) g(i, j) = rot_rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < width; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return padded * q.transpose();
}

void check_generator_args(int n_per_class, int classes) {
  if (n_per_class < 1) throw Error("dataset: n_per_class must be >= 1");
  if (classes < 2) throw Error("dataset: classes must be >= 2");
}

[[noreturn]] void csv_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw Error("csv " + path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

Dataset make_spirals(int n_per_class, int classes, double noise, std::uint64_t seed, int width) {
  check_generator_args(n_per_class, classes);
  if (noise < 0.0) throw Error("dataset: noise must be >= 0");
  Rng root(seed);
  Rng noise_rng = root.stream("spiral-noise");

  const int n = n_per_class * classes;
  RowMat raw(n, 2);
  Dataset ds;
  ds.labels.resize(n);
  // one full turn per arm; the radial gap between arms stays well above the
  // noise scale so moderate noise blurs but does not destroy the classes
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      const double t = (i + 0.5) / n_per_class;
      const double r = 0.3 + 1.7 * t;
      const double theta = kTau * (t + static_cast<double>(c) / classes);
      const int row = c * n_per_class + i;
      raw(row, 0) = r * std::cos(theta) + noise * noise_rng.normal();
      raw(row, 1) = r * std::sin(theta) + noise * noise_rng.normal();
      ds.labels[row] = c;
    }
  }
  ds.features = embed_rotated(raw, width, root.stream("embed-rotation"));
  standardize_columns(ds.features);
  ds.classes = classes;
  return ds;
}

Dataset make_blobs(int n_per_class, int classes, double spread, std::uint64_t seed, int width) {
  check_generator_args(n_per_class, classes);
  if (spread < 0.0) throw Error("dataset: spread must be >= 0");
  Rng root(seed);
  Rng noise_rng = root.stream("blob-noise");

  const int n = n_per_class * classes;
  RowMat raw = RowMat::Zero(n, classes);
  Dataset ds;
  ds.labels.resize(n);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      const int row = c * n_per_class + i;
      for (int d = 0; d < classes; ++d) {
        raw(row, d) = (d == c ? 3.0 : 0.0) + spread * noise_rng.normal();
      }
      ds.labels[row] = c;
    }
  }
  ds.features = embed_rotated(raw, width, root.stream("embed-rotation"));
  standardize_columns(ds.features);
  ds.classes = classes;
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error("csv " + path + ": cannot open");

  std::string line;
  if (!std::getline(in, line)) csv_fail(path, 1, "empty file");
  const std::vector<std::string> header = split_line(line);
  int label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_col = static_cast<int>(i);
  }
  if (label_col < 0) csv_fail(path, 1, "unknown label column '" + label_column + "'");
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) csv_fail(path, 1, "no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> label_names;  // category index by first appearance
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      csv_fail(path, line_no,
               "ragged row: " + std::to_string(cells.size()) + " cells, expected " +
                   std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<int>(i) == label_col) {
        const std::string& tok = cells[i];
        int id = -1;
        for (std::size_t k = 0; k < label_names.size(); ++k) {
          if (label_names[k] == tok) id = static_cast<int>(k);
        }
        if (id < 0) {
          id = static_cast<int>(label_names.size());
          label_names.push_back(tok);
        }
        labels.push_back(id);
      } else {
        double v = 0.0;
        const char* first = cells[i].data();
        const char* last = first + cells[i].size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
          csv_fail(path, line_no, "non-numeric feature '" + cells[i] + "' in column " +
                                      header[i]);
        }
        values.push_back(v);
      }
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) csv_fail(path, line_no, "no data rows");

  Dataset ds;
  ds.features.resize(n, dim);
  for (Eigen::Index r = 0; r < n; ++r)
    for (int c = 0; c < dim; ++c) ds.features(r, c) = values[r * dim + c];
  ds.labels = std::move(labels);
  ds.classes = static_cast<int>(label_names.size());
  standardize_columns(ds.features);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("csv " + path + ": cannot open for writing");
  for (Eigen::Index c = 0; c < ds.dim(); ++c) out << "f" << c << ",";
  out << "label\n";
  char buf[40];
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(r, c));
      out << buf << ",";
    }
    out << ds.labels[r] << "\n";
  }
  if (!out) throw Error("csv " + path + ": write failed");
}

Dataset split(Dataset ds, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw Error("split: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("split: fractions must sum to 1");

  ds.w_train.clear();
  ds.alpha_val.clear();
  ds.test.clear();
  std::array<std::vector<int>*, 3> out = {&ds.w_train, &ds.alpha_val, &ds.test};

  Rng rng = Rng(seed).stream("split");
  for (int c = 0; c < ds.classes; ++c) {
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == c) idx.push_back(static_cast<int>(i));
    }
    const int nc = static_cast<int>(idx.size());
    if (nc == 0) throw Error("split: class " + std::to_string(c) + " has no samples");
    rng.shuffle(idx);

    // largest-remainder allocation, then guarantee one sample per active split
    std::array<int, 3> take{};
    std::array<double, 3> frac{};
    int used = 0;
    for (int k = 0; k < 3; ++k) {
      const double want = fractions[k] * nc;
      take[k] = static_cast<int>(want);
      frac[k] = want - take[k];
      used += take[k];
    }
    for (int left = nc - used; left > 0; --left) {
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (frac[k] > frac[best]) best = k;
      }
      ++take[best];
      frac[best] = -1.0;
    }
    for (int k = 0; k < 3; ++k) {
      if (fractions[k] > 0.0 && take[k] == 0) {
        throw Error("split: class " + std::to_string(c) + " with " + std::to_string(nc) +
                    " samples cannot cover all splits");
      }
    }
    int pos = 0;
    for (int k = 0; k < 3; ++k) {
      for (int t = 0; t < take[k]; ++t) out[k]->push_back(idx[pos++]);
    }
  }
  for (auto* v : out) std::sort(v->begin(), v->end());
  return ds;
}

Tensor gather_features(const Dataset& ds, std::span<const int> idx) {
  const Eigen::Index d = ds.dim();
  Vec out(static_cast<Eigen::Index>(idx.size()) * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.segment(static_cast<Eigen::Index>(r) * d, d) = ds.features.row(idx[r]);
  }
  return Tensor::from(std::move(out), {static_cast<Eigen::Index>(idx.size()), d});
}

std::vector<int> gather_labels(const Dataset& ds, std::span<const int> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(ds.labels[i]);
  return out;
}

}  // namespace sgas
