#include "vessal/datastream.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "vessal/random.hpp"

namespace vessal {

void Dataset::validate() const {
  if (size() < 1) throw std::invalid_argument("dataset: empty");
  if (static_cast<int>(labels.size()) != size())
    throw std::invalid_argument("dataset: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(size()) +
                                " rows");
  if (!features.allFinite())
    throw std::invalid_argument("dataset: non-finite feature values");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= class_count)
      throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) +
                                  " at row " + std::to_string(i) +
                                  " outside [0, " + std::to_string(class_count) +
                                  ")");
}

Dataset subset(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.features.resize(static_cast<int>(rows.size()), data.feature_dim());
  out.labels.resize(rows.size());
  out.class_count = data.class_count;
  out.split = data.split;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= data.size())
      throw std::invalid_argument("subset: row " + std::to_string(r) +
                                  " outside [0, " + std::to_string(data.size()) +
                                  ")");
    out.features.row(static_cast<int>(i)) = data.features.row(r);
    out.labels[i] = data.labels[static_cast<std::size_t>(r)];
  }
  return out;
}

namespace {

// Class means at separation * u_c. The directions are the best of 100 random
// candidate sets by minimum pairwise distance, so classes spread apart
// instead of landing on whatever the first draw gives.
Eigen::MatrixXd mixture_means(int p, int class_count, double separation,
                              std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d65616eULL));
  Eigen::MatrixXd best(class_count, p);
  double best_score = -1.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd dirs(class_count, p);
    for (int c = 0; c < class_count; ++c) {
      for (int j = 0; j < p; ++j) dirs(c, j) = rng.gaussian();
      const double norm = dirs.row(c).norm();
      if (norm > 1e-300)
        dirs.row(c) /= norm;
      else
        dirs.row(c) = Eigen::RowVectorXd::Unit(p, 0);
    }
    double score = std::numeric_limits<double>::infinity();
    for (int a = 0; a < class_count; ++a)
      for (int b = a + 1; b < class_count; ++b)
        score = std::min(score, (dirs.row(a) - dirs.row(b)).norm());
    if (class_count == 1) score = 0.0;
    if (score > best_score) {
      best_score = score;
      best = dirs;
    }
  }
  return separation * best;
}

std::vector<int> balanced_counts(int n, int class_count) {
  std::vector<int> counts(static_cast<std::size_t>(class_count), n / class_count);
  for (int c = 0; c < n % class_count; ++c) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

void check_mixture_args(int n, int p, int class_count) {
  if (class_count < 1)
    throw std::invalid_argument("synth_gaussian_mixture: class_count must be >= 1");
  if (n < class_count)
    throw std::invalid_argument("synth_gaussian_mixture: n=" + std::to_string(n) +
                                " < class_count=" + std::to_string(class_count));
  if (p < 1) throw std::invalid_argument("synth_gaussian_mixture: p must be >= 1");
}

}  // namespace

Dataset synth_gaussian_mixture(int n, int p, int class_count, double separation,
                               std::uint64_t seed) {
  check_mixture_args(n, p, class_count);
  const Eigen::MatrixXd means = mixture_means(p, class_count, separation, seed);
  Rng noise(derive_seed(seed, 0x6e6f6973ULL));

  Dataset out;
  out.features.resize(n, p);
  out.labels.resize(static_cast<std::size_t>(n));
  out.class_count = class_count;
  out.split = Split::train;

  const std::vector<int> counts = balanced_counts(n, class_count);
  int row = 0;
  for (int c = 0; c < class_count; ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (int j = 0; j < p; ++j)
        out.features(row, j) = means(c, j) + noise.gaussian();
      out.labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return out;
}

TrainTestSplit synth_gaussian_mixture_split(int n_train, int n_test, int p,
                                            int class_count, double separation,
                                            std::uint64_t seed) {
  check_mixture_args(n_train, p, class_count);
  check_mixture_args(n_test, p, class_count);
  const Eigen::MatrixXd means = mixture_means(p, class_count, separation, seed);
  Rng noise(derive_seed(seed, 0x6e6f6973ULL));

  TrainTestSplit out;
  out.train.features.resize(n_train, p);
  out.train.labels.resize(static_cast<std::size_t>(n_train));
  out.train.class_count = class_count;
  out.train.split = Split::train;
  out.test.features.resize(n_test, p);
  out.test.labels.resize(static_cast<std::size_t>(n_test));
  out.test.class_count = class_count;
  out.test.split = Split::test;

  const std::vector<int> train_counts = balanced_counts(n_train, class_count);
  const std::vector<int> test_counts = balanced_counts(n_test, class_count);
  int train_row = 0, test_row = 0;
  for (int c = 0; c < class_count; ++c) {
    for (int i = 0; i < train_counts[static_cast<std::size_t>(c)]; ++i, ++train_row) {
      for (int j = 0; j < p; ++j)
        out.train.features(train_row, j) = means(c, j) + noise.gaussian();
      out.train.labels[static_cast<std::size_t>(train_row)] = c;
    }
    for (int i = 0; i < test_counts[static_cast<std::size_t>(c)]; ++i, ++test_row) {
      for (int j = 0; j < p; ++j)
        out.test.features(test_row, j) = means(c, j) + noise.gaussian();
      out.test.labels[static_cast<std::size_t>(test_row)] = c;
    }
  }
  return out;
}

namespace {

std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_be_u32(const std::vector<std::uint8_t>& bytes,
                          std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size())
    throw ParseError(path + ": truncated at byte " + std::to_string(offset) +
                     " reading a 4-byte field");
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::string hex_u32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  constexpr std::uint32_t kImagesMagic = 0x00000803;  // ubyte, 3 dims
  constexpr std::uint32_t kLabelsMagic = 0x00000801;  // ubyte, 1 dim

  const std::vector<std::uint8_t> img = read_all_bytes(images_path);
  const std::uint32_t img_magic = read_be_u32(img, 0, images_path);
  if (img_magic != kImagesMagic)
    throw ParseError(images_path + ": bad magic " + hex_u32(img_magic) +
                     " at byte 0, want " + hex_u32(kImagesMagic));
  const std::uint32_t n = read_be_u32(img, 4, images_path);
  const std::uint32_t rows = read_be_u32(img, 8, images_path);
  const std::uint32_t cols = read_be_u32(img, 12, images_path);
  const std::size_t pixel_count =
      static_cast<std::size_t>(n) * rows * cols;
  if (img.size() != 16 + pixel_count)
    throw ParseError(images_path + ": payload is " +
                     std::to_string(img.size() - std::min<std::size_t>(16, img.size())) +
                     " bytes from byte 16, want " + std::to_string(pixel_count));

  const std::vector<std::uint8_t> lab = read_all_bytes(labels_path);
  const std::uint32_t lab_magic = read_be_u32(lab, 0, labels_path);
  if (lab_magic != kLabelsMagic)
    throw ParseError(labels_path + ": bad magic " + hex_u32(lab_magic) +
                     " at byte 0, want " + hex_u32(kLabelsMagic));
  const std::uint32_t ln = read_be_u32(lab, 4, labels_path);
  if (ln != n)
    throw ParseError(labels_path + ": " + std::to_string(ln) +
                     " labels for " + std::to_string(n) + " images");
  if (lab.size() != 8 + static_cast<std::size_t>(ln))
    throw ParseError(labels_path + ": payload is " +
                     std::to_string(lab.size() - std::min<std::size_t>(8, lab.size())) +
                     " bytes from byte 8, want " + std::to_string(ln));
  if (n == 0) throw ParseError(images_path + ": zero samples");

  Dataset out;
  const int dim = static_cast<int>(rows * cols);
  out.features.resize(static_cast<int>(n), dim);
  out.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t base = 16 + static_cast<std::size_t>(i) * rows * cols;
    for (int j = 0; j < dim; ++j)
      out.features(static_cast<int>(i), j) =
          static_cast<double>(img[base + static_cast<std::size_t>(j)]) / 255.0;
    const int label = lab[8 + i];
    out.labels[i] = label;
    max_label = std::max(max_label, label);
  }
  out.class_count = std::max(2, max_label + 1);
  out.split = Split::train;
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell_double(const std::string& cell, const std::string& path,
                         int line_no, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || !std::isfinite(v))
    throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                     column + "': non-numeric value '" + cell + "'");
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.class_count < 2)
    throw ParseError("csv schema: class_count must be >= 2");
  if (schema.label_column.empty())
    throw ParseError("csv schema: label_column must be set");

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path + ": empty file, want a header line");
  const std::vector<std::string> header = split_csv_line(line);
  int label_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == schema.label_column) label_col = static_cast<int>(j);
  if (label_col < 0)
    throw ParseError(path + ": header has no column '" + schema.label_column + "'");
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1) throw ParseError(path + ": no feature columns besides the label");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, want " +
                       std::to_string(header.size()));
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(p));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<int>(j) == label_col) {
        const double v =
            parse_cell_double(cells[j], path, line_no, header[j]);
        const int label = static_cast<int>(v);
        if (static_cast<double>(label) != v || label < 0 ||
            label >= schema.class_count)
          throw ParseError(path + ": line " + std::to_string(line_no) +
                           ": label '" + cells[j] + "' outside [0, " +
                           std::to_string(schema.class_count) + ")");
        labels.push_back(label);
      } else {
        row.push_back(parse_cell_double(cells[j], path, line_no, header[j]));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Dataset out;
  out.features.resize(static_cast<int>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < p; ++j)
      out.features(static_cast<int>(i), j) = rows[i][static_cast<std::size_t>(j)];
  out.labels = std::move(labels);
  out.class_count = schema.class_count;
  out.split = Split::train;

  for (int j = 0; j < p; ++j) {
    const double lo = out.features.col(j).minCoeff();
    const double hi = out.features.col(j).maxCoeff();
    if (hi > lo)
      out.features.col(j) = (out.features.col(j).array() - lo) / (hi - lo);
    else
      out.features.col(j).setZero();
  }
  return out;
}

namespace {

// Flip so the largest-magnitude entry is positive; first such entry wins ties.
void canonicalize_sign(Eigen::VectorXd& v) {
  int arg = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
  if (v(arg) < 0.0) v = -v;
}

struct PowerResult {
  Eigen::VectorXd vec;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

PowerResult power_iterate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, int p) {
  constexpr int kMaxIterations = 10000;
  constexpr double kTolerance = 1e-8;

  Rng rng(0x70636131ULL);
  Eigen::VectorXd v(p);
  for (int i = 0; i < p; ++i) v(i) = rng.gaussian();
  v.normalize();
  canonicalize_sign(v);

  PowerResult out;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    Eigen::VectorXd next = apply(v);
    const double norm = next.norm();
    if (norm <= 1e-300) {
      // Operator annihilates the iterate: eigenvalue 0 along here.
      out.vec = v;
      out.value = 0.0;
      out.converged = true;
      out.iterations = iter;
      return out;
    }
    next /= norm;
    canonicalize_sign(next);
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v = next;
    out.iterations = iter;
    if (diff < kTolerance) {
      out.converged = true;
      break;
    }
  }
  out.vec = v;
  out.value = v.dot(apply(v));
  return out;
}

}  // namespace

PcaResult first_principal_component(const Eigen::MatrixXd& x) {
  if (x.rows() < 2)
    throw std::invalid_argument("first_principal_component: need >= 2 rows, got " +
                                std::to_string(x.rows()));
  const int p = static_cast<int>(x.cols());
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  if (xc.squaredNorm() <= 1e-18 * std::max(1.0, x.squaredNorm()))
    throw std::invalid_argument("first_principal_component: zero-variance data");

  const double denom = static_cast<double>(x.rows() - 1);
  const auto apply = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((xc.transpose() * (xc * v)) / denom);
  };
  const PowerResult top = power_iterate(apply, p);

  // Deflate and look for a second eigenvalue tied with the first; a tie means
  // the leading direction is arbitrary.
  const Eigen::VectorXd v1 = top.vec;
  const double l1 = top.value;
  const auto apply2 = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(apply(v) - l1 * v1 * v1.dot(v));
  };
  const PowerResult second = power_iterate(apply2, p);

  PcaResult out;
  out.direction = v1;
  out.iterations = top.iterations;
  out.degenerate = !top.converged || second.value >= l1 * (1.0 - 1e-6);
  return out;
}

std::vector<int> order_stream(const Dataset& data, const StreamOrder& order) {
  if (data.size() < 1)
    throw std::invalid_argument("order_stream: empty dataset");
  std::vector<int> perm = iota_permutation(data.size());
  switch (order.kind) {
    case StreamOrder::Kind::given:
      return perm;
    case StreamOrder::Kind::shuffled: {
      Rng rng(order.seed);
      seeded_shuffle(perm, rng);
      return perm;
    }
    case StreamOrder::Kind::pca_sorted: {
      if (data.size() == 1) return perm;
      const PcaResult pca = first_principal_component(data.features);
      const Eigen::VectorXd proj = data.features * pca.direction;
      if (order.descending)
        std::stable_sort(perm.begin(), perm.end(),
                         [&](int a, int b) { return proj(a) > proj(b); });
      else
        std::stable_sort(perm.begin(), perm.end(),
                         [&](int a, int b) { return proj(a) < proj(b); });
      return perm;
    }
  }
  throw std::logic_error("order_stream: unhandled ordering kind");
}

namespace {

constexpr char kCacheMagic[4] = {'V', 'D', 'S', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path, std::size_t& offset) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ParseError(path + ": truncated at byte " + std::to_string(offset));
  offset += sizeof(T);
  return v;
}

}  // namespace

void save_dataset_cache(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kCacheMagic, 4);
  write_raw(out, static_cast<std::int64_t>(data.size()));
  write_raw(out, static_cast<std::int64_t>(data.feature_dim()));
  write_raw(out, static_cast<std::int32_t>(data.class_count));
  write_raw(out, static_cast<std::uint8_t>(data.split == Split::test ? 1 : 0));
  for (int i = 0; i < data.size(); ++i)
    for (int j = 0; j < data.feature_dim(); ++j)
      write_raw(out, data.features(i, j));
  for (int label : data.labels) write_raw(out, static_cast<std::int32_t>(label));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  char magic[4];
  if (!in.read(magic, 4))
    throw ParseError(path + ": truncated at byte 0");
  if (std::memcmp(magic, kCacheMagic, 4) != 0)
    throw ParseError(path + ": bad magic at byte 0, want VDS1");

  std::size_t offset = 4;
  const std::int64_t n = read_raw<std::int64_t>(in, path, offset);
  const std::int64_t p = read_raw<std::int64_t>(in, path, offset);
  const std::int32_t classes = read_raw<std::int32_t>(in, path, offset);
  const std::uint8_t split = read_raw<std::uint8_t>(in, path, offset);
  if (n < 1 || p < 1 || classes < 1 || split > 1)
    throw ParseError(path + ": invalid header fields");

  Dataset out;
  out.features.resize(static_cast<int>(n), static_cast<int>(p));
  out.labels.resize(static_cast<std::size_t>(n));
  out.class_count = classes;
  out.split = split == 1 ? Split::test : Split::train;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      out.features(i, j) = read_raw<double>(in, path, offset);
  for (std::int64_t i = 0; i < n; ++i)
    out.labels[static_cast<std::size_t>(i)] = read_raw<std::int32_t>(in, path, offset);
  out.validate();
  return out;
}

}  // namespace vessal
