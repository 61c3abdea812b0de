#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "vessal/datastream.hpp"
#include "vessal/random.hpp"

using namespace vessal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

struct IdxFixture {
  std::string images = "fixture_images.idx";
  std::string labels = "fixture_labels.idx";

  IdxFixture() {
    std::vector<unsigned char> img;
    push_u32(img, 0x00000803);
    push_u32(img, 4);  // samples
    push_u32(img, 2);  // rows
    push_u32(img, 2);  // cols
    for (unsigned char v : {0, 51, 102, 153, 204, 255, 0, 255, 10, 20, 30, 40,
                            255, 0, 51, 204})
      img.push_back(v);
    write_bytes(images, img);

    std::vector<unsigned char> lab;
    push_u32(lab, 0x00000801);
    push_u32(lab, 4);
    for (unsigned char v : {0, 1, 2, 1}) lab.push_back(v);
    write_bytes(labels, lab);
  }
  ~IdxFixture() {
    std::remove(images.c_str());
    std::remove(labels.c_str());
  }
};

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& p, const std::string& text) : path(p) {
    std::ofstream out(path);
    out << text;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

// Plain logistic regression, the independent yardstick for separability.
double logistic_test_accuracy(const Dataset& train, const Dataset& test) {
  const int p = train.feature_dim();
  VectorXd w = VectorXd::Zero(p);
  double b = 0.0;
  const double lr = 0.5;
  for (int epoch = 0; epoch < 500; ++epoch) {
    VectorXd gw = VectorXd::Zero(p);
    double gb = 0.0;
    for (int i = 0; i < train.size(); ++i) {
      const double z = train.features.row(i).dot(w) + b;
      const double pr = 1.0 / (1.0 + std::exp(-z));
      const double err = pr - train.labels[static_cast<std::size_t>(i)];
      gw += err * train.features.row(i).transpose();
      gb += err;
    }
    w -= lr / train.size() * gw;
    b -= lr / train.size() * gb;
  }
  int hits = 0;
  for (int i = 0; i < test.size(); ++i) {
    const int pred = test.features.row(i).dot(w) + b >= 0.0 ? 1 : 0;
    if (pred == test.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / test.size();
}

}  // namespace

TEST_SUITE("datastream") {

TEST_CASE("dataset validation rejects malformed data") {
  Dataset d;
  d.features = MatrixXd::Ones(3, 2);
  d.labels = {0, 1, 0};
  d.class_count = 2;
  CHECK_NOTHROW(d.validate());

  Dataset empty = d;
  empty.features = MatrixXd(0, 2);
  empty.labels = {};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  Dataset mismatched = d;
  mismatched.labels = {0, 1};
  CHECK_THROWS_AS(mismatched.validate(), std::invalid_argument);

  Dataset infinite = d;
  infinite.features(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(infinite.validate(), std::invalid_argument);

  Dataset out_of_range = d;
  out_of_range.labels = {0, 2, 0};
  CHECK_THROWS_AS(out_of_range.validate(), std::invalid_argument);
}

TEST_CASE("subset picks rows in the requested order") {
  Dataset d;
  d.features = MatrixXd(4, 2);
  d.features << 0, 0, 1, 1, 2, 2, 3, 3;
  d.labels = {0, 1, 0, 1};
  d.class_count = 2;
  const Dataset s = subset(d, {3, 1});
  CHECK(s.size() == 2);
  CHECK(s.features(0, 0) == 3.0);
  CHECK(s.features(1, 0) == 1.0);
  CHECK(s.labels == std::vector<int>{1, 1});
  CHECK_THROWS_AS(subset(d, {0, 4}), std::invalid_argument);
  CHECK_THROWS_AS(subset(d, {-1}), std::invalid_argument);
}

TEST_CASE("gaussian mixture is balanced, valid, and seed-deterministic") {
  const Dataset a = synth_gaussian_mixture(103, 5, 4, 3.0, 42);
  CHECK_NOTHROW(a.validate());
  CHECK(a.size() == 103);
  CHECK(a.feature_dim() == 5);
  CHECK(a.class_count == 4);

  std::vector<int> counts(4, 0);
  for (int label : a.labels) ++counts[static_cast<std::size_t>(label)];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);

  const Dataset b = synth_gaussian_mixture(103, 5, 4, 3.0, 42);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  const Dataset c = synth_gaussian_mixture(103, 5, 4, 3.0, 43);
  CHECK(a.features != c.features);

  CHECK_THROWS_AS(synth_gaussian_mixture(3, 5, 4, 3.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_gaussian_mixture(10, 0, 2, 3.0, 1), std::invalid_argument);
}

TEST_CASE("zero separation leaves classes indistinguishable") {
  const TrainTestSplit split =
      synth_gaussian_mixture_split(1500, 1000, 4, 2, 0.0, 7);
  const double acc = logistic_test_accuracy(split.train, split.test);
  CHECK(std::abs(acc - 0.5) < 0.05);
}

TEST_CASE("wide separation is linearly separable") {
  const TrainTestSplit split =
      synth_gaussian_mixture_split(400, 400, 2, 2, 10.0, 3);
  CHECK(logistic_test_accuracy(split.train, split.test) > 0.99);
}

TEST_CASE("split variant produces consistent paired sets") {
  const TrainTestSplit split = synth_gaussian_mixture_split(60, 30, 3, 3, 4.0, 9);
  CHECK(split.train.size() == 60);
  CHECK(split.test.size() == 30);
  CHECK(split.train.class_count == 3);
  CHECK(split.test.class_count == 3);
  CHECK(split.train.split == Split::train);
  CHECK(split.test.split == Split::test);
  CHECK_NOTHROW(split.train.validate());
  CHECK_NOTHROW(split.test.validate());
  const TrainTestSplit again = synth_gaussian_mixture_split(60, 30, 3, 3, 4.0, 9);
  CHECK(split.train.features == again.train.features);
  CHECK(split.test.features == again.test.features);
}

TEST_CASE("idx fixture round-trips exact pixel values") {
  const IdxFixture fx;
  const Dataset d = load_idx(fx.images, fx.labels);
  CHECK(d.size() == 4);
  CHECK(d.feature_dim() == 4);
  CHECK(d.class_count == 3);
  CHECK(d.labels == std::vector<int>{0, 1, 2, 1});
  CHECK(d.features(0, 0) == 0.0);
  CHECK(d.features(0, 1) == 51.0 / 255.0);
  CHECK(d.features(0, 2) == 102.0 / 255.0);
  CHECK(d.features(0, 3) == 153.0 / 255.0);
  CHECK(d.features(1, 1) == 1.0);
  CHECK(d.features(3, 3) == 204.0 / 255.0);
}

TEST_CASE("idx loader rejects malformed files") {
  const IdxFixture fx;

  std::vector<unsigned char> bad_magic;
  push_u32(bad_magic, 0x00000999);
  push_u32(bad_magic, 1);
  push_u32(bad_magic, 1);
  push_u32(bad_magic, 1);
  bad_magic.push_back(7);
  write_bytes("bad_magic.idx", bad_magic);
  CHECK_THROWS_AS(load_idx("bad_magic.idx", fx.labels), ParseError);
  std::remove("bad_magic.idx");

  std::vector<unsigned char> truncated;
  push_u32(truncated, 0x00000803);
  push_u32(truncated, 4);
  push_u32(truncated, 2);
  push_u32(truncated, 2);
  truncated.push_back(1);  // 1 of 16 payload bytes
  write_bytes("truncated.idx", truncated);
  CHECK_THROWS_AS(load_idx("truncated.idx", fx.labels), ParseError);
  std::remove("truncated.idx");

  std::vector<unsigned char> short_labels;
  push_u32(short_labels, 0x00000801);
  push_u32(short_labels, 2);  // images say 4
  short_labels.push_back(0);
  short_labels.push_back(1);
  write_bytes("short_labels.idx", short_labels);
  CHECK_THROWS_AS(load_idx(fx.images, "short_labels.idx"), ParseError);
  std::remove("short_labels.idx");

  CHECK_THROWS_AS(load_idx("missing_file.idx", fx.labels), ParseError);
}

TEST_CASE("csv loads, scales to the unit interval, and zeroes constants") {
  const TempFile f("fixture.csv",
                   "alpha,label,beta\n"
                   "0.0,0,5.0\n"
                   "2.0,1,5.0\n"
                   "4.0,0,5.0\n"
                   "1.0,1,5.0\n");
  CsvSchema schema;
  schema.label_column = "label";
  schema.class_count = 2;
  const Dataset d = load_csv(f.path, schema);
  CHECK(d.size() == 4);
  CHECK(d.feature_dim() == 2);
  CHECK(d.labels == std::vector<int>{0, 1, 0, 1});
  CHECK(d.features(0, 0) == 0.0);
  CHECK(d.features(1, 0) == 0.5);
  CHECK(d.features(2, 0) == 1.0);
  CHECK(d.features(3, 0) == 0.25);
  // Constant column scales to zero.
  for (int i = 0; i < 4; ++i) CHECK(d.features(i, 1) == 0.0);
}

TEST_CASE("csv loader names the offending line") {
  CsvSchema schema;
  schema.label_column = "label";
  schema.class_count = 2;

  const TempFile bad_value("bad_value.csv", "a,label\n1.0,0\nfoo,1\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_value.path, schema),
                       doctest::Contains("line 3"), ParseError);

  const TempFile bad_label("bad_label.csv", "a,label\n1.0,0\n2.0,1.5\n");
  CHECK_THROWS_AS(load_csv(bad_label.path, schema), ParseError);

  const TempFile out_of_range("oor_label.csv", "a,label\n1.0,0\n2.0,7\n");
  CHECK_THROWS_AS(load_csv(out_of_range.path, schema), ParseError);

  const TempFile no_column("no_col.csv", "a,b\n1.0,2.0\n");
  CHECK_THROWS_AS(load_csv(no_column.path, schema), ParseError);

  const TempFile ragged("ragged.csv", "a,label\n1.0,0\n2.0\n");
  CHECK_THROWS_AS(load_csv(ragged.path, schema), ParseError);

  CsvSchema invalid;
  invalid.label_column = "label";
  invalid.class_count = 1;
  const TempFile fine("fine.csv", "a,label\n1.0,0\n");
  CHECK_THROWS_AS(load_csv(fine.path, invalid), ParseError);
}

TEST_CASE("principal component is axis-aligned for axis-aligned variance") {
  MatrixXd x(4, 3);
  x << -3, 1, 2,
       -1, 1, 2,
        1, 1, 2,
        3, 1, 2;
  const PcaResult pca = first_principal_component(x);
  CHECK(!pca.degenerate);
  CHECK(pca.direction(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(pca.direction(1)) < 1e-8);
  CHECK(std::abs(pca.direction(2)) < 1e-8);
}

TEST_CASE("principal component matches a dense eigensolver") {
  Rng rng(31);
  MatrixXd x(50, 6);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 6; ++j)
      x(i, j) = rng.gaussian() * (1.0 + j);  // distinct spectrum
  const PcaResult pca = first_principal_component(x);
  REQUIRE(!pca.degenerate);

  const MatrixXd centered = x.rowwise() - x.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered / (x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const VectorXd top = eig.eigenvectors().col(5);
  const double dot = std::abs(top.dot(pca.direction));
  CHECK(1.0 - dot < 5e-11);
  CHECK(pca.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("isotropic data is flagged degenerate") {
  // All eight sign patterns in 3-d: exactly isotropic covariance.
  MatrixXd x(8, 3);
  int row = 0;
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) x.row(row++) << a, b, c;
  const PcaResult pca = first_principal_component(x);
  CHECK(pca.degenerate);
  CHECK(pca.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("principal component rejects degenerate input") {
  CHECK_THROWS_AS(first_principal_component(MatrixXd::Ones(1, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(first_principal_component(MatrixXd::Ones(5, 3)),
                  std::invalid_argument);
}

TEST_CASE("stream orderings are reproducible bijections") {
  const Dataset d = synth_gaussian_mixture(200, 4, 3, 2.0, 5);
  for (const StreamOrder& order :
       {StreamOrder::shuffled(9), StreamOrder::pca_sorted(false),
        StreamOrder::pca_sorted(true), StreamOrder::given()}) {
    const std::vector<int> perm = order_stream(d, order);
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == iota_permutation(200));
    CHECK(order_stream(d, order) == perm);
  }
  CHECK(order_stream(d, StreamOrder::shuffled(9)) !=
        order_stream(d, StreamOrder::shuffled(10)));
  CHECK(order_stream(d, StreamOrder::given()) == iota_permutation(200));

  Dataset empty;
  empty.features = MatrixXd(0, 4);
  empty.class_count = 3;
  CHECK_THROWS_AS(order_stream(empty, StreamOrder::given()),
                  std::invalid_argument);
}

TEST_CASE("pca sort on one feature is a plain value sort") {
  Dataset d;
  d.features = MatrixXd(5, 1);
  d.features << 3.0, -1.0, 2.0, 0.0, 1.0;
  d.labels = {0, 0, 0, 0, 0};
  d.class_count = 2;
  CHECK(order_stream(d, StreamOrder::pca_sorted(false)) ==
        std::vector<int>{1, 3, 4, 2, 0});
  CHECK(order_stream(d, StreamOrder::pca_sorted(true)) ==
        std::vector<int>{0, 2, 4, 3, 1});
}

TEST_CASE("pca sort projections are monotone along the stream") {
  const Dataset d = synth_gaussian_mixture(150, 5, 3, 3.0, 13);
  const std::vector<int> perm = order_stream(d, StreamOrder::pca_sorted(false));
  const PcaResult pca = first_principal_component(d.features);
  double prev = -std::numeric_limits<double>::infinity();
  for (int idx : perm) {
    const double proj = d.features.row(idx).dot(pca.direction);
    CHECK(proj >= prev);
    prev = proj;
  }
}

TEST_CASE("pca sort ignores a constant shift of all features") {
  const Dataset base = synth_gaussian_mixture(120, 4, 2, 3.0, 17);
  Dataset shifted = base;
  shifted.features.rowwise() += Eigen::RowVector4d(100.0, -40.0, 7.5, 0.25);
  CHECK(order_stream(base, StreamOrder::pca_sorted(false)) ==
        order_stream(shifted, StreamOrder::pca_sorted(false)));
  CHECK(order_stream(base, StreamOrder::pca_sorted(true)) ==
        order_stream(shifted, StreamOrder::pca_sorted(true)));
}

TEST_CASE("dataset cache round-trips exactly") {
  const Dataset d = synth_gaussian_mixture(64, 6, 4, 2.5, 21);
  const std::string path = "cache_roundtrip.bin";
  save_dataset_cache(d, path);
  const Dataset back = load_dataset_cache(path);
  std::remove(path.c_str());
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  CHECK(back.class_count == d.class_count);
  CHECK(back.split == d.split);
}

TEST_CASE("dataset cache rejects corruption") {
  const TempFile junk("junk.bin", "VXX1 not a cache");
  CHECK_THROWS_AS(load_dataset_cache(junk.path), ParseError);
  CHECK_THROWS_AS(load_dataset_cache("missing.bin"), ParseError);

  const Dataset d = synth_gaussian_mixture(10, 2, 2, 1.0, 1);
  save_dataset_cache(d, "trunc.bin");
  std::ifstream in("trunc.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  write_bytes("trunc.bin",
              std::vector<unsigned char>(bytes.begin(), bytes.begin() + 30));
  CHECK_THROWS_AS(load_dataset_cache("trunc.bin"), ParseError);
  std::remove("trunc.bin");
}

}  // TEST_SUITE
