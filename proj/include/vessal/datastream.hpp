#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vessal/dataset.hpp"

namespace vessal {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StreamOrder {
  enum class Kind { shuffled, pca_sorted, given };
  Kind kind = Kind::shuffled;
  std::uint64_t seed = 0;   // shuffled only
  bool descending = false;  // pca_sorted only

  static StreamOrder shuffled(std::uint64_t seed) {
    StreamOrder o;
    o.kind = Kind::shuffled;
    o.seed = seed;
    return o;
  }
  static StreamOrder pca_sorted(bool descending = false) {
    StreamOrder o;
    o.kind = Kind::pca_sorted;
    o.descending = descending;
    return o;
  }
  static StreamOrder given() {
    StreamOrder o;
    o.kind = Kind::given;
    return o;
  }
};

struct PcaResult {
  Eigen::VectorXd direction;  // unit length, largest-magnitude entry positive
  bool degenerate = false;    // top eigenvalue not separated from the second
  int iterations = 0;
};

/// Balanced Gaussian mixture: class means sit at separation * u_c for unit
/// directions u_c chosen to spread apart, with unit-covariance noise. Rows
/// are grouped by class (class 0 block first). Deterministic by seed.
Dataset synth_gaussian_mixture(int n, int p, int class_count, double separation,
                               std::uint64_t seed);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Train and test sets drawn from one mixture (same means, disjoint noise).
TrainTestSplit synth_gaussian_mixture_split(int n_train, int n_test, int p,
                                            int class_count, double separation,
                                            std::uint64_t seed);

/// IDX ingestion (big-endian magic + dims + ubyte payload); pixels scaled to
/// [0,1]. The label file drives class_count via the largest label seen.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

struct CsvSchema {
  std::string label_column;
  int class_count = 0;
};

/// Headered CSV with one label column named by the schema; every other
/// column is a numeric feature, min-max scaled to [0,1] per column
/// (constant columns map to 0).
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Top eigenvector of the mean-centered covariance by power iteration.
/// Requires n >= 2 rows. Throws std::invalid_argument on zero-variance data.
PcaResult first_principal_component(const Eigen::MatrixXd& x);

/// Permutation of [0, n) realizing the requested ordering.
std::vector<int> order_stream(const Dataset& data, const StreamOrder& order);

/// Versioned binary cache of a dataset (little-endian).
void save_dataset_cache(const Dataset& data, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

}  // namespace vessal
