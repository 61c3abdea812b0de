#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace vessal {

enum class Split { train, test };

/// A labeled feature table: one row per sample, labels in [0, class_count).
struct Dataset {
  Eigen::MatrixXd features;  // n x p
  std::vector<int> labels;   // length n
  int class_count = 0;
  Split split = Split::train;

  int size() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  /// Throws std::invalid_argument if the invariants are broken:
  /// n >= 1, labels match rows and lie in range, all features finite.
  void validate() const;
};

/// New dataset holding the given rows in the given order (repeats allowed).
Dataset subset(const Dataset& data, const std::vector<int>& rows);

}  // namespace vessal
