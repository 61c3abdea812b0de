#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vessal/random.hpp"

namespace vessal {

/// Snapshot of the unlabeled pool as one selection strategy sees it. The
/// embedding space is the caller's choice (gradient for k-means++, penultimate
/// for k-center); probs back the confidence selector. Labeled rows stay in
/// the matrix so indices line up with the dataset, but selectors never
/// return them.
struct Pool {
  Eigen::MatrixXd embeddings;      // n x d
  Eigen::MatrixXd probs;           // n x C (may be empty for distance-only use)
  std::vector<bool> labeled_mask;  // length n

  int size() const { return static_cast<int>(labeled_mask.size()); }
  int unlabeled_count() const;
};

/// BADGE selection: k-means++ seeding over gradient embeddings. The first
/// pick is proportional to squared norm, each next proportional to squared
/// distance to the nearest already-chosen point. Seeding only, no Lloyd
/// iterations. Throws std::invalid_argument when k exceeds the unlabeled
/// count.
std::vector<int> kmeanspp_select(const Pool& pool, int k, Rng& rng);

/// Greedy k-center over penultimate embeddings: labeled points are the
/// initial centers; each step adds the unlabeled point farthest from its
/// nearest center. Ties go to the lowest index.
std::vector<int> kcenter_greedy(const Pool& pool, int k);

/// Least-confidence: the k unlabeled samples with smallest max-class
/// probability, ties by lowest index.
std::vector<int> confidence_select(const Pool& pool, int k);

/// Uniform without replacement over the unlabeled rows.
std::vector<int> random_select(const Pool& pool, int k, Rng& rng);

}  // namespace vessal
