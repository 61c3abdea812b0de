#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace vessal {

/// Streaming second-moment state for committal volume sampling.
///
/// Holds the regularized inverse covariance of the selected set,
/// inv_sigma = (lambda*I + sum_{selected} g g^T)^-1, and the running mean of
/// outer products over every observed point, mean_outer = (1/t) sum g g^T.
/// inv_sigma is kept symmetric positive definite; updates are O(d^2).
class CovarianceTracker {
 public:
  /// Starts with inv_sigma = I/lambda and mean_outer = 0.
  /// Throws std::invalid_argument for d < 1 or lambda <= 0.
  CovarianceTracker(int d, double lambda);

  /// Folds g into the running mean of outer products and increments the
  /// observation count: A <- (t-1)/t * A + (1/t) g g^T.
  void observe(const Eigen::VectorXd& g);

  /// Quadratic form g^T inv_sigma g. Strictly positive for nonzero g.
  double leverage(const Eigen::VectorXd& g) const;

  /// Rank-1 update of the inverse after selecting g:
  /// inv_sigma -= (inv_sigma g)(inv_sigma g)^T / (1 + g^T inv_sigma g).
  /// The result is re-symmetrized to stop floating-point drift from breaking
  /// positive definiteness over long runs.
  void woodbury_update(const Eigen::VectorXd& g);

  /// tr(inv_sigma * mean_outer), evaluated as the elementwise product sum
  /// rather than forming the matrix product.
  double trace_normalizer() const;

  int dim() const { return static_cast<int>(inv_sigma_.rows()); }
  double lambda() const { return lambda_; }
  long long seen() const { return seen_; }
  long long selected() const { return selected_; }
  const Eigen::MatrixXd& inv_sigma() const { return inv_sigma_; }
  const Eigen::MatrixXd& mean_outer() const { return mean_outer_; }

  /// Versioned JSON snapshot for resumable streams.
  std::string to_json() const;
  static CovarianceTracker from_json(const std::string& text);
  void save(const std::string& path) const;
  static CovarianceTracker load(const std::string& path);

 private:
  CovarianceTracker() = default;

  Eigen::MatrixXd inv_sigma_;
  Eigen::MatrixXd mean_outer_;
  long long seen_ = 0;
  long long selected_ = 0;
  double lambda_ = 0.0;
};

/// Dense Gaussian random projection (entries i.i.d. N(0, 1/out_dim)),
/// generated deterministically from the seed. Immutable once built.
class RandomProjection {
 public:
  /// Throws std::invalid_argument unless 1 <= out_dim <= in_dim.
  RandomProjection(std::uint64_t seed, int in_dim, int out_dim);

  /// Identity map of the given dimension (test hook).
  static RandomProjection identity(int dim);

  /// matrix * x. Throws std::invalid_argument on dimension mismatch.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  std::uint64_t seed() const { return seed_; }
  int in_dim() const { return static_cast<int>(matrix_.cols()); }
  int out_dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  RandomProjection() = default;

  std::uint64_t seed_ = 0;
  Eigen::MatrixXd matrix_;
};

}  // namespace vessal
