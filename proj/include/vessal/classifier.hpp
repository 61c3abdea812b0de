#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vessal/dataset.hpp"

namespace vessal {

struct TrainConfig {
  double learning_rate = 0.001;
  double target_train_accuracy = 0.99;
  int max_epochs = 500;
  int minibatch_size = 32;
  std::uint64_t init_seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct ForwardResult {
  Eigen::VectorXd penultimate;  // hidden activations, the diversity features
  Eigen::VectorXd probs;        // softmax output, sums to 1
  int predicted = 0;            // argmax of probs, lowest index on ties
};

/// Two-layer ReLU MLP with a softmax head. The last layer (W2, b2) is the
/// anchor for gradient embeddings: an unlabeled point is represented by the
/// loss gradient it would induce there under its own predicted label, which
/// scales with model uncertainty and points along the penultimate features.
class Classifier {
 public:
  /// Fresh network with Glorot-uniform weights drawn from the seed;
  /// identical seeds give bit-identical parameters.
  static Classifier init(int input_dim, int hidden_dim, int class_count,
                         std::uint64_t seed);

  ForwardResult forward(const Eigen::VectorXd& x) const;

  /// Last-layer gradient of the cross-entropy loss at the hallucinated label
  /// yhat = predicted class. Layout: W2 row blocks by class index, then b2,
  /// giving dimension class_count * (hidden_dim + 1). Block c of the W2 part
  /// is (probs[c] - [c == yhat]) * penultimate; the b2 part is probs - e_yhat.
  Eigen::VectorXd gradient_embedding(const Eigen::VectorXd& x) const;

  /// Fraction of samples whose predicted class matches the label.
  /// Throws std::invalid_argument on an empty dataset.
  double accuracy(const Dataset& data) const;

  int input_dim() const { return static_cast<int>(w1_.cols()); }
  int hidden_dim() const { return static_cast<int>(w1_.rows()); }
  int class_count() const { return static_cast<int>(w2_.rows()); }
  int embedding_dim() const { return class_count() * (hidden_dim() + 1); }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& b2() const { return b2_; }

  /// Row-per-sample batch forms used by training and evaluation.
  Eigen::MatrixXd hidden_batch(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probs_batch(const Eigen::MatrixXd& x) const;

  /// Versioned JSON checkpoint of all parameter tensors plus dims and seed.
  std::string to_json() const;
  static Classifier from_json(const std::string& text);
  void save(const std::string& path) const;
  static Classifier load(const std::string& path);

 private:
  friend struct TrainAccess;
  Classifier() = default;

  Eigen::MatrixXd w1_;  // hidden x input
  Eigen::VectorXd b1_;  // hidden
  Eigen::MatrixXd w2_;  // classes x hidden
  Eigen::VectorXd b2_;  // classes
  std::uint64_t seed_ = 0;
};

enum class TrainStop { reached_target, epoch_budget };

struct TrainResult {
  Classifier model;
  TrainStop stop = TrainStop::epoch_budget;
  int epochs_run = 0;
  double final_train_accuracy = 0.0;
};

/// Minibatch Adam on softmax cross-entropy, from a fresh initialization
/// seeded by cfg.init_seed (the passed classifier only fixes the shape).
/// Stops once training accuracy reaches the target or the epoch budget runs
/// out. Deterministic: same seed and data give identical parameters.
/// Throws std::invalid_argument on an empty training set or bad labels.
TrainResult train(const Classifier& shape, const Dataset& labeled,
                  const TrainConfig& cfg);

}  // namespace vessal
