#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <vector>

#include "vessal/classifier.hpp"
#include "vessal/dataset.hpp"
#include "vessal/random.hpp"

using namespace vessal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Edits a checkpoint's JSON and loads it back, for building exact fixtures.
Classifier modified(const Classifier& base,
                    const std::function<void(nlohmann::json&)>& edit) {
  nlohmann::json j = nlohmann::json::parse(base.to_json());
  edit(j);
  return Classifier::from_json(j.dump());
}

Classifier zeroed(int input, int hidden, int classes) {
  return modified(Classifier::init(input, hidden, classes, 1), [&](nlohmann::json& j) {
    for (auto& row : j["w1"]) for (auto& v : row) v = 0.0;
    for (auto& row : j["b1"]) for (auto& v : row) v = 0.0;
    for (auto& row : j["w2"]) for (auto& v : row) v = 0.0;
    for (auto& row : j["b2"]) for (auto& v : row) v = 0.0;
  });
}

Dataset make_dataset(const MatrixXd& x, const std::vector<int>& y, int classes) {
  Dataset d;
  d.features = x;
  d.labels = y;
  d.class_count = classes;
  return d;
}

VectorXd random_vec(Rng& rng, int d) {
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.gaussian();
  return v;
}

// Cross-entropy at a frozen hallucinated label.
double loss_at(const Classifier& clf, const VectorXd& x, int label) {
  return -std::log(clf.forward(x).probs(label));
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("same seed gives bit-identical parameters") {
  const Classifier a = Classifier::init(5, 7, 3, 42);
  const Classifier b = Classifier::init(5, 7, 3, 42);
  CHECK(a.w1() == b.w1());
  CHECK(a.b1() == b.b1());
  CHECK(a.w2() == b.w2());
  CHECK(a.b2() == b.b2());
  const Classifier c = Classifier::init(5, 7, 3, 43);
  CHECK(a.w1() != c.w1());
}

TEST_CASE("parameter shapes follow the dims") {
  const Classifier c = Classifier::init(4, 1, 2, 1);
  CHECK(c.w1().rows() == 1);
  CHECK(c.w1().cols() == 4);
  CHECK(c.b1().size() == 1);
  CHECK(c.w2().rows() == 2);
  CHECK(c.w2().cols() == 1);
  CHECK(c.b2().size() == 2);
  CHECK(c.embedding_dim() == 2 * (1 + 1));
}

TEST_CASE("init validates dims") {
  CHECK_THROWS_AS(Classifier::init(0, 4, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(Classifier::init(4, 0, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(Classifier::init(4, 4, 1, 1), std::invalid_argument);
}

TEST_CASE("fresh classifier scores at chance on balanced labels") {
  const int n = 6000, p = 8, classes = 10;
  Rng rng(201);
  MatrixXd x(n, p);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = random_vec(rng, p).transpose();
    y[i] = i % classes;
  }
  const Dataset data = make_dataset(x, y, classes);
  double acc = 0.0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL})
    acc += Classifier::init(p, 16, classes, seed).accuracy(data);
  acc /= 3.0;
  CHECK(std::abs(acc - 0.1) < 0.05);
}

TEST_CASE("zero parameters give uniform probs and class 0") {
  const Classifier c = zeroed(3, 4, 5);
  Rng rng(202);
  for (int i = 0; i < 10; ++i) {
    const ForwardResult out = c.forward(random_vec(rng, 3));
    CHECK(out.predicted == 0);
    for (int k = 0; k < 5; ++k)
      CHECK(out.probs(k) == doctest::Approx(0.2).epsilon(1e-12));
  }
}

TEST_CASE("probs form a simplex and penultimate has hidden width") {
  const Classifier c = Classifier::init(6, 9, 4, 7);
  Rng rng(203);
  for (int i = 0; i < 50; ++i) {
    const ForwardResult out = c.forward(random_vec(rng, 6));
    CHECK(out.penultimate.size() == 9);
    CHECK(out.probs.minCoeff() >= 0.0);
    CHECK(out.probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out.predicted >= 0);
    CHECK(out.predicted < 4);
  }
}

TEST_CASE("shifting every logit leaves probs unchanged") {
  const Classifier base = Classifier::init(4, 6, 3, 11);
  const Classifier shifted = modified(base, [](nlohmann::json& j) {
    for (auto& row : j["b2"]) row[0] = row[0].get<double>() + 5.0;
  });
  Rng rng(204);
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = random_vec(rng, 4);
    const VectorXd pa = base.forward(x).probs;
    const VectorXd pb = shifted.forward(x).probs;
    CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward validates its input") {
  const Classifier c = Classifier::init(3, 4, 2, 1);
  CHECK_THROWS_AS(c.forward(VectorXd::Ones(4)), std::invalid_argument);
  VectorXd bad = VectorXd::Ones(3);
  bad(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(c.forward(bad), std::invalid_argument);
}

TEST_CASE("gradient embedding closed form at probs (0.7, 0.3)") {
  // W1 = I and b1 = 0 make the penultimate equal the (positive) input;
  // W2 = 0 with b2 = log probs pins the softmax output.
  Classifier c = modified(Classifier::init(2, 2, 2, 1), [](nlohmann::json& j) {
    j["w1"] = {{1.0, 0.0}, {0.0, 1.0}};
    j["b1"] = {{0.0}, {0.0}};
    j["w2"] = {{0.0, 0.0}, {0.0, 0.0}};
    j["b2"] = {{std::log(0.7)}, {std::log(0.3)}};
  });
  VectorXd x(2);
  x << 1, 2;
  const ForwardResult out = c.forward(x);
  CHECK(out.predicted == 0);
  CHECK(out.probs(0) == doctest::Approx(0.7).epsilon(1e-12));

  const VectorXd g = c.gradient_embedding(x);
  REQUIRE(g.size() == 6);
  VectorXd want(6);
  want << -0.3, -0.6, 0.3, 0.6, -0.3, 0.3;
  CHECK((g - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("saturated model has zero gradient") {
  // A huge logit margin makes probs exactly one-hot in floating point.
  Classifier c = modified(Classifier::init(2, 2, 2, 1), [](nlohmann::json& j) {
    j["w2"] = {{0.0, 0.0}, {0.0, 0.0}};
    j["b2"] = {{1000.0}, {0.0}};
  });
  VectorXd x(2);
  x << 0.5, -0.25;
  CHECK(c.forward(x).probs(0) == 1.0);
  CHECK(c.gradient_embedding(x).isZero(0.0));
}

TEST_CASE("the bias block of the gradient sums to zero") {
  Rng rng(205);
  for (int i = 0; i < 20; ++i) {
    const Classifier c = Classifier::init(5, 6, 4, 300 + i);
    const VectorXd g = c.gradient_embedding(random_vec(rng, 5));
    REQUIRE(g.size() == c.embedding_dim());
    CHECK(std::abs(g.tail(4).sum()) < 1e-12);
  }
}

TEST_CASE("gradient embedding matches central finite differences") {
  Rng rng(206);
  const int input = 3, hidden = 4, classes = 3;
  const double step = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const Classifier c = Classifier::init(input, hidden, classes, 400 + trial);
    const VectorXd x = random_vec(rng, input);
    const int label = c.forward(x).predicted;
    const VectorXd g = c.gradient_embedding(x);

    VectorXd fd(c.embedding_dim());
    for (int cls = 0; cls < classes; ++cls) {
      for (int h = 0; h < hidden; ++h) {
        const auto nudge = [&](double delta) {
          return modified(c, [&](nlohmann::json& j) {
            j["w2"][cls][h] = j["w2"][cls][h].get<double>() + delta;
          });
        };
        fd(cls * hidden + h) =
            (loss_at(nudge(step), x, label) - loss_at(nudge(-step), x, label)) /
            (2 * step);
      }
      const auto nudge_b = [&](double delta) {
        return modified(c, [&](nlohmann::json& j) {
          j["b2"][cls][0] = j["b2"][cls][0].get<double>() + delta;
        });
      };
      fd(classes * hidden + cls) =
          (loss_at(nudge_b(step), x, label) - loss_at(nudge_b(-step), x, label)) /
          (2 * step);
    }
    const double rel = (fd - g).norm() / std::max(1e-12, g.norm());
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("gradient norm grows with model uncertainty") {
  // Two classes, fixed penultimate: |g| is a monotone function of
  // 1 - probs at the predicted class.
  VectorXd x(2);
  x << 1, 1;
  double prev_norm = std::numeric_limits<double>::infinity();
  double prev_conf = 0.0;
  for (double margin : {0.2, 0.5, 1.0, 2.0, 4.0}) {
    const Classifier c =
        modified(Classifier::init(2, 2, 2, 1), [&](nlohmann::json& j) {
          j["w1"] = {{1.0, 0.0}, {0.0, 1.0}};
          j["b1"] = {{0.0}, {0.0}};
          j["w2"] = {{0.0, 0.0}, {0.0, 0.0}};
          j["b2"] = {{margin}, {-margin}};
        });
    const ForwardResult out = c.forward(x);
    CHECK(out.predicted == 0);
    CHECK(out.probs(0) > prev_conf);
    const double norm = c.gradient_embedding(x).norm();
    CHECK(norm < prev_norm);
    prev_norm = norm;
    prev_conf = out.probs(0);
  }
}

TEST_CASE("training fits linearly separable data") {
  // Oracle first: a perceptron converges on this sample, so it is separable.
  const int n = 200;
  Rng rng(207);
  MatrixXd x(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    x(i, 0) = (cls == 0 ? -2.0 : 2.0) + 0.3 * rng.gaussian();
    x(i, 1) = 0.3 * rng.gaussian();
    y[i] = cls;
  }
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  bool separable = false;
  for (int epoch = 0; epoch < 1000 && !separable; ++epoch) {
    int errors = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d xi(x(i, 0), x(i, 1), 1.0);
      const double s = w.dot(xi);
      const int pred = s >= 0.0 ? 1 : 0;
      if (pred != y[i]) {
        w += (y[i] == 1 ? 1.0 : -1.0) * xi;
        ++errors;
      }
    }
    separable = errors == 0;
  }
  REQUIRE(separable);

  const Dataset data = make_dataset(x, y, 2);
  TrainConfig cfg;
  cfg.init_seed = 5;
  const TrainResult result =
      train(Classifier::init(2, 16, 2, 0), data, cfg);
  CHECK(result.stop == TrainStop::reached_target);
  CHECK(result.final_train_accuracy >= 0.99);
  CHECK(result.model.accuracy(data) >= 0.99);
}

TEST_CASE("a single labeled point is memorized") {
  MatrixXd x(1, 3);
  x << 0.2, -0.4, 0.9;
  const Dataset data = make_dataset(x, {1}, 2);
  TrainConfig cfg;
  cfg.init_seed = 9;
  const TrainResult result = train(Classifier::init(3, 8, 2, 0), data, cfg);
  CHECK(result.stop == TrainStop::reached_target);
  CHECK(result.final_train_accuracy == 1.0);
}

TEST_CASE("training is deterministic in seed and data") {
  const int n = 60;
  Rng rng(208);
  MatrixXd x(n, 4);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = random_vec(rng, 4).transpose();
    y[i] = i % 3;
  }
  const Dataset data = make_dataset(x, y, 3);
  TrainConfig cfg;
  cfg.init_seed = 21;
  cfg.max_epochs = 30;
  const TrainResult a = train(Classifier::init(4, 8, 3, 0), data, cfg);
  const TrainResult b = train(Classifier::init(4, 8, 3, 0), data, cfg);
  CHECK(a.model.w1() == b.model.w1());
  CHECK(a.model.b1() == b.model.b1());
  CHECK(a.model.w2() == b.model.w2());
  CHECK(a.model.b2() == b.model.b2());
  CHECK(a.epochs_run == b.epochs_run);
  CHECK(a.final_train_accuracy == b.final_train_accuracy);
}

TEST_CASE("train validates its inputs") {
  const Classifier shape = Classifier::init(3, 4, 2, 1);
  const Dataset empty = make_dataset(MatrixXd(0, 3), {}, 2);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(shape, empty, cfg), std::invalid_argument);

  MatrixXd x(2, 3);
  x.setOnes();
  const Dataset bad_label = make_dataset(x, {0, 5}, 2);
  CHECK_THROWS_AS(train(shape, bad_label, cfg), std::invalid_argument);

  TrainConfig bad_lr;
  bad_lr.learning_rate = 0.0;
  const Dataset ok = make_dataset(x, {0, 1}, 2);
  CHECK_THROWS_AS(train(shape, ok, bad_lr), std::invalid_argument);
}

TEST_CASE("accuracy counts exact prediction matches") {
  // Zero weights predict class 0 for everything.
  const Classifier c = zeroed(2, 3, 4);
  MatrixXd x(5, 2);
  x.setRandom();
  CHECK(c.accuracy(make_dataset(x, {0, 0, 0, 0, 0}, 4)) == 1.0);
  CHECK(c.accuracy(make_dataset(x, {0, 0, 1, 0, 0}, 4)) == 0.8);
  CHECK_THROWS_AS(c.accuracy(make_dataset(MatrixXd(0, 2), {}, 4)),
                  std::invalid_argument);
}

TEST_CASE("untrained accuracy on 10 balanced classes is one tenth") {
  const int n = 10000, p = 6, classes = 10;
  Rng rng(209);
  MatrixXd x(n, p);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = random_vec(rng, p).transpose();
    y[i] = i % classes;
  }
  const double acc =
      Classifier::init(p, 12, classes, 77).accuracy(make_dataset(x, y, classes));
  CHECK(std::abs(acc - 0.1) < 0.02);
}

TEST_CASE("checkpoint round-trips through a file") {
  const Classifier c = Classifier::init(4, 5, 3, 31);
  const std::string path = "classifier_roundtrip.json";
  c.save(path);
  const Classifier back = Classifier::load(path);
  std::remove(path.c_str());
  CHECK(back.w1() == c.w1());
  CHECK(back.b1() == c.b1());
  CHECK(back.w2() == c.w2());
  CHECK(back.b2() == c.b2());
  CHECK(back.seed() == c.seed());
  Rng rng(210);
  const VectorXd x = random_vec(rng, 4);
  CHECK(back.forward(x).probs == c.forward(x).probs);
}

TEST_CASE("from_json rejects corrupt checkpoints") {
  CHECK_THROWS(Classifier::from_json("junk"));
  CHECK_THROWS(Classifier::from_json("{}"));
  const Classifier c = Classifier::init(2, 2, 2, 1);
  nlohmann::json j = nlohmann::json::parse(c.to_json());
  j["format_version"] = 999;
  CHECK_THROWS_AS(Classifier::from_json(j.dump()), std::invalid_argument);
}

}  // TEST_SUITE
