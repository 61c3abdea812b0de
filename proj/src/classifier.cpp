#include "vessal/classifier.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "vessal/random.hpp"

namespace vessal {

namespace {

constexpr int kCheckpointVersion = 1;

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  return m;
}

// Row-wise stable softmax in place. Scalar std::exp so saturated logits
// underflow to exactly zero (Eigen's packet exp clamps instead).
void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      logits(i, j) = std::exp(logits(i, j) - mx);
      sum += logits(i, j);
    }
    logits.row(i) /= sum;
  }
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

nlohmann::json tensor_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd tensor_from_json(const nlohmann::json& j, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

}  // namespace

Classifier Classifier::init(int input_dim, int hidden_dim, int class_count,
                            std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1)
    throw std::invalid_argument("Classifier::init: dims must be >= 1");
  if (class_count < 2)
    throw std::invalid_argument("Classifier::init: class_count must be >= 2");
  Classifier c;
  Rng rng(seed);
  c.w1_ = glorot_uniform(hidden_dim, input_dim, rng);
  c.b1_ = Eigen::VectorXd::Zero(hidden_dim);
  c.w2_ = glorot_uniform(class_count, hidden_dim, rng);
  c.b2_ = Eigen::VectorXd::Zero(class_count);
  c.seed_ = seed;
  return c;
}

ForwardResult Classifier::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim())
    throw std::invalid_argument("forward: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(input_dim()));
  if (!x.allFinite())
    throw std::invalid_argument("forward: input contains non-finite values");
  ForwardResult r;
  r.penultimate = ((w1_ * x + b1_).array().max(0.0)).matrix();
  Eigen::MatrixXd logits = (w2_ * r.penultimate + b2_).transpose();
  softmax_rows(logits);
  r.probs = logits.row(0).transpose();
  r.predicted = argmax_lowest(r.probs);
  return r;
}

Eigen::VectorXd Classifier::gradient_embedding(const Eigen::VectorXd& x) const {
  const ForwardResult f = forward(x);
  const int hidden = hidden_dim();
  const int classes = class_count();
  Eigen::VectorXd delta = f.probs;
  delta(f.predicted) -= 1.0;
  Eigen::VectorXd g(embedding_dim());
  for (int c = 0; c < classes; ++c)
    g.segment(static_cast<Eigen::Index>(c) * hidden, hidden) =
        delta(c) * f.penultimate;
  g.tail(classes) = delta;
  return g;
}

double Classifier::accuracy(const Dataset& data) const {
  if (data.size() == 0)
    throw std::invalid_argument("accuracy: dataset is empty");
  const Eigen::MatrixXd probs = probs_batch(data.features);
  long long hits = 0;
  for (int i = 0; i < data.size(); ++i) {
    Eigen::VectorXd row = probs.row(i).transpose();
    if (argmax_lowest(row) == data.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Eigen::MatrixXd Classifier::hidden_batch(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x * w1_.transpose();
  h.rowwise() += b1_.transpose();
  return h.array().max(0.0).matrix();
}

Eigen::MatrixXd Classifier::probs_batch(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd logits = hidden_batch(x) * w2_.transpose();
  logits.rowwise() += b2_.transpose();
  softmax_rows(logits);
  return logits;
}

std::string Classifier::to_json() const {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["input_dim"] = input_dim();
  j["hidden_dim"] = hidden_dim();
  j["class_count"] = class_count();
  j["seed"] = seed_;
  j["w1"] = tensor_to_json(w1_);
  j["b1"] = tensor_to_json(b1_);
  j["w2"] = tensor_to_json(w2_);
  j["b2"] = tensor_to_json(b2_);
  return j.dump();
}

Classifier Classifier::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointVersion)
    throw std::invalid_argument("classifier checkpoint: unsupported format_version " +
                                std::to_string(version));
  const int input = j.at("input_dim").get<int>();
  const int hidden = j.at("hidden_dim").get<int>();
  const int classes = j.at("class_count").get<int>();
  Classifier c;
  c.seed_ = j.at("seed").get<std::uint64_t>();
  c.w1_ = tensor_from_json(j.at("w1"), hidden, input);
  c.b1_ = tensor_from_json(j.at("b1"), hidden, 1);
  c.w2_ = tensor_from_json(j.at("w2"), classes, hidden);
  c.b2_ = tensor_from_json(j.at("b2"), classes, 1);
  return c;
}

void Classifier::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json();
}

Classifier Classifier::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

namespace {

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(const Eigen::MatrixXd& shape)
      : m(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())),
        v(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())) {}

  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
            const TrainConfig& cfg, long long iter) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double t = static_cast<double>(iter);
    const double mhat = 1.0 - std::pow(cfg.adam_beta1, t);
    const double vhat = 1.0 - std::pow(cfg.adam_beta2, t);
    param.array() -= cfg.learning_rate * (m.array() / mhat) /
                     ((v.array() / vhat).sqrt() + cfg.adam_epsilon);
  }
};

double train_accuracy(const Classifier& clf, const Eigen::MatrixXd& x,
                      const std::vector<int>& y) {
  const Eigen::MatrixXd probs = clf.probs_batch(x);
  long long hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    if (best == y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

}  // namespace

struct TrainAccess {
  static Eigen::MatrixXd& w1(Classifier& c) { return c.w1_; }
  static Eigen::VectorXd& b1(Classifier& c) { return c.b1_; }
  static Eigen::MatrixXd& w2(Classifier& c) { return c.w2_; }
  static Eigen::VectorXd& b2(Classifier& c) { return c.b2_; }
};

TrainResult train(const Classifier& shape, const Dataset& labeled,
                  const TrainConfig& cfg) {
  const int n = labeled.size();
  if (n == 0) throw std::invalid_argument("train: labeled set is empty");
  if (labeled.feature_dim() != shape.input_dim())
    throw std::invalid_argument("train: feature dim does not match classifier");
  for (int lab : labeled.labels)
    if (lab < 0 || lab >= shape.class_count())
      throw std::invalid_argument("train: label out of range [0, class_count)");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(cfg.target_train_accuracy > 0.0 && cfg.target_train_accuracy <= 1.0))
    throw std::invalid_argument("train: target_train_accuracy must be in (0,1]");

  TrainResult result{Classifier::init(shape.input_dim(), shape.hidden_dim(),
                                      shape.class_count(), cfg.init_seed)};
  Classifier& clf = result.model;

  AdamState s_w1(clf.w1()), s_w2(clf.w2());
  AdamState s_b1(clf.b1()), s_b2(clf.b2());
  Rng rng(derive_seed(cfg.init_seed, 0x7261696eULL));
  std::vector<int> order = iota_permutation(n);
  const int batch = std::max(1, std::min(cfg.minibatch_size, n));
  long long iter = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    seeded_shuffle(order, rng);
    for (int start = 0; start < n; start += batch) {
      const int b = std::min(batch, n - start);
      Eigen::MatrixXd xb(b, labeled.feature_dim());
      std::vector<int> yb(static_cast<std::size_t>(b));
      for (int i = 0; i < b; ++i) {
        xb.row(i) = labeled.features.row(order[static_cast<std::size_t>(start + i)]);
        yb[static_cast<std::size_t>(i)] =
            labeled.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }

      // Forward.
      Eigen::MatrixXd pre = xb * clf.w1().transpose();
      pre.rowwise() += clf.b1().transpose();
      Eigen::MatrixXd h = pre.array().max(0.0).matrix();
      Eigen::MatrixXd probs = h * clf.w2().transpose();
      probs.rowwise() += clf.b2().transpose();
      softmax_rows(probs);

      // Backward: mean cross-entropy at the true labels.
      Eigen::MatrixXd dz = probs;
      for (int i = 0; i < b; ++i) dz(i, yb[static_cast<std::size_t>(i)]) -= 1.0;
      dz /= static_cast<double>(b);
      const Eigen::MatrixXd g_w2 = dz.transpose() * h;
      const Eigen::VectorXd g_b2 = dz.colwise().sum().transpose();
      Eigen::MatrixXd dh = dz * clf.w2();
      dh = (pre.array() > 0.0).select(dh, 0.0);
      const Eigen::MatrixXd g_w1 = dh.transpose() * xb;
      const Eigen::VectorXd g_b1 = dh.colwise().sum().transpose();

      ++iter;
      s_w1.step(TrainAccess::w1(clf), g_w1, cfg, iter);
      s_w2.step(TrainAccess::w2(clf), g_w2, cfg, iter);
      Eigen::MatrixXd b1m = TrainAccess::b1(clf), b2m = TrainAccess::b2(clf);
      s_b1.step(b1m, g_b1, cfg, iter);
      s_b2.step(b2m, g_b2, cfg, iter);
      TrainAccess::b1(clf) = b1m;
      TrainAccess::b2(clf) = b2m;
    }

    result.epochs_run = epoch + 1;
    result.final_train_accuracy =
        train_accuracy(clf, labeled.features, labeled.labels);
    if (result.final_train_accuracy >= cfg.target_train_accuracy) {
      result.stop = TrainStop::reached_target;
      return result;
    }
  }
  result.stop = TrainStop::epoch_budget;
  return result;
}

}  // namespace vessal
