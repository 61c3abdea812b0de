#include "vessal/sampler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace vessal {

namespace {
constexpr double kNormalizerFloor = 1e-12;
}

QueryRateSpec QueryRateSpec::fixed_rate(double q) {
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("fixed_rate: q must be in (0, 1], got " +
                                std::to_string(q));
  QueryRateSpec spec;
  spec.mode = Mode::fixed;
  spec.q = q;
  return spec;
}

QueryRateSpec QueryRateSpec::adaptive(long long k, long long n) {
  if (n <= 0)
    throw std::invalid_argument("adaptive: n must be positive");
  if (k < 0 || k > n)
    throw std::invalid_argument("adaptive: k must be in [0, n]");
  QueryRateSpec spec;
  spec.mode = Mode::adaptive;
  spec.k = k;
  spec.n = n;
  spec.selected_so_far = 0;
  return spec;
}

double QueryRateSpec::rate_at(long long t) const {
  if (mode == Mode::fixed) return q;
  if (t >= n) return 0.0;
  return adaptive_rate(k, selected_so_far, n, t);
}

double adaptive_rate(long long k, long long selected, long long n, long long t) {
  if (t < 0 || t >= n)
    throw std::invalid_argument("adaptive_rate: t=" + std::to_string(t) +
                                " outside [0, n=" + std::to_string(n) + ")");
  if (selected >= k) return 0.0;
  const double rate = static_cast<double>(k - selected) /
                      static_cast<double>(n - t);
  return std::max(0.0, rate);
}

QueryDecision vessal_step(CovarianceTracker& tracker, const Eigen::VectorXd& g,
                          double q_t, Rng& rng) {
  if (q_t < 0.0)
    throw std::invalid_argument("vessal_step: q_t must be >= 0");

  QueryDecision d;
  d.index = tracker.seen();
  d.leverage = tracker.leverage(g);
  tracker.observe(g);
  d.normalizer = tracker.trace_normalizer();
  d.rate_used = q_t;

  if (d.normalizer >= kNormalizerFloor && d.leverage > 0.0)
    d.raw_probability = q_t * (d.leverage / d.normalizer);
  d.probability = std::min(d.raw_probability, 1.0);

  const double u = rng.uniform();
  d.selected = u < d.probability;
  if (d.selected) tracker.woodbury_update(g);
  return d;
}

bool stream_uniform_step(double q, Rng& rng) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("stream_uniform_step: q must be in [0, 1]");
  return rng.uniform() < q;
}

StreamSession::StreamSession(int dim, double lambda, const QueryRateSpec& rate,
                             std::uint64_t seed)
    : tracker_(dim, lambda), rate_(rate), rng_(seed) {}

StreamSession::StreamSession(CovarianceTracker tracker,
                             const QueryRateSpec& rate, std::uint64_t seed)
    : tracker_(std::move(tracker)), rate_(rate), rng_(seed) {
  if (tracker_.seen() > 0) normalizer_ = tracker_.trace_normalizer();
}

QueryDecision StreamSession::step(const Eigen::VectorXd& g) {
  QueryDecision d;
  d.index = pos_;
  d.leverage = tracker_.leverage(g);
  tracker_.observe(g);

  // The trace normalizer obeys the same running-mean recurrence as A itself
  // over the tracker's global observation count, not the round position.
  const double count = static_cast<double>(tracker_.seen());
  normalizer_ = normalizer_ * ((count - 1.0) / count) + d.leverage / count;
  d.normalizer = fixed_z_ ? *fixed_z_ : normalizer_;
  d.rate_used = rate_.rate_at(pos_);

  if (d.normalizer >= kNormalizerFloor && d.leverage > 0.0)
    d.raw_probability = d.rate_used * (d.leverage / d.normalizer);
  d.probability = std::min(d.raw_probability, 1.0);

  const double u = rng_.uniform();
  d.selected = u < d.probability;
  if (d.selected) {
    tracker_.woodbury_update(g);
    normalizer_ = tracker_.trace_normalizer();
    ++rate_.selected_so_far;
  }
  ++pos_;
  return d;
}

void run_embedding_stream(StreamSession& session,
                          const std::function<bool(Eigen::VectorXd&)>& source,
                          const std::function<void(const QueryDecision&)>& sink) {
  Eigen::VectorXd g;
  while (source(g)) sink(session.step(g));
}

RoundResult run_round(const Dataset& pool, const std::vector<int>& order,
                      const Classifier& clf, EmbeddingKind kind,
                      const QueryRateSpec& rate,
                      const RandomProjection* projection, double lambda,
                      std::uint64_t seed, CovarianceTracker* persistent) {
  if (order.empty()) throw std::invalid_argument("run_round: empty stream");
  for (int idx : order)
    if (idx < 0 || idx >= pool.size())
      throw std::invalid_argument("run_round: stream index " +
                                  std::to_string(idx) + " outside the pool");
  if (pool.feature_dim() != clf.input_dim())
    throw std::invalid_argument("run_round: pool features have dimension " +
                                std::to_string(pool.feature_dim()) +
                                ", classifier expects " +
                                std::to_string(clf.input_dim()));

  const int raw_dim =
      kind == EmbeddingKind::gradient ? clf.embedding_dim() : clf.hidden_dim();
  if (projection && projection->in_dim() != raw_dim)
    throw std::invalid_argument("run_round: projection takes dimension " +
                                std::to_string(projection->in_dim()) +
                                ", embeddings have " + std::to_string(raw_dim));
  const int dim = projection ? projection->out_dim() : raw_dim;
  if (persistent && persistent->dim() != dim)
    throw std::invalid_argument("run_round: persistent tracker has dimension " +
                                std::to_string(persistent->dim()) + ", want " +
                                std::to_string(dim));

  StreamSession session = persistent
                              ? StreamSession(*persistent, rate, seed)
                              : StreamSession(dim, lambda, rate, seed);
  RoundResult result;
  result.decisions.reserve(order.size());

  std::size_t next = 0;
  const auto source = [&](Eigen::VectorXd& g) {
    if (next >= order.size()) return false;
    const Eigen::VectorXd x = pool.features.row(order[next]).transpose();
    const Eigen::VectorXd raw = kind == EmbeddingKind::gradient
                                    ? clf.gradient_embedding(x)
                                    : clf.forward(x).penultimate;
    g = projection ? projection->project(raw) : raw;
    ++next;
    return true;
  };
  const auto sink = [&](const QueryDecision& d) {
    if (d.selected)
      result.batch.push_back(order[static_cast<std::size_t>(d.index)]);
    result.decisions.push_back(d);
  };
  run_embedding_stream(session, source, sink);
  if (persistent) *persistent = session.tracker();
  return result;
}

}  // namespace vessal
