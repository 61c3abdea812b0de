#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vessal/classifier.hpp"
#include "vessal/dataset.hpp"
#include "vessal/linalg.hpp"
#include "vessal/random.hpp"

namespace vessal {

enum class EmbeddingKind { gradient, penultimate };

struct QueryRateSpec {
  enum class Mode { fixed, adaptive };
  Mode mode = Mode::fixed;
  double q = 0.1;                 // fixed mode, in (0, 1]
  long long k = 0;                // adaptive mode: budget per round
  long long n = 0;                // adaptive mode: stream length
  long long selected_so_far = 0;  // adaptive mode: live count

  /// Throws std::invalid_argument unless 0 < q <= 1.
  static QueryRateSpec fixed_rate(double q);
  /// Throws std::invalid_argument unless 0 <= k <= n and n > 0.
  static QueryRateSpec adaptive(long long k, long long n);

  /// The rate for stream position t (0-based: t points already emitted).
  /// Adaptive mode recomputes from live counts and clamps to 0 past the
  /// declared horizon instead of throwing, so overlong sessions degrade to
  /// never selecting.
  double rate_at(long long t) const;
};

struct QueryDecision {
  long long index = 0;        // stream position, 0-based
  double raw_probability = 0.0;
  double probability = 0.0;   // min(raw, 1)
  bool selected = false;
  double rate_used = 0.0;
  double leverage = 0.0;
  double normalizer = 0.0;
};

/// q_t = max(0, (k - selected) / (n - t)); 0 once the budget is spent.
/// Throws std::invalid_argument unless 0 <= t < n.
double adaptive_rate(long long k, long long selected, long long n, long long t);

/// One committal decision on an already-embedded point. Folds g into the
/// tracker's running mean first, then scores p_t = q_t * leverage / trace
/// normalizer (0 if the normalizer is below 1e-12 or g is zero), draws once
/// from rng, and applies the rank-1 inverse update only on selection.
QueryDecision vessal_step(CovarianceTracker& tracker, const Eigen::VectorXd& g,
                          double q_t, Rng& rng);

/// Content-blind Bernoulli(q) decision.
/// Throws std::invalid_argument unless 0 <= q <= 1.
bool stream_uniform_step(double q, Rng& rng);

/// A single-pass sampling round over embedded points. Keeps the trace
/// normalizer incrementally: between selections the inverse is constant, so
/// tr(inv_sigma * A_t) obeys the same running-mean recurrence as A_t itself;
/// each selection changes the inverse and forces an exact recompute.
class StreamSession {
 public:
  StreamSession(int dim, double lambda, const QueryRateSpec& rate,
                std::uint64_t seed);

  /// Resume from previously accumulated covariance state.
  StreamSession(CovarianceTracker tracker, const QueryRateSpec& rate,
                std::uint64_t seed);

  /// Decide on the next stream point. Consumes exactly one uniform draw.
  QueryDecision step(const Eigen::VectorXd& g);

  /// Stream position within this session (the rate's t; a resumed tracker
  /// does not advance it).
  long long position() const { return pos_; }
  long long selected_count() const { return rate_.selected_so_far; }
  const CovarianceTracker& tracker() const { return tracker_; }
  const QueryRateSpec& rate() const { return rate_; }

  /// Test hook: score against a constant normalizer instead of the
  /// auto-tuned trace, reproducing the fixed-scaling failure mode.
  void set_fixed_normalizer(double z) { fixed_z_ = z; }

 private:
  CovarianceTracker tracker_;
  QueryRateSpec rate_;
  Rng rng_;
  long long pos_ = 0;
  double normalizer_ = 0.0;
  std::optional<double> fixed_z_;
};

/// Pulls embeddings from source until it returns false, feeds each through
/// the session, and hands every decision to sink before the next pull. The
/// buffer passed to source is reused across pulls.
void run_embedding_stream(StreamSession& session,
                          const std::function<bool(Eigen::VectorXd&)>& source,
                          const std::function<void(const QueryDecision&)>& sink);

struct RoundResult {
  std::vector<int> batch;                // pool indices, in selection order
  std::vector<QueryDecision> decisions;  // one per stream element
};

/// One full VeSSAL round: walk the pool in the given order, embed each point
/// (hallucinated last-layer gradient or penultimate activations), optionally
/// project, and decide committally. A fresh tracker lives for exactly this
/// round unless `persistent` is given, in which case the round starts from
/// that state and writes the updated state back. Throws
/// std::invalid_argument on an empty order or when the projection's input
/// dimension does not match the embedding.
RoundResult run_round(const Dataset& pool, const std::vector<int>& order,
                      const Classifier& clf, EmbeddingKind kind,
                      const QueryRateSpec& rate,
                      const RandomProjection* projection, double lambda,
                      std::uint64_t seed,
                      CovarianceTracker* persistent = nullptr);

}  // namespace vessal
