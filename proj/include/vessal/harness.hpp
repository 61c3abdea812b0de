#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vessal/classifier.hpp"
#include "vessal/dataset.hpp"
#include "vessal/datastream.hpp"
#include "vessal/sampler.hpp"

namespace vessal {

enum class AlgorithmId {
  vessal,          // streaming volume sampling on gradient embeddings
  vessal_pen,      // same rule on penultimate activations
  stream_uniform,  // content-blind Bernoulli at fixed frequency
  badge,           // k-means++ seeding in gradient space
  conf,            // least-confidence
  coreset,         // greedy k-center on penultimate activations
  rand,            // uniform without replacement
};

const char* algorithm_name(AlgorithmId id);
AlgorithmId algorithm_from_name(const std::string& name);
bool algorithm_is_streaming(AlgorithmId id);

struct DatasetSpec {
  enum class Kind { synth, idx, csv, cache };
  Kind kind = Kind::synth;

  // synth
  int n = 5000;
  int test_n = 2000;
  int p = 16;
  int class_count = 10;
  double separation = 4.0;
  std::uint64_t data_seed = 1;

  // idx / csv / cache
  std::string idx_images;
  std::string idx_labels;
  std::string csv_path;
  std::string csv_label_column;
  int csv_classes = 0;
  std::string cache_path;
  double test_fraction = 0.2;  // file-backed datasets are split by data_seed
};

struct ExperimentConfig {
  DatasetSpec dataset;
  AlgorithmId algorithm = AlgorithmId::vessal;
  int k = 100;
  int rounds = 5;
  int seeds = 3;
  int seed_set_size = 100;
  std::uint64_t base_seed = 1;
  StreamOrder stream_order = StreamOrder::shuffled(0);
  double lambda = 0.01;
  int projection_dim = 0;  // 0 disables projection
  int hidden_dim = 128;
  bool persist_tracker = false;  // carry the covariance state across rounds
  TrainConfig train;

  void validate() const;
};

struct RoundLog {
  int round = 0;          // 0 is the seed set, before any selection
  int labeled_count = 0;  // labels the evaluated model was trained on
  double test_accuracy = 0.0;
  int budget = 0;                 // this round's selection target (0 on the last log)
  double selection_seconds = 0.0;
  std::vector<QueryDecision> decisions;  // streaming algorithms only
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundLog> rounds;
};

/// Materializes the configured dataset as train and test splits.
TrainTestSplit materialize_dataset(const DatasetSpec& spec);

/// Full multi-round active-learning run: per seed, start from a seed-labeled
/// set of the first seed_set_size points of a seeded shuffle, then loop
/// train-from-scratch, evaluate, select via the configured algorithm, label.
/// Each SeedRun ends with one extra log entry evaluating the final labeled
/// set. Deterministic given the config.
std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg);

struct CurvePoint {
  double labels = 0.0;
  double accuracy = 0.0;
};

struct AmplificationPoint {
  double labels = 0.0;          // active method's label count
  double accuracy = 0.0;        // accuracy both methods are matched at
  double uniform_labels = 0.0;  // interpolated labels uniform needs for it
  double ratio = 0.0;           // uniform_labels / labels
};

/// Accuracy-matched label ratio: for each active checkpoint, how many labels
/// uniform sampling needs (piecewise-linear interpolation, first crossing) to
/// reach the same accuracy. Checkpoints uniform never reaches are omitted.
/// Throws std::invalid_argument unless both curves have strictly increasing
/// label counts.
std::vector<AmplificationPoint> label_amplification(
    const std::vector<CurvePoint>& active, const std::vector<CurvePoint>& uniform);

/// Learning curve of one seed run: (labeled count, test accuracy) per log.
std::vector<CurvePoint> learning_curve(const SeedRun& run);

struct AlgorithmCurves {
  std::string name;
  std::vector<std::vector<CurvePoint>> curves;  // one per seed, matched order
};

struct PenaltyMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd matrix;           // (i, j) accumulates when i beats j
  std::vector<double> checkpoints;  // the label counts L actually used
  Eigen::VectorXd column_means;     // lower means better
};

/// Pairwise significant-win matrix over matched checkpoints
/// L_i = n0 + 2^i * k. Per checkpoint and ordered pair, the paired per-seed
/// accuracy deltas d give mu = mean, sigma = sqrt(sum((d-mu)^2)/(s-1)) and
/// t = sqrt(s) * mu / sigma (s = seed count; at the standard three seeds
/// sigma is exactly sqrt(0.5 * sum((d-mu)^2))). |t| > 2.92 scores 1/|L| for
/// the winner; sigma = 0 with mu != 0 counts as a win outright. When
/// rand_curves is given, checkpoints stop where that curve's mean accuracy
/// reaches 99% of its final value.
PenaltyMatrix penalty_matrix(
    const std::vector<AlgorithmCurves>& algorithms, int n0, int k,
    const std::vector<std::vector<CurvePoint>>* rand_curves = nullptr);

struct TracePoint {
  double fraction_seen = 0.0;
  double fraction_budget = 0.0;
};

/// Fraction of the budget consumed as a function of the fraction of the
/// stream seen, one point per stream step.
std::vector<TracePoint> sampling_rate_trace(const RoundLog& log);

/// Largest deviation of a trace from the identity line.
double trace_sup_distance(const std::vector<TracePoint>& trace);

struct TimingRow {
  std::string algorithm;
  int k = 0;
  int replicate = 0;
  double seconds = 0.0;
};

struct BenchResult {
  std::vector<TimingRow> rows;
  double embed_seconds = 0.0;  // shared embedding cost, reported separately
};

/// Wall-clock selection time per algorithm and budget over one fixed pool,
/// embeddings precomputed outside the timers.
BenchResult bench_selection_time(const std::vector<AlgorithmId>& algorithms,
                                 const std::vector<int>& ks, const Dataset& pool,
                                 const Classifier& clf, double lambda,
                                 std::uint64_t seed, int replicates = 5);

double median_seconds(const BenchResult& bench, const std::string& algorithm,
                      int k);

// Tabular outputs. Doubles are written with %.17g so reruns are
// byte-identical.
void write_curves_csv(const std::string& path, const std::vector<SeedRun>& runs);
void write_decisions_csv(const std::string& path,
                         const std::vector<SeedRun>& runs);
void write_penalty_csv(const std::string& path, const PenaltyMatrix& matrix);
void write_timings_csv(const std::string& path, const BenchResult& bench);

struct SeedCurve {
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

std::vector<SeedCurve> read_curves_csv(const std::string& path);

}  // namespace vessal
