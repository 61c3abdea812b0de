#include "vessal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vessal/baselines.hpp"
#include "vessal/linalg.hpp"
#include "vessal/random.hpp"

namespace vessal {

const char* algorithm_name(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::vessal: return "vessal";
    case AlgorithmId::vessal_pen: return "vessal_pen";
    case AlgorithmId::stream_uniform: return "stream_uniform";
    case AlgorithmId::badge: return "badge";
    case AlgorithmId::conf: return "conf";
    case AlgorithmId::coreset: return "coreset";
    case AlgorithmId::rand: return "rand";
  }
  throw std::logic_error("algorithm_name: unhandled id");
}

AlgorithmId algorithm_from_name(const std::string& name) {
  for (AlgorithmId id :
       {AlgorithmId::vessal, AlgorithmId::vessal_pen, AlgorithmId::stream_uniform,
        AlgorithmId::badge, AlgorithmId::conf, AlgorithmId::coreset,
        AlgorithmId::rand})
    if (name == algorithm_name(id)) return id;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool algorithm_is_streaming(AlgorithmId id) {
  return id == AlgorithmId::vessal || id == AlgorithmId::vessal_pen ||
         id == AlgorithmId::stream_uniform;
}

void ExperimentConfig::validate() const {
  if (k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (seeds < 1) throw std::invalid_argument("config: seeds must be >= 1");
  if (rounds < 0) throw std::invalid_argument("config: rounds must be >= 0");
  if (seed_set_size < 1)
    throw std::invalid_argument("config: seed_set_size must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("config: lambda must be > 0");
  if (projection_dim < 0)
    throw std::invalid_argument("config: projection_dim must be >= 0");
  if (hidden_dim < 1)
    throw std::invalid_argument("config: hidden_dim must be >= 1");
  if (dataset.kind == DatasetSpec::Kind::synth) {
    if (dataset.class_count < 2)
      throw std::invalid_argument("config: synth_classes must be >= 2");
    if (dataset.n < dataset.class_count || dataset.test_n < dataset.class_count)
      throw std::invalid_argument("config: synth sizes must cover every class");
    if (dataset.p < 1)
      throw std::invalid_argument("config: synth_p must be >= 1");
  } else {
    if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0))
      throw std::invalid_argument("config: test_fraction must be in (0, 1)");
  }
  if (!(train.learning_rate > 0.0))
    throw std::invalid_argument("config: learning_rate must be > 0");
  if (train.max_epochs < 1)
    throw std::invalid_argument("config: max_epochs must be >= 1");
  if (train.minibatch_size < 1)
    throw std::invalid_argument("config: minibatch_size must be >= 1");
}

namespace {

TrainTestSplit split_by_fraction(const Dataset& all, double fraction,
                                 std::uint64_t seed) {
  all.validate();
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  const int n = all.size();
  int test_n = static_cast<int>(std::lround(fraction * n));
  test_n = std::min(std::max(test_n, 1), n - 1);

  std::vector<int> perm = iota_permutation(n);
  Rng rng(derive_seed(seed, 0x73706c69ULL));
  seeded_shuffle(perm, rng);

  TrainTestSplit out;
  out.train = subset(all, std::vector<int>(perm.begin(), perm.end() - test_n));
  out.test = subset(all, std::vector<int>(perm.end() - test_n, perm.end()));
  out.train.split = Split::train;
  out.test.split = Split::test;
  return out;
}

}  // namespace

TrainTestSplit materialize_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetSpec::Kind::synth:
      return synth_gaussian_mixture_split(spec.n, spec.test_n, spec.p,
                                          spec.class_count, spec.separation,
                                          spec.data_seed);
    case DatasetSpec::Kind::idx:
      return split_by_fraction(load_idx(spec.idx_images, spec.idx_labels),
                               spec.test_fraction, spec.data_seed);
    case DatasetSpec::Kind::csv: {
      CsvSchema schema;
      schema.label_column = spec.csv_label_column;
      schema.class_count = spec.csv_classes;
      return split_by_fraction(load_csv(spec.csv_path, schema),
                               spec.test_fraction, spec.data_seed);
    }
    case DatasetSpec::Kind::cache:
      return split_by_fraction(load_dataset_cache(spec.cache_path),
                               spec.test_fraction, spec.data_seed);
  }
  throw std::logic_error("materialize_dataset: unhandled dataset kind");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SelectionOutcome {
  std::vector<int> batch;
  std::vector<QueryDecision> decisions;
};

SelectionOutcome select_batch(const ExperimentConfig& cfg, const Dataset& train,
                              const std::vector<int>& stream,
                              const std::vector<bool>& labeled,
                              const Classifier& model, int k_r,
                              std::uint64_t round_seed,
                              const RandomProjection* projection,
                              CovarianceTracker* persist) {
  SelectionOutcome out;
  const auto n_r = static_cast<long long>(stream.size());

  switch (cfg.algorithm) {
    case AlgorithmId::vessal:
    case AlgorithmId::vessal_pen: {
      const EmbeddingKind kind = cfg.algorithm == AlgorithmId::vessal
                                     ? EmbeddingKind::gradient
                                     : EmbeddingKind::penultimate;
      RoundResult rr =
          run_round(train, stream, model, kind, QueryRateSpec::adaptive(k_r, n_r),
                    projection, cfg.lambda, round_seed, persist);
      out.batch = std::move(rr.batch);
      out.decisions = std::move(rr.decisions);
      return out;
    }
    case AlgorithmId::stream_uniform: {
      // Fixed frequency, no cap: the count is binomial around k_r by design.
      const double q = static_cast<double>(k_r) / static_cast<double>(n_r);
      Rng rng(round_seed);
      out.decisions.reserve(stream.size());
      for (std::size_t t = 0; t < stream.size(); ++t) {
        QueryDecision d;
        d.index = static_cast<long long>(t);
        d.raw_probability = q;
        d.probability = std::min(q, 1.0);
        d.rate_used = q;
        d.selected = stream_uniform_step(q, rng);
        if (d.selected) out.batch.push_back(stream[t]);
        out.decisions.push_back(d);
      }
      return out;
    }
    case AlgorithmId::badge:
    case AlgorithmId::conf:
    case AlgorithmId::coreset:
    case AlgorithmId::rand: {
      Pool pool;
      pool.labeled_mask = labeled;
      if (cfg.algorithm == AlgorithmId::badge) {
        pool.embeddings.resize(train.size(), model.embedding_dim());
        for (int i = 0; i < train.size(); ++i)
          pool.embeddings.row(i) =
              model.gradient_embedding(train.features.row(i).transpose())
                  .transpose();
      } else if (cfg.algorithm == AlgorithmId::coreset) {
        pool.embeddings = model.hidden_batch(train.features);
      } else if (cfg.algorithm == AlgorithmId::conf) {
        pool.probs = model.probs_batch(train.features);
      }
      Rng rng(round_seed);
      if (cfg.algorithm == AlgorithmId::badge)
        out.batch = kmeanspp_select(pool, k_r, rng);
      else if (cfg.algorithm == AlgorithmId::coreset)
        out.batch = kcenter_greedy(pool, k_r);
      else if (cfg.algorithm == AlgorithmId::conf)
        out.batch = confidence_select(pool, k_r);
      else
        out.batch = random_select(pool, k_r, rng);
      return out;
    }
  }
  throw std::logic_error("select_batch: unhandled algorithm");
}

SeedRun run_one_seed(const ExperimentConfig& cfg, const TrainTestSplit& data,
                     std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  const int n = data.train.size();

  // Seed-labeled set: the first points of a seeded shuffle, whatever the
  // stream ordering mode, so the initial set carries no drift.
  std::vector<int> init_order = iota_permutation(n);
  Rng init_rng(derive_seed(seed, 11));
  seeded_shuffle(init_order, init_rng);
  const int n0 = std::min(cfg.seed_set_size, n);

  std::vector<bool> labeled(static_cast<std::size_t>(n), false);
  std::vector<int> labeled_rows;
  labeled_rows.reserve(static_cast<std::size_t>(n0));
  for (int i = 0; i < n0; ++i) {
    labeled[static_cast<std::size_t>(init_order[static_cast<std::size_t>(i)])] =
        true;
    labeled_rows.push_back(init_order[static_cast<std::size_t>(i)]);
  }

  StreamOrder mode = cfg.stream_order;
  if (mode.kind == StreamOrder::Kind::shuffled)
    mode.seed = derive_seed(seed, 13);
  const std::vector<int> base_order = order_stream(data.train, mode);

  std::optional<RandomProjection> projection;
  std::optional<CovarianceTracker> persist;
  if (cfg.algorithm == AlgorithmId::vessal ||
      cfg.algorithm == AlgorithmId::vessal_pen) {
    const int raw_dim = cfg.algorithm == AlgorithmId::vessal
                            ? data.train.class_count * (cfg.hidden_dim + 1)
                            : cfg.hidden_dim;
    if (cfg.projection_dim > 0)
      projection.emplace(derive_seed(seed, 17), raw_dim, cfg.projection_dim);
    if (cfg.persist_tracker)
      persist.emplace(cfg.projection_dim > 0 ? cfg.projection_dim : raw_dim,
                      cfg.lambda);
  }

  for (int r = 0;; ++r) {
    TrainConfig tc = cfg.train;
    tc.init_seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(r));
    const Classifier shape = Classifier::init(
        data.train.feature_dim(), cfg.hidden_dim, data.train.class_count,
        tc.init_seed);
    const TrainResult trained = train(shape, subset(data.train, labeled_rows), tc);

    RoundLog log;
    log.round = r;
    log.labeled_count = static_cast<int>(labeled_rows.size());
    log.test_accuracy = trained.model.accuracy(data.test);

    const int remaining = n - log.labeled_count;
    if (r >= cfg.rounds || remaining == 0) {
      run.rounds.push_back(std::move(log));
      break;
    }
    const int k_r = std::min(cfg.k, remaining);
    log.budget = k_r;

    std::vector<int> stream;
    stream.reserve(static_cast<std::size_t>(remaining));
    for (int idx : base_order)
      if (!labeled[static_cast<std::size_t>(idx)]) stream.push_back(idx);

    const auto t0 = Clock::now();
    SelectionOutcome picked = select_batch(
        cfg, data.train, stream, labeled, trained.model, k_r,
        derive_seed(seed, 2000 + static_cast<std::uint64_t>(r)),
        projection ? &*projection : nullptr, persist ? &*persist : nullptr);
    log.selection_seconds = seconds_since(t0);
    log.decisions = std::move(picked.decisions);

    for (int idx : picked.batch) {
      labeled[static_cast<std::size_t>(idx)] = true;
      labeled_rows.push_back(idx);
    }
    run.rounds.push_back(std::move(log));
  }
  return run;
}

}  // namespace

std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TrainTestSplit data = materialize_dataset(cfg.dataset);
  if (cfg.seed_set_size > data.train.size())
    throw std::invalid_argument("config: seed_set_size exceeds the train split");

  std::vector<SeedRun> runs;
  runs.reserve(static_cast<std::size_t>(cfg.seeds));
  for (int s = 0; s < cfg.seeds; ++s)
    runs.push_back(run_one_seed(cfg, data,
                                derive_seed(cfg.base_seed,
                                            static_cast<std::uint64_t>(s))));
  return runs;
}

std::vector<CurvePoint> learning_curve(const SeedRun& run) {
  std::vector<CurvePoint> curve;
  curve.reserve(run.rounds.size());
  for (const RoundLog& log : run.rounds)
    curve.push_back({static_cast<double>(log.labeled_count), log.test_accuracy});
  return curve;
}

namespace {

void check_increasing_labels(const std::vector<CurvePoint>& curve,
                             const char* which) {
  if (curve.empty())
    throw std::invalid_argument(std::string(which) + " curve is empty");
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (!(curve[i].labels > curve[i - 1].labels))
      throw std::invalid_argument(std::string(which) +
                                  " curve labels must strictly increase");
}

// Smallest label count at which the curve first reaches accuracy a, by
// piecewise-linear interpolation; NaN when it never does.
double first_crossing(const std::vector<CurvePoint>& curve, double a) {
  if (curve.front().accuracy >= a) return curve.front().labels;
  for (std::size_t j = 1; j < curve.size(); ++j) {
    if (curve[j].accuracy >= a) {
      const double rise = curve[j].accuracy - curve[j - 1].accuracy;
      const double runw = curve[j].labels - curve[j - 1].labels;
      return curve[j - 1].labels + (a - curve[j - 1].accuracy) * runw / rise;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double interpolate_accuracy(const std::vector<CurvePoint>& curve, double labels) {
  if (labels <= curve.front().labels) return curve.front().accuracy;
  for (std::size_t j = 1; j < curve.size(); ++j) {
    if (labels <= curve[j].labels) {
      const double w = (labels - curve[j - 1].labels) /
                       (curve[j].labels - curve[j - 1].labels);
      return curve[j - 1].accuracy +
             w * (curve[j].accuracy - curve[j - 1].accuracy);
    }
  }
  return curve.back().accuracy;
}

}  // namespace

std::vector<AmplificationPoint> label_amplification(
    const std::vector<CurvePoint>& active,
    const std::vector<CurvePoint>& uniform) {
  check_increasing_labels(active, "active");
  check_increasing_labels(uniform, "uniform");

  std::vector<AmplificationPoint> out;
  for (const CurvePoint& point : active) {
    const double needed = first_crossing(uniform, point.accuracy);
    if (std::isnan(needed)) continue;
    AmplificationPoint amp;
    amp.labels = point.labels;
    amp.accuracy = point.accuracy;
    amp.uniform_labels = needed;
    amp.ratio = needed / point.labels;
    out.push_back(amp);
  }
  return out;
}

PenaltyMatrix penalty_matrix(
    const std::vector<AlgorithmCurves>& algorithms, int n0, int k,
    const std::vector<std::vector<CurvePoint>>* rand_curves) {
  if (algorithms.empty())
    throw std::invalid_argument("penalty_matrix: no algorithms");
  const std::size_t seed_count = algorithms.front().curves.size();
  if (seed_count < 3)
    throw std::invalid_argument("penalty_matrix: need >= 3 seeds, got " +
                                std::to_string(seed_count));
  for (const AlgorithmCurves& algo : algorithms) {
    if (algo.curves.size() != seed_count)
      throw std::invalid_argument("penalty_matrix: seed counts differ");
    for (const auto& curve : algo.curves)
      check_increasing_labels(curve, algo.name.c_str());
  }
  if (k < 1) throw std::invalid_argument("penalty_matrix: k must be >= 1");

  // Checkpoints every curve can be interpolated at, truncated where random
  // sampling has hit 99% of its final accuracy.
  double max_common = std::numeric_limits<double>::infinity();
  for (const AlgorithmCurves& algo : algorithms)
    for (const auto& curve : algo.curves)
      max_common = std::min(max_common, curve.back().labels);

  double rand_final = 0.0;
  if (rand_curves) {
    if (rand_curves->size() != seed_count)
      throw std::invalid_argument("penalty_matrix: rand seed count differs");
    for (const auto& curve : *rand_curves) {
      check_increasing_labels(curve, "rand");
      rand_final += curve.back().accuracy;
    }
    rand_final /= static_cast<double>(seed_count);
  }

  std::vector<double> checkpoints;
  for (int i = 0;; ++i) {
    const double level = n0 + std::pow(2.0, i) * k;
    if (level > max_common) break;
    if (rand_curves) {
      double at_level = 0.0;
      for (const auto& curve : *rand_curves)
        at_level += interpolate_accuracy(curve, level);
      at_level /= static_cast<double>(seed_count);
      if (at_level >= 0.99 * rand_final) break;
    }
    checkpoints.push_back(level);
  }

  const int m = static_cast<int>(algorithms.size());
  PenaltyMatrix out;
  out.names.reserve(static_cast<std::size_t>(m));
  for (const AlgorithmCurves& algo : algorithms) out.names.push_back(algo.name);
  out.matrix = Eigen::MatrixXd::Zero(m, m);
  out.checkpoints = checkpoints;
  out.column_means = Eigen::VectorXd::Zero(m);
  if (checkpoints.empty()) return out;

  const double weight = 1.0 / static_cast<double>(checkpoints.size());
  const double sqrt_s = std::sqrt(static_cast<double>(seed_count));

  for (double level : checkpoints) {
    Eigen::MatrixXd acc(m, static_cast<int>(seed_count));
    for (int a = 0; a < m; ++a)
      for (std::size_t s = 0; s < seed_count; ++s)
        acc(a, static_cast<int>(s)) = interpolate_accuracy(
            algorithms[static_cast<std::size_t>(a)].curves[s], level);

    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        double mu = 0.0;
        for (std::size_t s = 0; s < seed_count; ++s)
          mu += acc(i, static_cast<int>(s)) - acc(j, static_cast<int>(s));
        mu /= static_cast<double>(seed_count);
        double ss = 0.0;
        for (std::size_t s = 0; s < seed_count; ++s) {
          const double d = acc(i, static_cast<int>(s)) -
                           acc(j, static_cast<int>(s)) - mu;
          ss += d * d;
        }
        const double sigma =
            std::sqrt(ss / static_cast<double>(seed_count - 1));

        int winner = -1;
        if (sigma == 0.0) {
          if (mu > 0.0) winner = i;
          else if (mu < 0.0) winner = j;
        } else {
          const double t = sqrt_s * mu / sigma;
          if (t > 2.92) winner = i;
          else if (t < -2.92) winner = j;
        }
        if (winner == i) out.matrix(i, j) += weight;
        else if (winner == j) out.matrix(j, i) += weight;
      }
    }
  }
  out.column_means = out.matrix.colwise().mean().transpose();
  return out;
}

std::vector<TracePoint> sampling_rate_trace(const RoundLog& log) {
  std::vector<TracePoint> trace;
  const std::size_t n = log.decisions.size();
  trace.reserve(n);
  long long taken = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (log.decisions[t].selected) ++taken;
    TracePoint point;
    point.fraction_seen = static_cast<double>(t + 1) / static_cast<double>(n);
    point.fraction_budget =
        log.budget > 0
            ? static_cast<double>(taken) / static_cast<double>(log.budget)
            : 0.0;
    trace.push_back(point);
  }
  return trace;
}

double trace_sup_distance(const std::vector<TracePoint>& trace) {
  double sup = 0.0;
  for (const TracePoint& point : trace)
    sup = std::max(sup, std::abs(point.fraction_budget - point.fraction_seen));
  return sup;
}

BenchResult bench_selection_time(const std::vector<AlgorithmId>& algorithms,
                                 const std::vector<int>& ks, const Dataset& pool,
                                 const Classifier& clf, double lambda,
                                 std::uint64_t seed, int replicates) {
  pool.validate();
  if (algorithms.empty() || ks.empty())
    throw std::invalid_argument("bench: need at least one algorithm and one k");
  if (replicates < 1)
    throw std::invalid_argument("bench: replicates must be >= 1");
  const int n = pool.size();
  for (int k : ks)
    if (k < 1 || k > n)
      throw std::invalid_argument("bench: k=" + std::to_string(k) +
                                  " outside [1, " + std::to_string(n) + "]");

  bool need_grad = false, need_hidden = false, need_probs = false;
  for (AlgorithmId id : algorithms) {
    need_grad |= id == AlgorithmId::vessal || id == AlgorithmId::badge;
    need_hidden |= id == AlgorithmId::vessal_pen || id == AlgorithmId::coreset;
    need_probs |= id == AlgorithmId::conf;
  }

  BenchResult out;
  Eigen::MatrixXd grads, hidden, probs;
  const auto embed_start = Clock::now();
  if (need_grad) {
    grads.resize(n, clf.embedding_dim());
    for (int i = 0; i < n; ++i)
      grads.row(i) =
          clf.gradient_embedding(pool.features.row(i).transpose()).transpose();
  }
  if (need_hidden) hidden = clf.hidden_batch(pool.features);
  if (need_probs) probs = clf.probs_batch(pool.features);
  out.embed_seconds = seconds_since(embed_start);

  const std::vector<bool> no_labels(static_cast<std::size_t>(n), false);
  std::uint64_t run_id = 0;
  for (AlgorithmId id : algorithms) {
    for (int k : ks) {
      for (int rep = 0; rep < replicates; ++rep) {
        const std::uint64_t rep_seed = derive_seed(seed, ++run_id);
        const auto t0 = Clock::now();
        switch (id) {
          case AlgorithmId::vessal:
          case AlgorithmId::vessal_pen: {
            const Eigen::MatrixXd& rows =
                id == AlgorithmId::vessal ? grads : hidden;
            StreamSession session(static_cast<int>(rows.cols()), lambda,
                                  QueryRateSpec::adaptive(k, n), rep_seed);
            Eigen::VectorXd g;
            for (int i = 0; i < n; ++i) {
              g = rows.row(i).transpose();
              session.step(g);
            }
            break;
          }
          case AlgorithmId::stream_uniform: {
            Rng rng(rep_seed);
            const double q = static_cast<double>(k) / n;
            for (int i = 0; i < n; ++i) stream_uniform_step(q, rng);
            break;
          }
          case AlgorithmId::badge: {
            Pool p;
            p.embeddings = grads;
            p.labeled_mask = no_labels;
            Rng rng(rep_seed);
            kmeanspp_select(p, k, rng);
            break;
          }
          case AlgorithmId::coreset: {
            Pool p;
            p.embeddings = hidden;
            p.labeled_mask = no_labels;
            kcenter_greedy(p, k);
            break;
          }
          case AlgorithmId::conf: {
            Pool p;
            p.probs = probs;
            p.labeled_mask = no_labels;
            confidence_select(p, k);
            break;
          }
          case AlgorithmId::rand: {
            Pool p;
            p.labeled_mask = no_labels;
            Rng rng(rep_seed);
            random_select(p, k, rng);
            break;
          }
        }
        TimingRow row;
        row.algorithm = algorithm_name(id);
        row.k = k;
        row.replicate = rep;
        row.seconds = seconds_since(t0);
        out.rows.push_back(std::move(row));
      }
    }
  }
  return out;
}

double median_seconds(const BenchResult& bench, const std::string& algorithm,
                      int k) {
  std::vector<double> times;
  for (const TimingRow& row : bench.rows)
    if (row.algorithm == algorithm && row.k == k) times.push_back(row.seconds);
  if (times.empty())
    throw std::invalid_argument("median_seconds: no rows for " + algorithm +
                                " at k=" + std::to_string(k));
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  if (times.size() % 2 == 1) return times[mid];
  return 0.5 * (times[mid - 1] + times[mid]);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_curves_csv(const std::string& path, const std::vector<SeedRun>& runs) {
  std::ofstream out = open_out(path);
  out << "seed,round,labels,accuracy\n";
  for (const SeedRun& run : runs)
    for (const RoundLog& log : run.rounds)
      out << run.seed << ',' << log.round << ',' << log.labeled_count << ','
          << fmt_double(log.test_accuracy) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_decisions_csv(const std::string& path,
                         const std::vector<SeedRun>& runs) {
  std::ofstream out = open_out(path);
  out << "seed,round,t,p_raw,p_clipped,selected,q_t,leverage,normalizer\n";
  for (const SeedRun& run : runs)
    for (const RoundLog& log : run.rounds)
      for (const QueryDecision& d : log.decisions)
        out << run.seed << ',' << log.round << ',' << d.index << ','
            << fmt_double(d.raw_probability) << ',' << fmt_double(d.probability)
            << ',' << (d.selected ? 1 : 0) << ',' << fmt_double(d.rate_used)
            << ',' << fmt_double(d.leverage) << ',' << fmt_double(d.normalizer)
            << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_penalty_csv(const std::string& path, const PenaltyMatrix& matrix) {
  std::ofstream out = open_out(path);
  out << "algorithm";
  for (const std::string& name : matrix.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    out << matrix.names[i];
    for (std::size_t j = 0; j < matrix.names.size(); ++j)
      out << ',' << fmt_double(matrix.matrix(static_cast<int>(i),
                                             static_cast<int>(j)));
    out << '\n';
  }
  out << "column_mean";
  for (int j = 0; j < matrix.column_means.size(); ++j)
    out << ',' << fmt_double(matrix.column_means(j));
  out << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_timings_csv(const std::string& path, const BenchResult& bench) {
  std::ofstream out = open_out(path);
  out << "algorithm,k,replicate,seconds\n";
  for (const TimingRow& row : bench.rows)
    out << row.algorithm << ',' << row.k << ',' << row.replicate << ','
        << fmt_double(row.seconds) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SeedCurve> read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "seed,round,labels,accuracy")
    throw ParseError(path + ": not a curves file (bad header)");

  std::vector<SeedCurve> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string seed_s, round_s, labels_s, acc_s;
    if (!std::getline(ss, seed_s, ',') || !std::getline(ss, round_s, ',') ||
        !std::getline(ss, labels_s, ',') || !std::getline(ss, acc_s))
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": want 4 comma-separated fields");
    try {
      const std::uint64_t seed = std::stoull(seed_s);
      const double labels = std::stod(labels_s);
      const double accuracy = std::stod(acc_s);
      if (out.empty() || out.back().seed != seed) {
        SeedCurve curve;
        curve.seed = seed;
        out.push_back(std::move(curve));
      }
      out.back().points.push_back({labels, accuracy});
    } catch (const std::logic_error&) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": non-numeric field");
    }
  }
  if (out.empty()) throw ParseError(path + ": no data rows");
  return out;
}

}  // namespace vessal
