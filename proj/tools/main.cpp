// vessal: streaming batch active-learning toolkit.
//
// Subcommands: run (experiment from a config file), stream-decide (committal
// decision filter over stdin embeddings), bench (selection-time benchmark),
// compare (pairwise penalty matrix across finished runs).

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vessal/baselines.hpp"
#include "vessal/config.hpp"
#include "vessal/harness.hpp"
#include "vessal/sampler.hpp"

namespace fs = std::filesystem;
using namespace vessal;

namespace {

struct StreamProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string config_path;
  std::string out_root;
  bool dry_run = false;
};

int cmd_run(const RunOptions& opt) {
  const ExperimentConfig cfg = parse_config_file(opt.config_path);
  cfg.validate();

  std::string root = opt.out_root;
  if (root.empty()) {
    const char* env = std::getenv("VESSAL_OUT_ROOT");
    root = env && *env ? env : "runs";
  }
  const fs::path dir = fs::path(root) / run_dir_name(cfg);

  std::cout << "run " << config_hash_hex(cfg) << ": algorithm "
            << algorithm_name(cfg.algorithm) << ", dataset "
            << dataset_kind_name(cfg.dataset.kind) << ", k=" << cfg.k
            << ", rounds=" << cfg.rounds << ", seeds=" << cfg.seeds << '\n';
  std::cout << "output directory: " << dir.string() << '\n';
  if (opt.dry_run) {
    std::cout << "dry run: config valid, nothing written\n";
    return 0;
  }

  const std::vector<SeedRun> runs = run_experiment(cfg);

  fs::create_directories(dir);
  write_curves_csv((dir / "curves.csv").string(), runs);
  write_decisions_csv((dir / "decisions.csv").string(), runs);

  std::map<std::string, std::string> notes;
  double final_mean = 0.0;
  for (const SeedRun& run : runs) final_mean += run.rounds.back().test_accuracy;
  final_mean /= static_cast<double>(runs.size());
  notes["final_accuracy_mean"] = fmt_double(final_mean);
  notes["rounds_executed"] =
      std::to_string(static_cast<int>(runs.front().rounds.size()) - 1);
  write_manifest((dir / "manifest.json").string(), cfg, notes);

  for (const SeedRun& run : runs)
    std::cout << "seed " << run.seed << ": "
              << run.rounds.back().labeled_count << " labels, accuracy "
              << fmt_double(run.rounds.back().test_accuracy) << '\n';
  std::cout << "wrote " << (dir / "curves.csv").string() << ", decisions.csv, "
            << "manifest.json\n";
  return 0;
}

// ------------------------------------------------------- stream-decide

struct StreamDecideOptions {
  double rate = -1.0;  // <0 means unset
  long long budget = -1;
  long long horizon = -1;
  double lambda = 0.01;
  std::uint64_t seed = 0;
  std::string format = "text";
  int project_dim = 0;
  std::uint64_t project_seed = 0;
  bool dry_run = false;
};

bool read_text_record(std::istream& in, bool& id_mode, bool first,
                      std::string& id, std::vector<double>& values,
                      long long record_no) {
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> tokens;
    std::string token;
    while (ss >> token) tokens.push_back(token);
    if (tokens.empty()) continue;  // blank line between records

    // The first record fixes whether a leading id token is present.
    if (first) {
      char* end = nullptr;
      std::strtod(tokens[0].c_str(), &end);
      id_mode = end != tokens[0].c_str() + tokens[0].size();
    }
    std::size_t start = 0;
    if (id_mode) {
      id = tokens[0];
      start = 1;
    } else {
      id = std::to_string(record_no);
    }
    if (start >= tokens.size())
      throw StreamProtocolError("record " + std::to_string(record_no) +
                                ": no values after the id token");
    values.clear();
    for (std::size_t i = start; i < tokens.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(tokens[i].c_str(), &end);
      if (end != tokens[i].c_str() + tokens[i].size())
        throw StreamProtocolError("record " + std::to_string(record_no) +
                                  ": '" + tokens[i] + "' is not a float");
      values.push_back(v);
    }
    return true;
  }
  return false;
}

bool read_binary_record(std::FILE* in, std::vector<double>& values,
                        long long record_no) {
  std::uint32_t len = 0;
  const std::size_t got = std::fread(&len, 1, sizeof(len), in);
  if (got == 0) return false;  // clean EOF at a frame boundary
  if (got != sizeof(len))
    throw StreamProtocolError("record " + std::to_string(record_no) +
                              ": truncated length prefix");
  if (len == 0 || len > (1u << 24))
    throw StreamProtocolError("record " + std::to_string(record_no) +
                              ": implausible length " + std::to_string(len));
  values.resize(len);
  if (std::fread(values.data(), sizeof(double), len, in) != len)
    throw StreamProtocolError("record " + std::to_string(record_no) +
                              ": truncated frame, want " + std::to_string(len) +
                              " doubles");
  return true;
}

int cmd_stream_decide(const StreamDecideOptions& opt) {
  const bool rate_mode = opt.rate >= 0.0;
  const bool budget_mode = opt.budget >= 0 || opt.horizon >= 0;
  if (rate_mode == budget_mode)
    throw ConfigError(
        "stream-decide: pass exactly one of --rate or --budget with --horizon");
  if (budget_mode && (opt.budget < 0 || opt.horizon < 1))
    throw ConfigError("stream-decide: budget mode needs --budget >= 0 and "
                      "--horizon >= 1");
  if (rate_mode && !(opt.rate >= 0.0 && opt.rate <= 1.0))
    throw ConfigError("stream-decide: --rate must be in [0, 1]");
  if (!(opt.lambda > 0.0))
    throw ConfigError("stream-decide: --lambda must be > 0");
  if (opt.project_dim < 0)
    throw ConfigError("stream-decide: --project-dim must be >= 0");
  if (opt.format != "text" && opt.format != "binary")
    throw ConfigError("stream-decide: --format must be text or binary");

  QueryRateSpec rate;
  if (rate_mode) {
    // q = 0 is allowed here (a filter that never selects); the factory's
    // invariant stays strict, so fill the spec directly.
    rate.mode = QueryRateSpec::Mode::fixed;
    rate.q = opt.rate;
  } else {
    rate = QueryRateSpec::adaptive(opt.budget, opt.horizon);
  }

  if (opt.dry_run) {
    std::cout << "stream-decide plan: "
              << (rate_mode ? "fixed rate " + fmt_double(opt.rate)
                            : "budget " + std::to_string(opt.budget) +
                                  " over horizon " + std::to_string(opt.horizon))
              << ", lambda " << fmt_double(opt.lambda) << ", format "
              << opt.format << ", seed " << opt.seed;
    if (opt.project_dim > 0)
      std::cout << ", projecting to " << opt.project_dim;
    std::cout << "\ndry run: nothing read\n";
    return 0;
  }

  std::optional<StreamSession> session;
  std::optional<RandomProjection> projection;
  int record_dim = -1;
  long long record_no = 0;
  bool id_mode = false;
  const bool binary = opt.format == "binary";

  std::vector<double> values;
  std::string id;
  while (true) {
    bool more;
    if (binary) {
      more = read_binary_record(stdin, values, record_no);
      id = std::to_string(record_no);
    } else {
      more = read_text_record(std::cin, id_mode, record_no == 0, id, values,
                              record_no);
    }
    if (!more) break;

    if (record_dim < 0) {
      record_dim = static_cast<int>(values.size());
      if (opt.project_dim > record_dim)
        throw ConfigError("stream-decide: --project-dim " +
                          std::to_string(opt.project_dim) +
                          " exceeds the record dimension " +
                          std::to_string(record_dim));
      if (opt.project_dim > 0)
        projection.emplace(opt.project_seed, record_dim, opt.project_dim);
      session.emplace(opt.project_dim > 0 ? opt.project_dim : record_dim,
                      opt.lambda, rate, opt.seed);
    } else if (static_cast<int>(values.size()) != record_dim) {
      throw StreamProtocolError(
          "record " + std::to_string(record_no) + ": dimension changed from " +
          std::to_string(record_dim) + " to " + std::to_string(values.size()));
    }

    bool finite = true;
    for (double v : values)
      if (!std::isfinite(v)) finite = false;
    if (!finite) {
      std::cerr << "warning: record " << record_no
                << " has non-finite values; emitting 0 without scoring\n";
      std::cout << id << " 0 0\n" << std::flush;
      ++record_no;
      continue;
    }

    Eigen::VectorXd g =
        Eigen::Map<const Eigen::VectorXd>(values.data(),
                                          static_cast<Eigen::Index>(values.size()));
    if (projection) g = projection->project(g);
    const QueryDecision d = session->step(g);
    std::cout << id << ' ' << (d.selected ? 1 : 0) << ' '
              << fmt_double(d.probability) << '\n'
              << std::flush;
    ++record_no;
  }
  return 0;
}

// --------------------------------------------------------------- bench

struct BenchOptions {
  std::string algorithms = "vessal,badge";
  std::string k_list = "100,1000,5000";
  int pool_size = 50000;
  int dim = 32;
  int classes = 4;
  int hidden = 15;
  int replicates = 5;
  double lambda = 0.01;
  std::uint64_t seed = 1;
  std::string out = "timings.csv";
  bool dry_run = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_bench(const BenchOptions& opt) {
  std::vector<AlgorithmId> ids;
  for (const std::string& name : split_list(opt.algorithms)) {
    try {
      ids.push_back(algorithm_from_name(name));
    } catch (const std::invalid_argument&) {
      std::string valid;
      for (AlgorithmId id :
           {AlgorithmId::vessal, AlgorithmId::vessal_pen,
            AlgorithmId::stream_uniform, AlgorithmId::badge, AlgorithmId::conf,
            AlgorithmId::coreset, AlgorithmId::rand})
        valid += std::string(valid.empty() ? "" : ", ") + algorithm_name(id);
      throw ConfigError("bench: unknown algorithm '" + name + "' (valid: " +
                        valid + ")");
    }
  }
  std::vector<int> ks;
  for (const std::string& item : split_list(opt.k_list)) {
    try {
      ks.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
      throw ConfigError("bench: bad k '" + item + "'");
    }
  }
  if (ids.empty() || ks.empty())
    throw ConfigError("bench: need at least one algorithm and one k");
  if (opt.pool_size < 1 || opt.dim < 1 || opt.classes < 2 || opt.hidden < 1 ||
      opt.replicates < 1)
    throw ConfigError("bench: sizes must be positive (classes >= 2)");

  std::cout << "bench plan: " << opt.algorithms << " at k in {" << opt.k_list
            << "} over a " << opt.pool_size << "-point pool (dim " << opt.dim
            << ", " << opt.classes << " classes, hidden " << opt.hidden
            << "), " << opt.replicates << " replicates\n";
  if (opt.dry_run) {
    std::cout << "dry run: nothing executed\n";
    return 0;
  }

  const Dataset pool = synth_gaussian_mixture(opt.pool_size, opt.dim,
                                              opt.classes, 4.0, opt.seed);
  const Classifier clf = Classifier::init(opt.dim, opt.hidden, opt.classes,
                                          derive_seed(opt.seed, 99));
  const BenchResult bench = bench_selection_time(ids, ks, pool, clf, opt.lambda,
                                                 opt.seed, opt.replicates);
  write_timings_csv(opt.out, bench);

  std::cout << "embedding time (shared, not in rows): "
            << fmt_double(bench.embed_seconds) << " s\n";
  std::cout << "medians over " << opt.replicates << " replicates:\n";
  for (AlgorithmId id : ids)
    for (int k : ks)
      std::cout << "  " << algorithm_name(id) << " k=" << k << ": "
                << fmt_double(median_seconds(bench, algorithm_name(id), k))
                << " s\n";
  std::cout << "wrote " << opt.out << '\n';
  return 0;
}

// ------------------------------------------------------------- compare

struct CompareOptions {
  std::vector<std::string> run_dirs;
  std::string out = "penalty.csv";
  bool dry_run = false;
};

struct LoadedRun {
  std::string dir;
  std::map<std::string, std::string> config;
  std::string algorithm;
  std::vector<SeedCurve> curves;
};

LoadedRun load_run_dir(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in)
    throw ConfigError("compare: cannot open " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("compare: " + manifest_path.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object())
    throw ConfigError("compare: " + manifest_path.string() +
                      " has no config object");
  for (const auto& [key, value] : j["config"].items())
    run.config[key] = value.get<std::string>();
  run.algorithm = run.config.count("algorithm") ? run.config["algorithm"] : "";
  if (run.algorithm.empty())
    throw ConfigError("compare: " + manifest_path.string() +
                      " config lacks an algorithm");
  run.curves = read_curves_csv((fs::path(dir) / "curves.csv").string());
  return run;
}

int cmd_compare(const CompareOptions& opt) {
  if (opt.run_dirs.size() < 2)
    throw ConfigError("compare: need at least two run directories");

  std::vector<LoadedRun> runs;
  for (const std::string& dir : opt.run_dirs) runs.push_back(load_run_dir(dir));

  // Comparisons are only meaningful over the same data, budget, and seed
  // pairing.
  const std::vector<std::string> match_keys = {
      "dataset",      "synth_n",    "synth_test_n",   "synth_p",
      "synth_classes", "synth_separation", "data_seed", "idx_images",
      "idx_labels",   "csv_path",   "csv_label_column", "csv_classes",
      "cache_path",   "test_fraction", "k",           "seeds",
      "seed_set_size", "base_seed"};
  for (std::size_t r = 1; r < runs.size(); ++r) {
    for (const std::string& key : match_keys) {
      const std::string a = runs[0].config.count(key) ? runs[0].config.at(key) : "";
      const std::string b = runs[r].config.count(key) ? runs[r].config.at(key) : "";
      if (a != b)
        throw ConfigError("compare: runs differ on '" + key + "' (" +
                          runs[0].dir + ": " + a + ", " + runs[r].dir + ": " +
                          b + ")");
    }
    if (runs[r].curves.size() != runs[0].curves.size())
      throw ConfigError("compare: seed counts differ between " + runs[0].dir +
                        " and " + runs[r].dir);
  }

  const int n0 = std::stoi(runs[0].config.at("seed_set_size"));
  const int k = std::stoi(runs[0].config.at("k"));

  std::vector<AlgorithmCurves> algos;
  const std::vector<std::vector<CurvePoint>>* rand_curves = nullptr;
  std::vector<std::vector<CurvePoint>> rand_storage;
  for (const LoadedRun& run : runs) {
    AlgorithmCurves ac;
    ac.name = run.algorithm;
    for (const SeedCurve& curve : run.curves) ac.curves.push_back(curve.points);
    if (run.algorithm == "rand" && !rand_curves) {
      rand_storage = ac.curves;
      rand_curves = &rand_storage;
    }
    algos.push_back(std::move(ac));
  }

  if (opt.dry_run) {
    std::cout << "compare plan: " << runs.size() << " runs, n0=" << n0
              << ", k=" << k << (rand_curves ? ", rand truncation active"
                                             : ", no rand run (no truncation)")
              << "\ndry run: nothing written\n";
    return 0;
  }

  const PenaltyMatrix pm = penalty_matrix(algos, n0, k, rand_curves);
  write_penalty_csv(opt.out, pm);

  std::cout << "checkpoints:";
  for (double level : pm.checkpoints) std::cout << ' ' << level;
  std::cout << '\n';
  if (!rand_curves)
    std::cout << "note: no rand run among inputs, checkpoints not truncated\n";
  std::cout << "penalty matrix (row beats column; lower column mean is "
               "better):\n";
  for (std::size_t i = 0; i < pm.names.size(); ++i) {
    std::cout << "  " << pm.names[i] << ':';
    for (std::size_t j = 0; j < pm.names.size(); ++j)
      std::cout << ' '
                << fmt_double(pm.matrix(static_cast<int>(i),
                                        static_cast<int>(j)));
    std::cout << '\n';
  }
  std::cout << "  column means:";
  for (int j = 0; j < pm.column_means.size(); ++j)
    std::cout << ' ' << fmt_double(pm.column_means(j));
  std::cout << '\n';
  std::cout << "wrote " << opt.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming batch active learning via committal volume sampling"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment config");
  run_cmd->add_option("config", run_opt.config_path, "config file path")
      ->required();
  run_cmd->add_option("--out-root", run_opt.out_root,
                      "output root (default: $VESSAL_OUT_ROOT or ./runs)");
  run_cmd->add_flag("--dry-run", run_opt.dry_run, "validate and plan only");

  StreamDecideOptions sd_opt;
  CLI::App* sd_cmd = app.add_subcommand(
      "stream-decide", "committal label/skip decisions for stdin embeddings");
  sd_cmd->add_option("--rate", sd_opt.rate, "fixed query rate q in [0, 1]");
  sd_cmd->add_option("--budget", sd_opt.budget, "adaptive: labels to take");
  sd_cmd->add_option("--horizon", sd_opt.horizon, "adaptive: stream length");
  sd_cmd->add_option("--lambda", sd_opt.lambda, "ridge regularizer (default 0.01)");
  sd_cmd->add_option("--seed", sd_opt.seed, "decision RNG seed");
  sd_cmd->add_option("--format", sd_opt.format, "text (default) or binary");
  sd_cmd->add_option("--project-dim", sd_opt.project_dim,
                     "project records to this dimension before tracking");
  sd_cmd->add_option("--project-seed", sd_opt.project_seed,
                     "projection matrix seed");
  sd_cmd->add_flag("--dry-run", sd_opt.dry_run, "validate and plan only");

  BenchOptions bench_opt;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "selection-time benchmark on a synthetic pool");
  bench_cmd->add_option("--algorithms", bench_opt.algorithms,
                        "comma-separated algorithm ids");
  bench_cmd->add_option("--k-list", bench_opt.k_list, "comma-separated budgets");
  bench_cmd->add_option("--pool-size", bench_opt.pool_size, "pool size");
  bench_cmd->add_option("--dim", bench_opt.dim, "feature dimension");
  bench_cmd->add_option("--classes", bench_opt.classes, "class count");
  bench_cmd->add_option("--hidden", bench_opt.hidden, "classifier hidden width");
  bench_cmd->add_option("--replicates", bench_opt.replicates,
                        "timing replicates per cell");
  bench_cmd->add_option("--lambda", bench_opt.lambda, "ridge regularizer");
  bench_cmd->add_option("--seed", bench_opt.seed, "pool and timing seed");
  bench_cmd->add_option("--out", bench_opt.out, "timings.csv path");
  bench_cmd->add_flag("--dry-run", bench_opt.dry_run, "validate and plan only");

  CompareOptions cmp_opt;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "pairwise penalty matrix over finished run directories");
  cmp_cmd->add_option("dirs", cmp_opt.run_dirs, "run directories")
      ->expected(-2);
  cmp_cmd->add_option("--out", cmp_opt.out, "penalty.csv path");
  cmp_cmd->add_flag("--dry-run", cmp_opt.dry_run, "validate and plan only");

  try {
    app.parse(argc, argv);
    if (*run_cmd) return cmd_run(run_opt);
    if (*sd_cmd) return cmd_stream_decide(sd_opt);
    if (*bench_cmd) return cmd_bench(bench_opt);
    if (*cmp_cmd) return cmd_compare(cmp_opt);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const StreamProtocolError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
