#include "vessal/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <vector>

namespace vessal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long long parse_int(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (value.empty() || end != begin + value.size())
    throw ConfigError("config key '" + key + "': '" + value +
                      "' is not an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (value.empty() || end != begin + value.size() || value[0] == '-')
    throw ConfigError("config key '" + key + "': '" + value +
                      "' is not an unsigned integer");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (value.empty() || end != begin + value.size())
    throw ConfigError("config key '" + key + "': '" + value +
                      "' is not a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("config key '" + key + "': '" + value +
                    "' is not a boolean (use 0/1/true/false)");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

DatasetSpec::Kind dataset_kind_from_name(const std::string& name) {
  if (name == "synth") return DatasetSpec::Kind::synth;
  if (name == "idx") return DatasetSpec::Kind::idx;
  if (name == "csv") return DatasetSpec::Kind::csv;
  if (name == "cache") return DatasetSpec::Kind::cache;
  throw ConfigError("config key 'dataset': unknown kind '" + name +
                    "' (want synth, idx, csv, or cache)");
}

}  // namespace

const char* dataset_kind_name(DatasetSpec::Kind kind) {
  switch (kind) {
    case DatasetSpec::Kind::synth: return "synth";
    case DatasetSpec::Kind::idx: return "idx";
    case DatasetSpec::Kind::csv: return "csv";
    case DatasetSpec::Kind::cache: return "cache";
  }
  throw std::logic_error("dataset_kind_name: unhandled kind");
}

const char* stream_order_name(const StreamOrder& order) {
  switch (order.kind) {
    case StreamOrder::Kind::shuffled: return "shuffled";
    case StreamOrder::Kind::pca_sorted:
      return order.descending ? "pca_desc" : "pca_asc";
    case StreamOrder::Kind::given: return "given";
  }
  throw std::logic_error("stream_order_name: unhandled kind");
}

StreamOrder stream_order_from_name(const std::string& name) {
  if (name == "shuffled") return StreamOrder::shuffled(0);
  if (name == "pca_asc") return StreamOrder::pca_sorted(false);
  if (name == "pca_desc") return StreamOrder::pca_sorted(true);
  if (name == "given") return StreamOrder::given();
  throw ConfigError("config key 'stream_order': unknown order '" + name +
                    "' (want shuffled, pca_asc, pca_desc, or given)");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  bool version_seen = false;

  std::stringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": want 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError("config key '" + key + "' appears twice");

    if (key == "config_version") {
      if (parse_int(key, value) != 1)
        throw ConfigError("config key 'config_version': unsupported version " +
                          value);
      version_seen = true;
    } else if (key == "algorithm") {
      try {
        cfg.algorithm = algorithm_from_name(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config key 'algorithm': " + std::string(e.what()));
      }
    } else if (key == "dataset") {
      cfg.dataset.kind = dataset_kind_from_name(value);
    } else if (key == "synth_n") {
      cfg.dataset.n = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_test_n") {
      cfg.dataset.test_n = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_p") {
      cfg.dataset.p = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_classes") {
      cfg.dataset.class_count = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_separation") {
      cfg.dataset.separation = parse_double(key, value);
    } else if (key == "data_seed") {
      cfg.dataset.data_seed = parse_u64(key, value);
    } else if (key == "idx_images") {
      cfg.dataset.idx_images = value;
    } else if (key == "idx_labels") {
      cfg.dataset.idx_labels = value;
    } else if (key == "csv_path") {
      cfg.dataset.csv_path = value;
    } else if (key == "csv_label_column") {
      cfg.dataset.csv_label_column = value;
    } else if (key == "csv_classes") {
      cfg.dataset.csv_classes = static_cast<int>(parse_int(key, value));
    } else if (key == "cache_path") {
      cfg.dataset.cache_path = value;
    } else if (key == "test_fraction") {
      cfg.dataset.test_fraction = parse_double(key, value);
    } else if (key == "k") {
      cfg.k = static_cast<int>(parse_int(key, value));
    } else if (key == "rounds") {
      cfg.rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "seeds") {
      cfg.seeds = static_cast<int>(parse_int(key, value));
    } else if (key == "seed_set_size") {
      cfg.seed_set_size = static_cast<int>(parse_int(key, value));
    } else if (key == "base_seed") {
      cfg.base_seed = parse_u64(key, value);
    } else if (key == "stream_order") {
      cfg.stream_order = stream_order_from_name(value);
    } else if (key == "lambda") {
      cfg.lambda = parse_double(key, value);
    } else if (key == "projection_dim") {
      cfg.projection_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "hidden_dim") {
      cfg.hidden_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "persist_tracker") {
      cfg.persist_tracker = parse_bool(key, value);
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = parse_double(key, value);
    } else if (key == "target_train_accuracy") {
      cfg.train.target_train_accuracy = parse_double(key, value);
    } else if (key == "max_epochs") {
      cfg.train.max_epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "minibatch_size") {
      cfg.train.minibatch_size = static_cast<int>(parse_int(key, value));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!version_seen)
    throw ConfigError("config is missing 'config_version = 1'");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "config_version = 1\n";
  out << "algorithm = " << algorithm_name(cfg.algorithm) << '\n';
  out << "dataset = " << dataset_kind_name(cfg.dataset.kind) << '\n';
  out << "synth_n = " << cfg.dataset.n << '\n';
  out << "synth_test_n = " << cfg.dataset.test_n << '\n';
  out << "synth_p = " << cfg.dataset.p << '\n';
  out << "synth_classes = " << cfg.dataset.class_count << '\n';
  out << "synth_separation = " << fmt_double(cfg.dataset.separation) << '\n';
  out << "data_seed = " << cfg.dataset.data_seed << '\n';
  out << "idx_images = " << cfg.dataset.idx_images << '\n';
  out << "idx_labels = " << cfg.dataset.idx_labels << '\n';
  out << "csv_path = " << cfg.dataset.csv_path << '\n';
  out << "csv_label_column = " << cfg.dataset.csv_label_column << '\n';
  out << "csv_classes = " << cfg.dataset.csv_classes << '\n';
  out << "cache_path = " << cfg.dataset.cache_path << '\n';
  out << "test_fraction = " << fmt_double(cfg.dataset.test_fraction) << '\n';
  out << "k = " << cfg.k << '\n';
  out << "rounds = " << cfg.rounds << '\n';
  out << "seeds = " << cfg.seeds << '\n';
  out << "seed_set_size = " << cfg.seed_set_size << '\n';
  out << "base_seed = " << cfg.base_seed << '\n';
  out << "stream_order = " << stream_order_name(cfg.stream_order) << '\n';
  out << "lambda = " << fmt_double(cfg.lambda) << '\n';
  out << "projection_dim = " << cfg.projection_dim << '\n';
  out << "hidden_dim = " << cfg.hidden_dim << '\n';
  out << "persist_tracker = " << (cfg.persist_tracker ? 1 : 0) << '\n';
  out << "learning_rate = " << fmt_double(cfg.train.learning_rate) << '\n';
  out << "target_train_accuracy = " << fmt_double(cfg.train.target_train_accuracy)
      << '\n';
  out << "max_epochs = " << cfg.train.max_epochs << '\n';
  out << "minibatch_size = " << cfg.train.minibatch_size << '\n';
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

std::string run_dir_name(const ExperimentConfig& cfg) {
  return "run-" + config_hash_hex(cfg);
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::map<std::string, std::string>& notes) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config_hash"] = config_hash_hex(cfg);

  nlohmann::json config = nlohmann::json::object();
  std::stringstream canon(canonical_config(cfg));
  std::string line;
  while (std::getline(canon, line)) {
    const std::size_t eq = line.find(" = ");
    config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = std::move(config);

  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
  j["created_at"] = stamp;

  j["notes"] = nlohmann::json::object();
  for (const auto& [key, value] : notes) j["notes"][key] = value;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace vessal
