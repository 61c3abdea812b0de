#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "vessal/harness.hpp"

namespace vessal {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Experiment configs are 'key = value' text files. Blank lines and lines
/// starting with '#' are skipped. config_version = 1 is required; every
/// other key is optional and falls back to its default. Unknown or
/// duplicated keys and malformed values raise ConfigError naming the key.
/// The schema is documented in the README.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Full effective config, one 'key = value' line per schema key in fixed
/// order. Parsing this text reproduces the config exactly; the run hash is
/// computed over it.
std::string canonical_config(const ExperimentConfig& cfg);

/// FNV-1a 64-bit hash of the canonical text.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

/// "run-<hash16>", the output directory name for a config.
std::string run_dir_name(const ExperimentConfig& cfg);

const char* stream_order_name(const StreamOrder& order);
StreamOrder stream_order_from_name(const std::string& name);

const char* dataset_kind_name(DatasetSpec::Kind kind);

/// manifest.json: schema version, config hash, the effective config as a
/// string map, a UTC timestamp, and free-form notes. Everything except
/// created_at is deterministic for a given config.
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::map<std::string, std::string>& notes);

}  // namespace vessal
