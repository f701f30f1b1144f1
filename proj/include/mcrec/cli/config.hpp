#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcrec/datasim/ingest.hpp"
#include "mcrec/datasim/synthetic.hpp"
#include "mcrec/datasim/treatment.hpp"
#include "mcrec/metacontroller/meta.hpp"
#include "mcrec/recommenders/ctr_model.hpp"
#include "mcrec/uplift/surrogate.hpp"

namespace mcrec::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw `[section]` / `key = value` file. Keys before the first header live in
// the "" section. `#` starts a comment anywhere on a line.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };

  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  const std::string& origin() const { return origin_; }
  bool has(const std::string& section, const std::string& key) const;
  // Returns the entry and marks it consumed, or nullptr when absent.
  const Entry* take(const std::string& section, const std::string& key);
  // Throws ConfigError naming the first entry nobody consumed.
  void reject_unused() const;

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

enum class DataSource { Synthetic, Ingest };

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  std::size_t users = 2000;
  datasim::WorldSpec world;
  datasim::RolePlan roles;
  std::filesystem::path path;  // interaction file for ingestion
  datasim::IngestOptions ingest;
};

struct EvalConfig {
  std::vector<std::size_t> ks{1, 5, 10};
  std::size_t percentiles = 100;
  std::size_t random_shuffles = 100;
  std::vector<double> sweep_epsilons{0.1, 0.3, 0.5, 1.0};
  std::size_t trace_sessions = 20;
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  DataConfig data;
  MechanismMask mechanisms = MechanismMask::all();
  datasim::OutcomeRule outcome_rule = datasim::OutcomeRule::AnyClickWithinL;
  recommenders::CtrHyperParams cloud = recommenders::default_hyperparams(recommenders::Schema::Cloud);
  recommenders::CtrHyperParams device = recommenders::default_hyperparams(recommenders::Schema::Device);
  uplift::SnapshotNetParams surrogate;
  bool surrogate_warm_start = false;  // copy f_cloud item embeddings into φ_seq
  metacontroller::MetaParams meta;
  bool meta_warm_start = false;
  metacontroller::SmoothingConfig smoothing;
  std::vector<double> lambda_grid;  // empty: train once at smoothing.lambda
  bool hard_cap = false;
  EvalConfig eval;

  std::uint64_t require_seed() const;
};

// Builds a PipelineConfig, rejecting unknown sections, unknown keys and
// malformed values with the file name and line.
PipelineConfig pipeline_config_from(ConfigFile& file);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// "0.3" → {0.3}; "0, 0.2, 0.4" → {0, 0.2, 0.4}.
std::vector<double> parse_real_list(const std::string& text);
MechanismMask parse_mechanisms(const std::string& text);

}  // namespace mcrec::cli
