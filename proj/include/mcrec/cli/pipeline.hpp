#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcrec/cli/config.hpp"

namespace mcrec::cli {

// File names inside the output directory. The README lists which stage
// reads and writes each one.
namespace artifact {
inline constexpr const char* kWorld = "world.mckp";
inline constexpr const char* kEvents = "events.tsv";
inline constexpr const char* kCorpus = "corpus.tsv";
inline constexpr const char* kDataReport = "data_report.tsv";
inline constexpr const char* kUserNames = "users.tsv";
inline constexpr const char* kItemNames = "items.tsv";
inline constexpr const char* kCloud = "cloud.mckp";
inline constexpr const char* kDevice = "device.mckp";
inline constexpr const char* kCtrTrainReport = "ctr_train_report.tsv";
inline constexpr const char* kSurrogates = "surrogates.mckp";
inline constexpr const char* kSurrogateReport = "surrogate_report.tsv";
inline constexpr const char* kMetaData = "d_meta.tsv";
inline constexpr const char* kMetaDataReport = "d_meta_report.tsv";
inline constexpr const char* kMeta = "meta.mckp";
inline constexpr const char* kMetaReport = "meta_report.tsv";
inline constexpr const char* kLambdaCurve = "lambda_curve.tsv";
inline constexpr const char* kCtrReport = "ctr_report.tsv";
inline constexpr const char* kUpliftReport = "uplift_report.tsv";
inline constexpr const char* kSweep = "sweep.tsv";
inline constexpr const char* kTrace = "trace.tsv";

std::string treatments(Mechanism m);  // treatments_<name>.tsv
std::string cate(Mechanism m);        // cate_<name>.tsv
}  // namespace artifact

// A required input is absent. what() names the file and the command that
// produces it.
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(const std::filesystem::path& path, const std::string& producer);
  const std::filesystem::path& path() const { return path_; }
  const std::string& producer() const { return producer_; }

 private:
  std::filesystem::path path_;
  std::string producer_;
};

struct StageOverrides {
  std::optional<double> epsilon;
  std::optional<std::string> lambda;  // a value or a comma-separated grid
};

class Pipeline {
 public:
  // `log` receives progress lines; artifacts never depend on it.
  Pipeline(PipelineConfig cfg, std::filesystem::path out, std::ostream& log);

  const PipelineConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }

  void gen_data();
  void train_ctr();
  void collect_treatments();
  void train_surrogates();
  void build_meta();
  void train_meta(const StageOverrides& o = {});
  void evaluate();
  void sweep();
  void trace();
  void run_all(const StageOverrides& o = {});

  static const std::vector<std::string>& stage_names();
  // Runs a stage by its command name; throws std::invalid_argument if unknown.
  void run(const std::string& stage, const StageOverrides& o = {});

 private:
  std::filesystem::path at(const std::string& name) const { return out_ / name; }
  std::filesystem::path need(const std::string& name, const std::string& producer) const;
  std::uint64_t seed(const std::string& stage) const;

  PipelineConfig cfg_;
  std::filesystem::path out_;
  std::ostream& log_;
};

// Value of METACTL_THREADS (1 when unset). Throws std::invalid_argument for
// anything but a positive integer.
std::size_t thread_cap_from_env();

}  // namespace mcrec::cli
