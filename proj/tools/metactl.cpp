#include <CLI11.hpp>

#include <iostream>

#include "mcrec/cli/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> epsilon;
  std::optional<std::string> lambda;
};

const char* describe(const std::string& stage) {
  if (stage == "gen-data") return "Generate the synthetic world or ingest an interaction log, then split roles";
  if (stage == "train-ctr") return "Train the cloud and on-device CTR models";
  if (stage == "collect-treatments") return "Serve treatment and CATE-test points with each mechanism";
  if (stage == "train-surrogates") return "Fit the shared multi-head outcome surrogates";
  if (stage == "build-meta") return "Label every treatment snapshot with its best mechanism";
  if (stage == "train-meta") return "Train the meta controller under the invoking budget";
  if (stage == "evaluate") return "Write CTR and uplift reports";
  if (stage == "sweep") return "Sweep the budget and write trade-off curves";
  if (stage == "trace") return "Dump per-session decisions";
  return "Run every stage in order";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metactl: mechanism-selection pipeline driver"};
  app.require_subcommand(1);
  Options opt;

  for (const auto& stage : mcrec::cli::Pipeline::stage_names()) {
    auto* sub = app.add_subcommand(stage, describe(stage));
    sub->add_option("--config", opt.config, "Pipeline config file")->required();
    sub->add_option("--out", opt.out, "Artifact directory")->required();
    sub->add_option("--seed", opt.seed, "Top-level seed (overrides the config)");
    if (stage == "train-meta" || stage == "run-all") {
      sub->add_option("--epsilon", opt.epsilon, "Invoking budget");
      sub->add_option("--lambda", opt.lambda, "Smoothing strength, or a comma-separated grid to search");
    }
  }

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    (void)mcrec::cli::thread_cap_from_env();
    auto cfg = mcrec::cli::load_pipeline_config(opt.config);
    if (opt.seed) cfg.seed = opt.seed;
    mcrec::cli::Pipeline pipeline(std::move(cfg), opt.out, std::cerr);
    pipeline.run(stage, {opt.epsilon, opt.lambda});
  } catch (const std::exception& e) {
    std::cerr << "metactl " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
