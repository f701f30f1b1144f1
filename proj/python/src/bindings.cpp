#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mcrec/cli/config.hpp"
#include "mcrec/cli/pipeline.hpp"
#include "mcrec/eval/metrics.hpp"
#include "mcrec/metacontroller/meta.hpp"
#include "mcrec/uplift/surrogate.hpp"

namespace py = pybind11;
using namespace mcrec;

namespace {

std::vector<eval::ScoredOutcome> pool_of(const std::vector<double>& scores, const std::vector<bool>& treated,
                                         const std::vector<int>& outcomes) {
  if (scores.size() != treated.size() || scores.size() != outcomes.size()) {
    throw std::invalid_argument("scores, treated and outcomes must have the same length");
  }
  std::vector<eval::ScoredOutcome> pool(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pool[i] = {scores[i], treated[i], outcomes[i]};
  return pool;
}

std::vector<eval::RankingCase> cases_of(const std::vector<std::size_t>& ranks) {
  std::vector<eval::RankingCase> cases(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] == 0) throw std::invalid_argument("ranks are 1-based");
    cases[i].rank = ranks[i];
  }
  return cases;
}

metacontroller::SmoothingTarget target_of(const std::string& name) {
  if (name == "second-largest") return metacontroller::SmoothingTarget::SecondLargest;
  if (name == "best-alternative") return metacontroller::SmoothingTarget::BestAlternative;
  throw std::invalid_argument("target must be 'second-largest' or 'best-alternative'");
}

Mechanism mechanism_of(const std::string& name) {
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    if (name == mechanism_name(mechanism_from_index(t))) return mechanism_from_index(t);
  }
  throw std::invalid_argument("unknown mechanism '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Device-cloud recommendation with a budget-constrained meta controller";

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<cli::MissingArtifact>(m, "MissingArtifact", PyExc_FileNotFoundError);

  m.attr("MECHANISMS") = py::make_tuple("cloud", "device", "refresh");
  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("stage"));

  m.def(
      "uplift_curve",
      [](const std::vector<double>& s, const std::vector<bool>& t, const std::vector<int>& y, std::size_t n) {
        return eval::uplift_curve(pool_of(s, t, y), n);
      },
      py::arg("scores"), py::arg("treated"), py::arg("outcomes"), py::arg("percentiles") = 100);
  m.def(
      "auuc",
      [](const std::vector<double>& s, const std::vector<bool>& t, const std::vector<int>& y, std::size_t n) {
        return eval::auuc(pool_of(s, t, y), n);
      },
      py::arg("scores"), py::arg("treated"), py::arg("outcomes"), py::arg("percentiles") = 100);
  m.def(
      "auuc_random",
      [](const std::vector<double>& s, const std::vector<bool>& t, const std::vector<int>& y, std::size_t n,
         std::size_t shuffles, std::uint64_t seed) { return eval::auuc_random(pool_of(s, t, y), n, shuffles, seed); },
      py::arg("scores"), py::arg("treated"), py::arg("outcomes"), py::arg("percentiles") = 100,
      py::arg("shuffles") = 100, py::arg("seed") = 0);
  m.def(
      "qini",
      [](const std::vector<double>& s, const std::vector<bool>& t, const std::vector<int>& y, std::size_t n,
         std::size_t shuffles, std::uint64_t seed) { return eval::qini(pool_of(s, t, y), n, shuffles, seed); },
      py::arg("scores"), py::arg("treated"), py::arg("outcomes"), py::arg("percentiles") = 100,
      py::arg("shuffles") = 100, py::arg("seed") = 0);

  m.def(
      "hitrate_at_k", [](const std::vector<std::size_t>& ranks, std::size_t k) {
        return eval::hitrate_at_k(cases_of(ranks), k);
      },
      py::arg("ranks"), py::arg("k"), "Share of cases whose 1-based rank is at most k.");
  m.def(
      "ndcg_at_k", [](const std::vector<std::size_t>& ranks, std::size_t k) {
        return eval::ndcg_at_k(cases_of(ranks), k);
      },
      py::arg("ranks"), py::arg("k"));
  m.def(
      "gauc",
      [](const std::vector<std::pair<std::vector<double>, std::vector<double>>>& groups) {
        std::vector<eval::RankingCase> cases(groups.size());
        for (std::size_t i = 0; i < groups.size(); ++i) {
          cases[i].positive_scores = groups[i].first;
          cases[i].negative_scores = groups[i].second;
        }
        std::size_t excluded = 0;
        const double auc = eval::gauc(cases, &excluded);
        return py::make_tuple(auc, excluded);
      },
      py::arg("groups"), "Mean per-group AUC over (positive_scores, negative_scores) pairs; returns (auc, excluded).");

  m.def(
      "cate",
      [](const std::array<double, kNumMechanisms>& g) { return uplift::cate_from_outcomes(g).tau; },
      py::arg("outcomes"), "CATEs (0, g1 - g0, g2 - g0) from three predicted outcome probabilities.");
  m.def(
      "best_mechanism",
      [](const std::array<double, kNumMechanisms>& tau, const std::string& allowed) {
        uplift::CateEstimate c;
        c.tau = tau;
        return std::string(mechanism_name(uplift::best_mechanism(c, mask_from_string(allowed))));
      },
      py::arg("tau"), py::arg("allowed") = "111");

  m.def("invoking_ratio", [](const std::vector<metacontroller::Simplex>& p) { return metacontroller::invoking_ratio(p); },
        py::arg("predictions"));
  m.def(
      "smooth_labels",
      [](const std::vector<metacontroller::Simplex>& preds, const std::vector<metacontroller::Simplex>& labels,
         double epsilon, double lambda, std::optional<double> batch_ratio, const std::string& target) {
        metacontroller::SmoothingConfig cfg;
        cfg.epsilon = epsilon;
        cfg.lambda = lambda;
        cfg.target = target_of(target);
        cfg.validate();
        return batch_ratio ? metacontroller::smooth_labels(preds, labels, *batch_ratio, cfg)
                           : metacontroller::smooth_labels(preds, labels, cfg);
      },
      py::arg("predictions"), py::arg("labels"), py::arg("epsilon"), py::arg("lam"), py::arg("batch_ratio") = py::none(),
      py::arg("target") = "second-largest");
  m.def(
      "select_mechanism",
      [](const metacontroller::Simplex& p, const std::string& allowed) {
        return std::string(mechanism_name(metacontroller::select_mechanism(p, mask_from_string(allowed))));
      },
      py::arg("prediction"), py::arg("allowed") = "111");
  m.def(
      "select_lambda",
      [](const std::vector<double>& grid, const std::vector<double>& ratios, double epsilon) {
        const auto r = metacontroller::select_lambda(grid, ratios, epsilon);
        return py::make_tuple(r.lambda, r.satisfied);
      },
      py::arg("grid"), py::arg("ratios"), py::arg("epsilon"), "Returns (lambda, satisfied).");
  m.def("mechanism_index", [](const std::string& name) { return index_of(mechanism_of(name)); }, py::arg("name"));

  m.attr("STAGES") = cli::Pipeline::stage_names();
  m.def(
      "run_stage",
      [](const std::filesystem::path& config, const std::filesystem::path& out, const std::string& stage,
         std::optional<std::uint64_t> seed, std::optional<double> epsilon, std::optional<std::string> lambda) {
        auto cfg = cli::load_pipeline_config(config);
        if (seed) cfg.seed = *seed;
        std::ostringstream log;
        cli::StageOverrides o;
        o.epsilon = epsilon;
        o.lambda = lambda;
        {
          py::gil_scoped_release release;
          cli::Pipeline(cfg, out, log).run(stage, o);
        }
        return log.str();
      },
      py::arg("config"), py::arg("out"), py::arg("stage"), py::arg("seed") = py::none(),
      py::arg("epsilon") = py::none(), py::arg("lam") = py::none(),
      "Runs one metactl stage in-process and returns its progress log.");
}
