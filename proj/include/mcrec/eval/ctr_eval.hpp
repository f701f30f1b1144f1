#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcrec/eval/metrics.hpp"
#include "mcrec/metacontroller/meta.hpp"
#include "mcrec/recommenders/ctr_model.hpp"

namespace mcrec::eval {

// Candidate scores of one CTR test case under each of the three mechanisms,
// computed once and shared by every routing policy.
struct ScoredCase {
  datasim::HistorySnapshot snapshot;
  std::vector<ItemId> positives;
  std::vector<ItemId> negatives;
  std::array<std::vector<double>, kNumMechanisms> positive_scores;
  std::array<std::vector<double>, kNumMechanisms> negative_scores;
};

std::vector<ScoredCase> score_cases(std::span<const datasim::CandidateSet> cases, const recommenders::CtrModel& cloud,
                                    const recommenders::CtrModel& device);

struct CtrMetrics {
  std::string method;
  std::vector<std::size_t> ks;
  std::vector<double> hitrate;  // parallel to ks
  std::vector<double> ndcg;     // parallel to ks
  double auc = 0.0;
  double refresh_ratio = 0.0;
  std::array<double, kNumMechanisms> share{};
  std::size_t cases = 0;
  std::size_t excluded = 0;

  double hitrate_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;
};

// Metrics when case i is served by decisions[i].
CtrMetrics evaluate_policy(const std::string& name, std::span<const ScoredCase> cases,
                           std::span<const Mechanism> decisions, std::span<const std::size_t> ks);

std::vector<Mechanism> constant_policy(std::size_t n, Mechanism m);

// Random routing that matches the given mechanism shares (RMixRec).
std::vector<Mechanism> random_mixture(std::size_t n, const std::array<double, kNumMechanisms>& share,
                                      std::uint64_t seed);

std::vector<Mechanism> meta_policy(const metacontroller::MetaModel& meta, std::span<const ScoredCase> cases,
                                   const metacontroller::ServingOptions& opt);

struct SweepRow {
  double epsilon = 1.0;
  double lambda = 0.0;
  bool satisfied = true;
  double hitrate1 = 0.0;
  double ndcg5 = 0.0;
  double auc = 0.0;
  double invoking_ratio = 0.0;  // realised on the CTR test cases
  double holdout_ratio = 0.0;   // on the D_meta hold-out
  std::vector<double> grid_ratios;  // hold-out ratio for every λ the search trained
};

// For every ε: lambda_search, then CTR evaluation of the chosen meta model.
// Throws std::invalid_argument on an empty ε list.
std::vector<SweepRow> tradeoff_sweep(const uplift::MetaDataset& d_meta, const metacontroller::MetaParams& hp,
                                     std::span<const double> lambda_grid, std::span<const double> epsilons,
                                     std::span<const ScoredCase> cases, const metacontroller::ServingOptions& opt,
                                     metacontroller::SmoothingConfig base = {});

}  // namespace mcrec::eval
