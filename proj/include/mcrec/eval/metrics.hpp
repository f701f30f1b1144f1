#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcrec/common.hpp"

namespace mcrec::eval {

struct ScoredOutcome {
  double score = 0.0;
  bool treated = false;  // false: control group
  int outcome = 0;
};

// Percentile uplift curve: after a descending sort by score, slice n covers
// the top ceil(n * P / N) samples (N = min(percentiles, P)) and
// Diff(n) = treated response rate − control response rate inside it. Samples
// in a tie block that straddles a slice edge count fractionally. Empty groups
// have rate 0.
std::vector<double> uplift_curve(std::span<const ScoredOutcome> pool, std::size_t percentiles = 100);

// Trapezoidal mean of the uplift curve; equals Diff(1) when N = 1.
// Throws std::invalid_argument unless both groups are present.
double auuc(std::span<const ScoredOutcome> pool, std::size_t percentiles = 100);

// Mean AUUC over random orderings: every permutation when the pool has at
// most 8 samples, otherwise `shuffles` seeded shuffles.
double auuc_random(std::span<const ScoredOutcome> pool, std::size_t percentiles = 100, std::size_t shuffles = 100,
                   std::uint64_t seed = 0);

double qini(std::span<const ScoredOutcome> pool, std::size_t percentiles = 100, std::size_t shuffles = 100,
            std::uint64_t seed = 0);

struct RankingCase {
  UserId user = 0;
  std::size_t rank = 1;  // 1-based rank of the ground-truth item
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

// Builds a case from scored candidates. The rank of the first positive counts
// the candidates ahead of it under score-descending, item-id-ascending order.
RankingCase make_case(UserId user, std::span<const ItemId> positives, std::span<const double> positive_scores,
                      std::span<const ItemId> negatives, std::span<const double> negative_scores);

double hitrate_at_k(std::span<const RankingCase> cases, std::size_t k);
double ndcg_at_k(std::span<const RankingCase> cases, std::size_t k);

// Mean over cases of the share of (positive, negative) pairs with the
// negative strictly below the positive. Cases with an empty side are left
// out and counted in `excluded`.
double gauc(std::span<const RankingCase> cases, std::size_t* excluded = nullptr);

}  // namespace mcrec::eval
