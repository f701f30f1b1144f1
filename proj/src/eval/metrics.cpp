#include "mcrec/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mcrec::eval {

namespace {

void check_groups(std::span<const ScoredOutcome> pool) {
  const bool any_t = std::any_of(pool.begin(), pool.end(), [](const ScoredOutcome& s) { return s.treated; });
  const bool any_c = std::any_of(pool.begin(), pool.end(), [](const ScoredOutcome& s) { return !s.treated; });
  if (!any_t || !any_c) throw std::invalid_argument("uplift metrics need both treated and control samples");
}

double trapezoid(const std::vector<double>& diff) {
  if (diff.size() == 1) return diff[0];
  double area = 0.0;
  for (std::size_t n = 0; n + 1 < diff.size(); ++n) area += 0.5 * (diff[n] + diff[n + 1]);
  return area / static_cast<double>(diff.size() - 1);
}

}  // namespace

std::vector<double> uplift_curve(std::span<const ScoredOutcome> pool, std::size_t percentiles) {
  check_groups(pool);
  if (percentiles == 0) throw std::invalid_argument("uplift_curve: need at least one percentile");
  const std::size_t P = pool.size();
  const std::size_t N = std::min(percentiles, P);

  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool[a].score > pool[b].score; });

  struct Block {
    std::size_t start, size;
    double treated, treated_pos, control, control_pos;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < P;) {
    std::size_t j = i;
    Block b{i, 0, 0, 0, 0, 0};
    while (j < P && pool[order[j]].score == pool[order[i]].score) {
      const auto& s = pool[order[j]];
      if (s.treated) {
        b.treated += 1;
        b.treated_pos += s.outcome;
      } else {
        b.control += 1;
        b.control_pos += s.outcome;
      }
      ++j;
    }
    b.size = j - i;
    blocks.push_back(b);
    i = j;
  }

  std::vector<double> diff(N);
  std::size_t bi = 0;
  double nt = 0, nt_pos = 0, nc = 0, nc_pos = 0;  // totals of fully included blocks
  for (std::size_t n = 1; n <= N; ++n) {
    const std::size_t k = (n * P + N - 1) / N;
    while (bi < blocks.size() && blocks[bi].start + blocks[bi].size <= k) {
      nt += blocks[bi].treated;
      nt_pos += blocks[bi].treated_pos;
      nc += blocks[bi].control;
      nc_pos += blocks[bi].control_pos;
      ++bi;
    }
    double t = nt, tp = nt_pos, c = nc, cp = nc_pos;
    if (bi < blocks.size() && blocks[bi].start < k) {
      const double w = static_cast<double>(k - blocks[bi].start) / static_cast<double>(blocks[bi].size);
      t += w * blocks[bi].treated;
      tp += w * blocks[bi].treated_pos;
      c += w * blocks[bi].control;
      cp += w * blocks[bi].control_pos;
    }
    diff[n - 1] = (t > 0 ? tp / t : 0.0) - (c > 0 ? cp / c : 0.0);
  }
  return diff;
}

double auuc(std::span<const ScoredOutcome> pool, std::size_t percentiles) {
  return trapezoid(uplift_curve(pool, percentiles));
}

double auuc_random(std::span<const ScoredOutcome> pool, std::size_t percentiles, std::size_t shuffles,
                   std::uint64_t seed) {
  check_groups(pool);
  std::vector<ScoredOutcome> work(pool.begin(), pool.end());
  std::vector<std::size_t> perm(pool.size());
  std::iota(perm.begin(), perm.end(), 0);
  const auto score_in_order = [&]() {
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
      work[perm[pos]].score = -static_cast<double>(pos);
    }
    return auuc(work, percentiles);
  };
  double total = 0.0;
  std::size_t count = 0;
  if (pool.size() <= 8) {
    do {
      total += score_in_order();
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    if (shuffles == 0) throw std::invalid_argument("auuc_random: need at least one shuffle");
    std::mt19937_64 rng(seed);
    for (std::size_t r = 0; r < shuffles; ++r) {
      std::shuffle(perm.begin(), perm.end(), rng);
      total += score_in_order();
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double qini(std::span<const ScoredOutcome> pool, std::size_t percentiles, std::size_t shuffles, std::uint64_t seed) {
  return auuc(pool, percentiles) - auuc_random(pool, percentiles, shuffles, seed);
}

RankingCase make_case(UserId user, std::span<const ItemId> positives, std::span<const double> positive_scores,
                      std::span<const ItemId> negatives, std::span<const double> negative_scores) {
  if (positives.size() != positive_scores.size() || negatives.size() != negative_scores.size()) {
    throw std::invalid_argument("make_case: ids and scores differ in length");
  }
  RankingCase c;
  c.user = user;
  c.positive_scores.assign(positive_scores.begin(), positive_scores.end());
  c.negative_scores.assign(negative_scores.begin(), negative_scores.end());
  if (positives.empty()) return c;
  const double s = positive_scores[0];
  const ItemId g = positives[0];
  std::size_t ahead = 0;
  const auto beats = [&](ItemId id, double v) { return v > s || (v == s && id < g); };
  for (std::size_t i = 1; i < positives.size(); ++i) ahead += beats(positives[i], positive_scores[i]);
  for (std::size_t i = 0; i < negatives.size(); ++i) ahead += beats(negatives[i], negative_scores[i]);
  c.rank = ahead + 1;
  return c;
}

double hitrate_at_k(std::span<const RankingCase> cases, std::size_t k) {
  if (cases.empty()) throw std::invalid_argument("hitrate_at_k: no cases");
  if (k == 0) throw std::invalid_argument("hitrate_at_k: K must be >= 1");
  double hits = 0.0;
  for (const auto& c : cases) hits += c.rank <= k ? 1.0 : 0.0;
  return hits / static_cast<double>(cases.size());
}

double ndcg_at_k(std::span<const RankingCase> cases, std::size_t k) {
  if (cases.empty()) throw std::invalid_argument("ndcg_at_k: no cases");
  if (k == 0) throw std::invalid_argument("ndcg_at_k: K must be >= 1");
  double total = 0.0;
  for (const auto& c : cases) {
    if (c.rank <= k) total += 1.0 / std::log2(static_cast<double>(c.rank) + 1.0);
  }
  return total / static_cast<double>(cases.size());
}

double gauc(std::span<const RankingCase> cases, std::size_t* excluded) {
  std::size_t skipped = 0, used = 0;
  double total = 0.0;
  for (const auto& c : cases) {
    if (c.positive_scores.empty() || c.negative_scores.empty()) {
      ++skipped;
      continue;
    }
    double won = 0.0;
    for (double p : c.positive_scores) {
      for (double n : c.negative_scores) won += n < p ? 1.0 : 0.0;
    }
    total += won / static_cast<double>(c.positive_scores.size() * c.negative_scores.size());
    ++used;
  }
  if (excluded) *excluded = skipped;
  if (used == 0) throw std::invalid_argument("gauc: no case has both positives and negatives");
  return total / static_cast<double>(used);
}

}  // namespace mcrec::eval
