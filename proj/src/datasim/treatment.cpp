#include "mcrec/datasim/treatment.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace mcrec::datasim {

int outcome_label(std::span<const int> clicks, std::size_t L) {
  const std::size_t n = std::min(L, clicks.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (clicks[i] != 0) return 1;
  }
  return 0;
}

std::vector<ItemId> serving_pool(const HistorySnapshot& snap, std::size_t vocab_size, Mechanism m) {
  std::vector<char> blocked(vocab_size, 0);
  for (ItemId i : snap.cloud_history) {
    if (i < vocab_size) blocked[i] = 1;
  }
  if (m != Mechanism::Cloud) {
    for (ItemId i : snap.in_session) {
      if (i < vocab_size) blocked[i] = 1;
    }
  }
  std::vector<ItemId> pool;
  pool.reserve(vocab_size);
  for (ItemId i = 0; i < vocab_size; ++i) {
    if (!blocked[i]) pool.push_back(i);
  }
  return pool;
}

namespace {

std::vector<ItemId> top_by(std::span<const ItemId> pool, std::size_t n, const std::vector<double>& score) {
  std::vector<ItemId> order(pool.begin(), pool.end());
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](ItemId a, ItemId b) { return score[a] != score[b] ? score[a] > score[b] : a < b; });
  order.resize(n);
  return order;
}

}  // namespace

std::vector<ItemId> LatentOracleServer::serve(const HistorySnapshot& snap, Mechanism m, std::span<const ItemId> pool,
                                              std::size_t n) const {
  const std::uint32_t now = snap.session;
  const std::uint32_t before = now == 0 ? 0 : now - 1;
  const std::size_t vocab = world_.spec.catalog_size;
  std::vector<double> stale(vocab), fresh(vocab);
  for (ItemId j = 0; j < vocab; ++j) {
    stale[j] = world_.affinity(snap.user, before, j);
    fresh[j] = world_.affinity(snap.user, now, j);
  }
  switch (m) {
    case Mechanism::Cloud: return top_by(pool, n, stale);
    case Mechanism::Refresh: return top_by(pool, n, fresh);
    case Mechanism::Device: {
      const auto cache = top_by(pool, world_.spec.cache_size, stale);
      return top_by(cache, n, fresh);
    }
  }
  return {};
}

double served_click_probability(const SyntheticWorld& world, const HistorySnapshot& snap, ItemId item) {
  if (std::find(snap.in_session.begin(), snap.in_session.end(), item) != snap.in_session.end()) return 0.0;
  return world.click_probability(snap.user, snap.session, item);
}

double expected_outcome(const SyntheticWorld& world, const HistorySnapshot& snap, std::span<const ItemId> served) {
  const std::size_t n = std::min(world.spec.session_length, served.size());
  double none = 1.0;
  for (std::size_t i = 0; i < n; ++i) none *= 1.0 - served_click_probability(world, snap, served[i]);
  return 1.0 - none;
}

namespace {

std::vector<ItemId> serve_checked(const MechanismServer& server, const HistorySnapshot& snap, Mechanism m,
                                  std::size_t vocab, std::size_t n) {
  if (!server.supports(m)) {
    throw std::runtime_error(std::string("no trained recommender for the ") + mechanism_name(m) + " mechanism");
  }
  const auto pool = serving_pool(snap, vocab, m);
  return server.serve(snap, m, pool, n);
}

}  // namespace

std::vector<Mechanism> oracle_assignment(const SyntheticWorld& world, std::span<const CandidateSet> points,
                                         const MechanismServer& server) {
  std::vector<Mechanism> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    Mechanism best = Mechanism::Cloud;
    double best_value = -1.0;
    for (std::size_t t = 0; t < kNumMechanisms; ++t) {
      const Mechanism m = mechanism_from_index(t);
      const auto served = serve_checked(server, p.snapshot, m, world.spec.catalog_size, world.spec.session_length);
      const double v = expected_outcome(world, p.snapshot, served);
      if (v > best_value + 1e-12) {
        best_value = v;
        best = m;
      }
    }
    out.push_back(best);
  }
  return out;
}

TreatmentDataset simulate_with_mechanism(const SyntheticWorld& world, std::span<const CandidateSet> points,
                                         Mechanism m, const MechanismServer& server, std::uint64_t seed) {
  TreatmentDataset out;
  out.reserve(points.size());
  const std::size_t L = world.spec.session_length;
  for (const auto& p : points) {
    const auto served = serve_checked(server, p.snapshot, m, world.spec.catalog_size, L);
    std::mt19937_64 rng(derive_seed(seed, "click." + std::to_string(p.snapshot.user) + "." +
                                              std::to_string(p.snapshot.session)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> clicks;
    for (ItemId item : served) clicks.push_back(unif(rng) < served_click_probability(world, p.snapshot, item) ? 1 : 0);
    out.push_back(TreatmentSample{p.snapshot, m, outcome_label(clicks, L)});
  }
  return out;
}

TreatmentDataset simulate_with_mechanism(std::span<const CandidateSet> points, Mechanism m,
                                         const MechanismServer& server, OutcomeRule rule, std::size_t L) {
  if (!server.supports(m)) {
    throw std::runtime_error(std::string("no trained recommender for the ") + mechanism_name(m) + " mechanism");
  }
  TreatmentDataset out;
  out.reserve(points.size());
  for (const auto& p : points) {
    std::vector<ItemId> pool(p.positives);
    pool.insert(pool.end(), p.negatives.begin(), p.negatives.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    const std::set<ItemId> positive(p.positives.begin(), p.positives.end());
    const std::size_t n = rule == OutcomeRule::PositiveRankedFirst ? 1 : L;
    const auto served = server.serve(p.snapshot, m, pool, n);
    std::vector<int> clicks;
    for (ItemId item : served) clicks.push_back(positive.count(item) ? 1 : 0);
    out.push_back(TreatmentSample{p.snapshot, m, outcome_label(clicks, n)});
  }
  return out;
}

}  // namespace mcrec::datasim
