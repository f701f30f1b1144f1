#include "mcrec/recommenders/ranking.hpp"

#include <algorithm>
#include <numeric>

namespace mcrec::recommenders {

using seqmodel::click_probability;

namespace {

std::vector<double> score_all(const CtrModel& model, std::span<const ItemId> history, std::span<const ItemId> items,
                              datasim::SideFeatures side, const std::vector<double>* prior) {
  const auto& net = model.net;
  const auto cache = net.encode_history(history);
  const auto kind = net.config().heads[0].output;
  std::vector<double> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (prior) side[datasim::side::kPriorScore] = static_cast<float>((*prior)[i]);
    out[i] = click_probability(net.forward_cached(cache, items[i], side, 0), kind);
  }
  return out;
}

RankedList sorted(std::span<const ItemId> items, const std::vector<double>& scores, bool by_id) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  if (by_id) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] != scores[b] ? scores[a] > scores[b] : items[a] < items[b];
    });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  }
  RankedList r;
  for (std::size_t i : order) {
    r.items.push_back(items[i]);
    r.scores.push_back(scores[i]);
  }
  return r;
}

void require_schema(const CtrModel& m, Schema s, const char* who) {
  if (m.schema != s) {
    throw std::invalid_argument(std::string(who) + ": expected a " + schema_name(s) + " model, got " +
                                schema_name(m.schema));
  }
}

}  // namespace

RankedList cloud_rank(std::span<const ItemId> candidates, const HistorySnapshot& snap, const CtrModel& cloud) {
  require_schema(cloud, Schema::Cloud, "cloud_rank");
  if (candidates.empty()) throw std::invalid_argument("cloud_rank: no candidates");
  return sorted(candidates, score_all(cloud, snap.cloud_history, candidates, snap.side_cloud, nullptr), true);
}

ItemCache make_cache(const RankedList& ranking, std::size_t capacity) {
  ItemCache c;
  c.capacity = capacity;
  const std::size_t n = std::min(capacity, ranking.size());
  c.items.assign(ranking.items.begin(), ranking.items.begin() + static_cast<std::ptrdiff_t>(n));
  c.prior.assign(ranking.scores.begin(), ranking.scores.begin() + static_cast<std::ptrdiff_t>(n));
  return c;
}

RankedList device_rerank(const ItemCache& cache, const HistorySnapshot& snap, const CtrModel& device) {
  require_schema(device, Schema::Device, "device_rerank");
  if (cache.items.empty()) throw std::invalid_argument("device_rerank: empty cache");
  if (cache.prior.size() != cache.items.size()) throw std::invalid_argument("device_rerank: prior scores missing");
  const auto history = snap.device_history();
  return sorted(cache.items, score_all(device, history, cache.items, snap.side_device, &cache.prior), false);
}

RankedList refresh_rank(std::span<const ItemId> pool, const HistorySnapshot& snap, const CtrModel& cloud) {
  require_schema(cloud, Schema::Cloud, "refresh_rank");
  if (pool.empty()) throw std::invalid_argument("refresh_rank: empty pool");
  const auto history = snap.device_history();
  return sorted(pool, score_all(cloud, history, pool, snap.side_cloud, nullptr), true);
}

std::vector<double> mechanism_scores(Mechanism m, std::span<const ItemId> candidates, const HistorySnapshot& snap,
                                     const CtrModel& cloud, const CtrModel* device) {
  require_schema(cloud, Schema::Cloud, "mechanism_scores");
  switch (m) {
    case Mechanism::Cloud: return score_all(cloud, snap.cloud_history, candidates, snap.side_cloud, nullptr);
    case Mechanism::Refresh: return score_all(cloud, snap.device_history(), candidates, snap.side_cloud, nullptr);
    case Mechanism::Device: {
      if (!device) throw std::invalid_argument("mechanism_scores: no device model");
      require_schema(*device, Schema::Device, "mechanism_scores");
      const auto prior = score_all(cloud, snap.cloud_history, candidates, snap.side_cloud, nullptr);
      return score_all(*device, snap.device_history(), candidates, snap.side_device, &prior);
    }
  }
  return {};
}

bool ModelServer::supports(Mechanism m) const {
  if (!cloud_) return false;
  return m != Mechanism::Device || device_ != nullptr;
}

std::vector<ItemId> ModelServer::serve(const HistorySnapshot& snap, Mechanism m, std::span<const ItemId> pool,
                                       std::size_t n) const {
  if (!supports(m)) throw std::runtime_error(std::string("no trained model for the ") + mechanism_name(m) + " mechanism");
  RankedList r;
  switch (m) {
    case Mechanism::Cloud: r = cloud_rank(pool, snap, *cloud_); break;
    case Mechanism::Device: r = device_rerank(make_cache(cloud_rank(pool, snap, *cloud_), capacity_), snap, *device_); break;
    case Mechanism::Refresh: r = refresh_rank(pool, snap, *cloud_); break;
  }
  r.items.resize(std::min(n, r.items.size()));
  return r.items;
}

}  // namespace mcrec::recommenders
