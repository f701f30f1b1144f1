#pragma once

#include <span>
#include <vector>

#include "mcrec/datasim/treatment.hpp"
#include "mcrec/recommenders/ctr_model.hpp"

namespace mcrec::recommenders {

struct RankedList {
  std::vector<ItemId> items;
  std::vector<double> scores;  // non-increasing
  std::size_t size() const { return items.size(); }
};

struct ItemCache {
  std::vector<ItemId> items;  // cloud order
  std::vector<double> prior;  // cloud scores, parallel to items
  std::size_t capacity = 20;
};

// f_cloud(X | H_cloud, S_cloud): ties go to the smaller item id.
RankedList cloud_rank(std::span<const ItemId> candidates, const HistorySnapshot& snap, const CtrModel& cloud);

// The top `capacity` prefix of a cloud ranking.
ItemCache make_cache(const RankedList& cloud_ranking, std::size_t capacity);

// f_device over the cache with H_device and S_device (+ prior score). The
// result is a permutation of the cache; equal scores keep cache order.
RankedList device_rerank(const ItemCache& cache, const HistorySnapshot& snap, const CtrModel& device);

// f_cloud(X | H_device, S_cloud) over the full pool with the same cloud model.
RankedList refresh_rank(std::span<const ItemId> pool, const HistorySnapshot& snap, const CtrModel& cloud);

// Per-candidate scores (aligned with `candidates`) as each mechanism would
// compute them: cloud and refresh use f_cloud on H_cloud / H_device, device
// uses f_device with the cloud prior.
std::vector<double> mechanism_scores(Mechanism m, std::span<const ItemId> candidates, const HistorySnapshot& snap,
                                     const CtrModel& cloud, const CtrModel* device);

// Serves the three mechanisms from trained models.
class ModelServer : public datasim::MechanismServer {
 public:
  ModelServer(const CtrModel* cloud, const CtrModel* device, std::size_t cache_capacity)
      : cloud_(cloud), device_(device), capacity_(cache_capacity) {}
  bool supports(Mechanism m) const override;
  std::vector<ItemId> serve(const HistorySnapshot& snap, Mechanism m, std::span<const ItemId> pool,
                            std::size_t n) const override;

 private:
  const CtrModel* cloud_;
  const CtrModel* device_;
  std::size_t capacity_;
};

}  // namespace mcrec::recommenders
