#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcrec/datasim/synthetic.hpp"
#include "mcrec/datasim/types.hpp"

namespace mcrec::datasim {

enum class OutcomeRule {
  AnyClickWithinL,      // 1 iff any of the first L served items is clicked
  PositiveRankedFirst,  // logged data: 1 iff a held-out positive is served first
};

// 1 iff any of the first min(L, clicks.size()) entries is a click.
int outcome_label(std::span<const int> clicks, std::size_t L);

// Candidates a mechanism may serve at a decision point. Every mechanism skips
// the cloud history; device and refresh also skip the in-session clicks.
std::vector<ItemId> serving_pool(const HistorySnapshot& snap, std::size_t vocab_size, Mechanism m);

// Anything that can serve a ranked list for a mechanism.
class MechanismServer {
 public:
  virtual ~MechanismServer() = default;
  virtual bool supports(Mechanism m) const = 0;
  // Top `n` items of `pool` under mechanism `m`. `pool` is the full serving
  // pool for that mechanism (see serving_pool).
  virtual std::vector<ItemId> serve(const HistorySnapshot& snap, Mechanism m, std::span<const ItemId> pool,
                                    std::size_t n) const = 0;
};

// Serves from the ground-truth interests: the cloud ranks by the previous
// session's interest, the device re-ranks the cloud's top cache by the current
// interest, and refresh ranks the whole pool by the current interest.
class LatentOracleServer : public MechanismServer {
 public:
  explicit LatentOracleServer(const SyntheticWorld& world) : world_(world) {}
  bool supports(Mechanism) const override { return true; }
  std::vector<ItemId> serve(const HistorySnapshot& snap, Mechanism m, std::span<const ItemId> pool,
                            std::size_t n) const override;

 private:
  const SyntheticWorld& world_;
};

// Click probability of `item` at this decision point; items already clicked
// in the session are never clicked again.
double served_click_probability(const SyntheticWorld& world, const HistorySnapshot& snap, ItemId item);

// P(any click among the first L served items) under the ground truth.
double expected_outcome(const SyntheticWorld& world, const HistorySnapshot& snap, std::span<const ItemId> served);

// Exhaustive oracle: the mechanism with the highest expected outcome at each
// point (ties go to the lower index).
std::vector<Mechanism> oracle_assignment(const SyntheticWorld& world, std::span<const CandidateSet> points,
                                         const MechanismServer& server);

// Serve each decision point with mechanism `m` and draw clicks from the world.
TreatmentDataset simulate_with_mechanism(const SyntheticWorld& world, std::span<const CandidateSet> points,
                                         Mechanism m, const MechanismServer& server, std::uint64_t seed);

// Logged-data variant: the candidate set is the labelled positives and
// negatives; a served item counts as clicked iff it is a positive.
TreatmentDataset simulate_with_mechanism(std::span<const CandidateSet> points, Mechanism m,
                                         const MechanismServer& server, OutcomeRule rule, std::size_t L);

}  // namespace mcrec::datasim
