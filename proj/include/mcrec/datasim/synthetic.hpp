#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mcrec/datasim/snapshot.hpp"
#include "mcrec/datasim/types.hpp"
#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::datasim {

enum class Regime { Static = 0, SmallDrift = 1, LargeDrift = 2 };

const char* regime_name(Regime r);

// Controllable world with interest-shift regimes. Each user draws one regime
// from `regime_weights`. Between sessions the user's interest stays put
// (static), takes a small random step (small drift) or moves toward a fresh
// topic draw (large drift); `drift` holds the step size per regime.
struct WorldSpec {
  std::size_t catalog_size = 300;
  std::size_t latent_dim = 8;
  std::size_t topics = 10;
  double item_noise = 0.35;

  std::size_t sessions_per_user = 6;
  std::size_t exposures_per_session = 12;
  std::size_t decision_offset = 6;  // exposures seen in-session before the decision point
  std::size_t session_length = 5;   // L, items served after the decision point
  std::size_t cache_size = 20;
  std::size_t max_history = 50;

  std::array<double, 3> regime_weights{0.4, 0.3, 0.3};
  std::array<double, 3> drift{0.0, 0.35, 1.0};

  double click_scale = 5.0;
  double click_bias = -3.5;
  double relevant_share = 0.6;      // share of logged exposures drawn by interest
  double exposure_temperature = 4.0;

  // Throws std::invalid_argument for degenerate specs (cache >= catalog,
  // weights not summing to one, decision offset past the session end...).
  void validate() const;
};

struct UserState {
  Regime regime = Regime::Static;
  seqmodel::Matrix interests;  // sessions x latent_dim, unit norm rows
};

struct SyntheticWorld {
  WorldSpec spec;
  seqmodel::Matrix items;  // catalog x latent_dim, unit norm rows
  std::vector<std::uint32_t> item_topic;
  std::vector<UserState> users;
  EventLog log;  // grouped by user, chronological within a user

  double affinity(UserId user, std::uint32_t session, ItemId item) const;
  double click_probability(UserId user, std::uint32_t session, ItemId item) const;
  std::vector<double> click_probabilities(UserId user, std::uint32_t session) const;

  // [begin, end) of a user's events inside `log`
  std::pair<std::size_t, std::size_t> user_range(UserId user) const;
  std::span<const Interaction> user_events(UserId user) const;

  std::vector<std::size_t> user_offsets;  // size users + 1
};

// Pure function of (spec, n_users, seed).
SyntheticWorld generate_synthetic(const WorldSpec& spec, std::size_t n_users, std::uint64_t seed);

void write_world(const std::filesystem::path& path, const SyntheticWorld& world);
SyntheticWorld read_world(const std::filesystem::path& path, EventLog log);

// Decision-point snapshot of `user` in `session` (session >= 1).
// Returns false when the user has no clicks before the session.
bool synthetic_snapshot(const SyntheticWorld& world, UserId user, std::uint32_t session, HistorySnapshot& out);

// How users are split into disjoint roles. Counts are derived from shares
// of the total; the treatment block is split across arms by `treatment_skew`.
struct RolePlan {
  double rec_train_share = 0.25;
  double treatment_share = 0.45;
  double cate_share = 0.15;  // split evenly over the three arms
  double ctr_test_share = 0.15;
  std::array<double, 3> treatment_skew{5.0, 1.0, 1.5};
  std::size_t train_negatives = 4;
  std::size_t test_negatives = 100;

  void validate() const;
};

enum class UserRole : int { RecTrain = 0, Treatment = 1, CateTest = 2, CtrTest = 3 };

struct RoleAssignment {
  std::vector<UserRole> role;
  std::vector<int> arm;  // mechanism index for Treatment / CateTest users, -1 otherwise
};

RoleAssignment assign_roles(std::size_t n_users, const RolePlan& plan, std::uint64_t seed);

Corpus build_synthetic_corpus(const SyntheticWorld& world, const RoleAssignment& roles, const RolePlan& plan,
                              std::uint64_t seed);

}  // namespace mcrec::datasim
