#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcrec/common.hpp"

namespace mcrec::datasim {

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t timestamp = 0;  // ordinal, strictly increasing per user
  int label = 0;               // click = 1, non-click = 0
  std::uint32_t session = 0;

  bool operator==(const Interaction&) const = default;
};

using EventLog = std::vector<Interaction>;

// Fixed-width side feature block shared by the cloud and device views.
inline constexpr std::size_t kSideDim = 8;
using SideFeatures = std::array<float, kSideDim>;

namespace side {
inline constexpr std::size_t kHistoryLength = 0;
inline constexpr std::size_t kDistinctItems = 1;
inline constexpr std::size_t kClickRate = 2;
inline constexpr std::size_t kRecencyGap = 3;
inline constexpr std::size_t kSessionIndex = 4;
inline constexpr std::size_t kInSessionClicks = 5;  // device view only
inline constexpr std::size_t kPriorScore = 6;       // cloud score of the candidate, device view only
inline constexpr std::size_t kReserved = 7;
}  // namespace side

// What each side can see at a decision point inside a session.
struct HistorySnapshot {
  UserId user = 0;
  std::uint32_t session = 0;
  std::vector<ItemId> cloud_history;  // clicks before the current session, most recent last, <= max history
  std::vector<ItemId> in_session;     // clicks earlier in the current session
  SideFeatures side_cloud{};
  SideFeatures side_device{};

  // H_device = H_cloud ++ H_add
  std::vector<ItemId> device_history() const {
    std::vector<ItemId> out(cloud_history);
    out.insert(out.end(), in_session.begin(), in_session.end());
    return out;
  }

  bool operator==(const HistorySnapshot&) const = default;
};

struct TreatmentSample {
  HistorySnapshot snapshot;
  Mechanism treatment = Mechanism::Cloud;
  int outcome = 0;

  bool operator==(const TreatmentSample&) const = default;
};

using TreatmentDataset = std::vector<TreatmentSample>;

// A snapshot with labelled candidates. Used for CTR training groups
// (positives + sampled negatives), CTR test cases (one positive, many
// negatives) and decision points (candidates empty for synthetic worlds).
struct CandidateSet {
  HistorySnapshot snapshot;
  std::vector<ItemId> positives;
  std::vector<ItemId> negatives;

  bool operator==(const CandidateSet&) const = default;
};

struct Corpus {
  std::size_t vocab_size = 0;
  std::vector<CandidateSet> ctr_train;
  std::array<std::vector<CandidateSet>, kNumMechanisms> treatment;  // decision points per arm
  std::array<std::vector<CandidateSet>, kNumMechanisms> cate_test;  // held-out points per arm
  std::vector<CandidateSet> ctr_test;

  bool operator==(const Corpus&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mcrec::datasim
