#pragma once

#include <cstddef>
#include <span>

#include "mcrec/datasim/types.hpp"

namespace mcrec::datasim {

struct SnapshotOptions {
  std::size_t max_history = 50;
  std::size_t in_session_norm = 6;  // scale for the in-session click count feature
};

// Builds the snapshot at a decision point from one user's chronological
// events. Events [0, session_begin) precede the current session and form the
// cloud view; events [session_begin, cut) are the visible part of the current
// session. Only clicked events enter the histories.
HistorySnapshot make_snapshot(std::span<const Interaction> user_events, std::size_t session_begin,
                              std::size_t cut, const SnapshotOptions& options);

// Side features for the two views. Exposed for tests.
SideFeatures cloud_side_features(std::span<const Interaction> before_session, std::int64_t now,
                                 std::uint32_t session, std::size_t max_history);
SideFeatures device_side_features(std::span<const Interaction> visible, std::size_t in_session_clicks,
                                  std::int64_t now, std::uint32_t session, const SnapshotOptions& options);

}  // namespace mcrec::datasim
