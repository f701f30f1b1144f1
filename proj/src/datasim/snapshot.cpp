#include "mcrec/datasim/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mcrec::datasim {

namespace {

struct ClickStats {
  std::size_t clicks = 0;
  std::size_t distinct = 0;
  double click_rate = 0.0;
  std::int64_t last_click = -1;
};

ClickStats click_stats(std::span<const Interaction> events, std::size_t max_history) {
  ClickStats s;
  std::vector<ItemId> clicked;
  for (const auto& e : events) {
    if (e.label == 1) {
      clicked.push_back(e.item);
      s.last_click = e.timestamp;
    }
  }
  if (clicked.size() > max_history) clicked.erase(clicked.begin(), clicked.end() - static_cast<std::ptrdiff_t>(max_history));
  s.clicks = clicked.size();
  s.distinct = std::set<ItemId>(clicked.begin(), clicked.end()).size();
  s.click_rate = events.empty() ? 0.0 : static_cast<double>(std::count_if(events.begin(), events.end(), [](const Interaction& e) { return e.label == 1; })) / static_cast<double>(events.size());
  return s;
}

float recency(std::int64_t now, std::int64_t last_click) {
  if (last_click < 0) return 1.0f;
  return static_cast<float>(std::log1p(static_cast<double>(std::max<std::int64_t>(0, now - last_click))) / 10.0);
}

}  // namespace

SideFeatures cloud_side_features(std::span<const Interaction> before_session, std::int64_t now,
                                 std::uint32_t session, std::size_t max_history) {
  const ClickStats s = click_stats(before_session, max_history);
  SideFeatures f{};
  f[side::kHistoryLength] = static_cast<float>(s.clicks) / 50.0f;
  f[side::kDistinctItems] = static_cast<float>(s.distinct) / 50.0f;
  f[side::kClickRate] = static_cast<float>(s.click_rate);
  f[side::kRecencyGap] = recency(now, s.last_click);
  f[side::kSessionIndex] = static_cast<float>(std::log1p(static_cast<double>(session)) / 3.0);
  return f;
}

SideFeatures device_side_features(std::span<const Interaction> visible, std::size_t in_session_clicks,
                                  std::int64_t now, std::uint32_t session, const SnapshotOptions& options) {
  const ClickStats s = click_stats(visible, options.max_history + in_session_clicks);
  SideFeatures f{};
  f[side::kHistoryLength] = static_cast<float>(s.clicks) / 50.0f;
  f[side::kDistinctItems] = static_cast<float>(s.distinct) / 50.0f;
  f[side::kClickRate] = static_cast<float>(s.click_rate);
  f[side::kRecencyGap] = recency(now, s.last_click);
  f[side::kSessionIndex] = static_cast<float>(std::log1p(static_cast<double>(session)) / 3.0);
  f[side::kInSessionClicks] =
      static_cast<float>(in_session_clicks) / static_cast<float>(std::max<std::size_t>(1, options.in_session_norm));
  return f;
}

HistorySnapshot make_snapshot(std::span<const Interaction> events, std::size_t session_begin,
                              std::size_t cut, const SnapshotOptions& options) {
  if (session_begin > cut || cut > events.size()) throw std::invalid_argument("make_snapshot: bad cut points");
  HistorySnapshot snap;
  if (!events.empty()) snap.user = events.front().user;
  snap.session = cut < events.size() ? events[cut].session
                                     : (session_begin < events.size() ? events[session_begin].session
                                                                      : (events.empty() ? 0 : events.back().session + 1));
  for (std::size_t i = 0; i < session_begin; ++i) {
    if (events[i].label == 1) snap.cloud_history.push_back(events[i].item);
  }
  if (snap.cloud_history.size() > options.max_history) {
    snap.cloud_history.erase(snap.cloud_history.begin(),
                             snap.cloud_history.end() - static_cast<std::ptrdiff_t>(options.max_history));
  }
  for (std::size_t i = session_begin; i < cut; ++i) {
    if (events[i].label == 1) snap.in_session.push_back(events[i].item);
  }
  const std::int64_t now = cut < events.size() ? events[cut].timestamp
                                               : (cut > 0 ? events[cut - 1].timestamp + 1 : 0);
  snap.side_cloud = cloud_side_features(events.subspan(0, session_begin), now, snap.session, options.max_history);
  snap.side_device = device_side_features(events.subspan(0, cut), snap.in_session.size(), now, snap.session, options);
  return snap;
}

}  // namespace mcrec::datasim
