#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mcrec/datasim/ingest.hpp"
#include "mcrec/datasim/io.hpp"
#include "mcrec/datasim/synthetic.hpp"
#include "mcrec/datasim/treatment.hpp"

using namespace mcrec;
using namespace mcrec::datasim;

namespace {

WorldSpec small_spec() {
  WorldSpec s;
  s.catalog_size = 120;
  s.sessions_per_user = 4;
  return s;
}

// Ranks by item id; positives are whatever the test says.
class FixedServer : public MechanismServer {
 public:
  explicit FixedServer(std::vector<ItemId> preferred, bool has_device = true)
      : preferred_(std::move(preferred)), has_device_(has_device) {}
  bool supports(Mechanism m) const override { return has_device_ || m != Mechanism::Device; }
  std::vector<ItemId> serve(const HistorySnapshot&, Mechanism, std::span<const ItemId> pool, std::size_t n) const override {
    std::vector<ItemId> out;
    for (ItemId p : preferred_) {
      if (std::find(pool.begin(), pool.end(), p) != pool.end()) out.push_back(p);
    }
    for (ItemId p : pool) {
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    out.resize(std::min(n, out.size()));
    return out;
  }

 private:
  std::vector<ItemId> preferred_;
  bool has_device_;
};

std::string movielens_rows(const std::string& user, std::size_t n, std::size_t item_offset) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += user + "::" + std::to_string(item_offset + i) + "::4::" + std::to_string(1000 + 10 * i) + "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("zero drift keeps a static user's interest fixed") {
  WorldSpec s = small_spec();
  s.regime_weights = {1.0, 0.0, 0.0};
  s.drift = {0.0, 0.35, 1.0};
  const auto w = generate_synthetic(s, 20, 3);
  for (const auto& u : w.users) {
    CHECK(u.regime == Regime::Static);
    for (std::size_t r = 1; r < s.sessions_per_user; ++r) {
      for (std::size_t c = 0; c < s.latent_dim; ++c) CHECK(u.interests(r, c) == u.interests(0, c));
    }
  }
}

TEST_CASE("generation is a pure function of spec and seed") {
  const auto a = generate_synthetic(small_spec(), 50, 11);
  const auto b = generate_synthetic(small_spec(), 50, 11);
  const auto c = generate_synthetic(small_spec(), 50, 12);
  CHECK(a.log == b.log);
  CHECK(a.items == b.items);
  CHECK(a.log != c.log);
}

TEST_CASE("degenerate specs are rejected") {
  WorldSpec s = small_spec();
  s.cache_size = s.catalog_size;
  CHECK_THROWS_AS(generate_synthetic(s, 10, 1), std::invalid_argument);
  s = small_spec();
  s.regime_weights = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(generate_synthetic(s, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic(small_spec(), 0, 1), std::invalid_argument);
}

TEST_CASE("event log timestamps increase and sessions are contiguous per user") {
  const auto w = generate_synthetic(small_spec(), 30, 5);
  for (UserId u = 0; u < 30; ++u) {
    const auto ev = w.user_events(u);
    for (std::size_t i = 1; i < ev.size(); ++i) {
      CHECK(ev[i].timestamp > ev[i - 1].timestamp);
      CHECK((ev[i].session == ev[i - 1].session || ev[i].session == ev[i - 1].session + 1));
    }
  }
}

TEST_CASE("snapshots separate the cloud view from in-session clicks") {
  const auto w = generate_synthetic(small_spec(), 40, 9);
  std::size_t checked = 0;
  for (UserId u = 0; u < 40; ++u) {
    for (std::uint32_t s = 1; s < 4; ++s) {
      HistorySnapshot snap;
      if (!synthetic_snapshot(w, u, s, snap)) continue;
      ++checked;
      std::vector<ItemId> in_session;
      std::vector<ItemId> before;
      for (const auto& e : w.user_events(u)) {
        if (e.label != 1) continue;
        if (e.session < s) before.push_back(e.item);
        if (e.session == s && e.timestamp < static_cast<std::int64_t>(s * 1000 + w.spec.decision_offset)) {
          in_session.push_back(e.item);
        }
      }
      CHECK(snap.cloud_history == before);
      CHECK(snap.in_session == in_session);
      auto device = snap.cloud_history;
      device.insert(device.end(), in_session.begin(), in_session.end());
      CHECK(snap.device_history() == device);
      CHECK(snap.side_cloud[side::kInSessionClicks] == 0.0f);
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("default mixed world: the oracle picks every mechanism for at least 10% of points") {
  const auto w = generate_synthetic(WorldSpec{}, 500, 21);
  std::vector<CandidateSet> points;
  for (UserId u = 0; u < 500; ++u) {
    for (std::uint32_t s = 1; s < w.spec.sessions_per_user; ++s) {
      CandidateSet cs;
      if (synthetic_snapshot(w, u, s, cs.snapshot)) points.push_back(cs);
    }
  }
  const LatentOracleServer oracle(w);
  const auto pick = oracle_assignment(w, points, oracle);
  std::array<double, 3> share{};
  for (auto m : pick) share[index_of(m)] += 1.0 / static_cast<double>(pick.size());
  for (double v : share) CHECK(v >= 0.10);
}

TEST_CASE("outcome_label any-click window") {
  const std::vector<int> a{0, 0, 1, 0, 0};
  CHECK(outcome_label(a, 5) == 1);
  const std::vector<int> b{0, 0, 0, 0, 0};
  CHECK(outcome_label(b, 5) == 0);
  const std::vector<int> c{1};
  CHECK(outcome_label(c, 5) == 1);
  const std::vector<int> d{0, 0, 0};
  CHECK(outcome_label(d, 3) == 0);
  const std::vector<int> e{0, 0, 0, 0, 1};
  CHECK(outcome_label(e, 4) == 0);
}

TEST_CASE("serving pools skip what each side has already seen") {
  HistorySnapshot s;
  s.cloud_history = {1, 2};
  s.in_session = {3};
  const auto cloud = serving_pool(s, 6, Mechanism::Cloud);
  const auto refresh = serving_pool(s, 6, Mechanism::Refresh);
  CHECK(cloud == std::vector<ItemId>{0, 3, 4, 5});
  CHECK(refresh == std::vector<ItemId>{0, 4, 5});
}

TEST_CASE("logged outcome rules") {
  CandidateSet cs;
  cs.snapshot.cloud_history = {9};
  cs.positives = {4};
  cs.negatives = {1, 2, 3};
  const std::vector<CandidateSet> pts{cs};
  const FixedServer first({4});
  CHECK(simulate_with_mechanism(pts, Mechanism::Cloud, first, OutcomeRule::PositiveRankedFirst, 5)[0].outcome == 1);
  const FixedServer second({1, 4});
  CHECK(simulate_with_mechanism(pts, Mechanism::Cloud, second, OutcomeRule::PositiveRankedFirst, 5)[0].outcome == 0);
  CHECK(simulate_with_mechanism(pts, Mechanism::Cloud, second, OutcomeRule::AnyClickWithinL, 5)[0].outcome == 1);
}

TEST_CASE("serving without a model for the mechanism is an error") {
  const auto w = generate_synthetic(small_spec(), 10, 2);
  std::vector<CandidateSet> points(1);
  REQUIRE(synthetic_snapshot(w, 0, 2, points[0].snapshot));
  const FixedServer no_device({}, false);
  CHECK_THROWS_AS(simulate_with_mechanism(w, points, Mechanism::Device, no_device, 1), std::runtime_error);
  CHECK_NOTHROW(simulate_with_mechanism(w, points, Mechanism::Cloud, no_device, 1));
}

TEST_CASE("treatment simulation is reproducible and tags the mechanism") {
  const auto w = generate_synthetic(small_spec(), 60, 4);
  std::vector<CandidateSet> points;
  for (UserId u = 0; u < 60; ++u) {
    CandidateSet cs;
    if (synthetic_snapshot(w, u, 2, cs.snapshot)) points.push_back(cs);
  }
  const LatentOracleServer oracle(w);
  const auto a = simulate_with_mechanism(w, points, Mechanism::Refresh, oracle, 8);
  const auto b = simulate_with_mechanism(w, points, Mechanism::Refresh, oracle, 8);
  CHECK(a == b);
  REQUIRE(a.size() == points.size());
  for (const auto& r : a) CHECK(r.treatment == Mechanism::Refresh);
}

TEST_CASE("roles are disjoint and follow the treatment skew") {
  const RolePlan plan;
  const auto roles = assign_roles(1000, plan, 5);
  std::array<std::size_t, 3> treat{}, cate{};
  std::size_t rec = 0, test = 0;
  for (std::size_t u = 0; u < 1000; ++u) {
    switch (roles.role[u]) {
      case UserRole::RecTrain: ++rec; CHECK(roles.arm[u] == -1); break;
      case UserRole::Treatment: ++treat[roles.arm[u]]; break;
      case UserRole::CateTest: ++cate[roles.arm[u]]; break;
      case UserRole::CtrTest: ++test; CHECK(roles.arm[u] == -1); break;
    }
  }
  CHECK(rec == 250);
  CHECK(test == 150);
  CHECK(treat[0] + treat[1] + treat[2] == 450);
  CHECK(treat[0] == 300);
  CHECK(treat[1] == 60);
  CHECK(treat[2] == 90);
  CHECK(cate[0] == 50);
  CHECK(cate[1] == 50);
  CHECK(cate[2] == 50);
}

TEST_CASE("synthetic corpus keeps exact negative ratios and excludes seen items") {
  const auto w = generate_synthetic(WorldSpec{}, 200, 13);
  const RolePlan plan;
  const auto corpus = build_synthetic_corpus(w, assign_roles(200, plan, 1), plan, 2);
  REQUIRE(!corpus.ctr_train.empty());
  REQUIRE(!corpus.ctr_test.empty());
  for (const auto& cs : corpus.ctr_train) {
    CHECK(cs.negatives.size() == 4 * cs.positives.size());
    const auto dev = cs.snapshot.device_history();
    for (ItemId p : cs.positives) CHECK(std::find(dev.begin(), dev.end(), p) == dev.end());
  }
  for (const auto& cs : corpus.ctr_test) {
    CHECK(cs.positives.size() == 1);
    CHECK(cs.negatives.size() == 100);
    CHECK(std::set<ItemId>(cs.negatives.begin(), cs.negatives.end()).size() == 100);
  }
  for (std::size_t t = 0; t < 3; ++t) CHECK(!corpus.treatment[t].empty());
}

TEST_CASE("ingest: a 25-interaction movielens-like user") {
  std::string text = movielens_rows("7", 25, 0);
  text += movielens_rows("8", 19, 100);  // below threshold
  text += movielens_rows("9", 1, 300);   // pads the catalog
  for (int i = 0; i < 600; ++i) text += "9::" + std::to_string(400 + i) + "::0::5\n";
  std::istringstream in(text);
  IngestOptions opt;
  const auto r = ingest_interactions(in, opt);
  CHECK(r.stats.users_kept == 1);
  CHECK(r.stats.users_dropped == 2);
  REQUIRE(r.train.size() == 20);
  REQUIRE(r.test.size() == 5);
  std::size_t train_neg = 0, test_neg = 0;
  for (const auto& cs : r.train) train_neg += cs.negatives.size();
  for (const auto& cs : r.test) test_neg += cs.negatives.size();
  CHECK(train_neg == 80);
  CHECK(test_neg == 500);
  CHECK(r.stats.short_negative_sets == 0);

  std::set<ItemId> test_items;
  for (const auto& cs : r.test) test_items.insert(cs.positives[0]);
  for (const auto& cs : r.train) {
    for (ItemId i : cs.snapshot.device_history()) CHECK(!test_items.count(i));
    CHECK(!test_items.count(cs.positives[0]));
  }
  for (const auto& cs : r.test) {
    CHECK(cs.snapshot.cloud_history.size() == 20);
    for (ItemId i : cs.snapshot.cloud_history) CHECK(!test_items.count(i));
  }
}

TEST_CASE("ingest: drops users below the threshold") {
  std::istringstream in(movielens_rows("1", 19, 0));
  const auto r = ingest_interactions(in, IngestOptions{});
  CHECK(r.stats.users_dropped == 1);
  CHECK(r.log.empty());
  CHECK(r.train.empty());
}

TEST_CASE("ingest: empty input and short users") {
  std::istringstream empty("");
  const auto r = ingest_interactions(empty, IngestOptions{});
  CHECK(r.log.empty());
  CHECK(r.stats.users_seen == 0);

  IngestOptions loose;
  loose.min_interactions = 3;
  std::istringstream four("a,x,1,1\na,y,1,2\na,z,1,3\na,w,1,4\n");
  const auto s = ingest_interactions(four, loose);
  CHECK(s.stats.users_skipped == 1);
  CHECK(s.stats.users_kept == 0);
}

TEST_CASE("ingest: malformed rows report their line number") {
  std::istringstream in("1::2::5::100\n1::3::5\n");
  try {
    ingest_interactions(in, IngestOptions{});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_rating("1\t2\tfive\t100\n");
  CHECK_THROWS_AS(ingest_interactions(bad_rating, IngestOptions{}), ParseError);
}

TEST_CASE("ingest: amazon-like threshold and short negative pools are flagged") {
  std::string text;
  for (int i = 0; i < 12; ++i) text += "u1\ti" + std::to_string(i) + "\t5\t" + std::to_string(i) + "\n";
  std::istringstream in(text);
  IngestOptions opt;
  opt.protocol = Protocol::AmazonLike;
  const auto r = ingest_interactions(in, opt);
  CHECK(r.stats.users_kept == 1);
  CHECK(r.test.size() == 5);
  CHECK(r.stats.short_negative_sets == r.train.size() + r.test.size());  // catalog has no un-interacted items
}

TEST_CASE("event log and treatment files round-trip") {
  const auto w = generate_synthetic(small_spec(), 15, 1);
  std::stringstream ss;
  write_event_log(ss, w.log);
  CHECK(read_event_log(ss) == w.log);

  TreatmentDataset data;
  for (UserId u = 0; u < 15; ++u) {
    TreatmentSample r;
    if (!synthetic_snapshot(w, u, 2, r.snapshot)) continue;
    r.treatment = mechanism_from_index(u % 3);
    r.outcome = static_cast<int>(u % 2);
    data.push_back(r);
  }
  std::stringstream ts;
  write_treatments(ts, data);
  CHECK(read_treatments(ts) == data);

  std::stringstream bad("1\t2\t3\n");
  CHECK_THROWS_AS(read_event_log(bad), ParseError);
}

TEST_CASE("corpus and world files round-trip") {
  const auto w = generate_synthetic(small_spec(), 40, 6);
  const RolePlan plan;
  const auto corpus = build_synthetic_corpus(w, assign_roles(40, plan, 1), plan, 1);
  const auto dir = std::filesystem::temp_directory_path() / "mcrec_datasim_test";
  std::filesystem::create_directories(dir);
  write_corpus(dir / "corpus.tsv", corpus);
  CHECK(read_corpus(dir / "corpus.tsv") == corpus);

  write_world(dir / "world.mckp", w);
  const auto back = read_world(dir / "world.mckp", w.log);
  CHECK(back.items == w.items);
  CHECK(back.item_topic == w.item_topic);
  for (UserId u = 0; u < 40; ++u) {
    CHECK(back.users[u].regime == w.users[u].regime);
    CHECK(back.users[u].interests == w.users[u].interests);
    CHECK(back.click_probability(u, 1, 3) == w.click_probability(u, 1, 3));
  }
  std::filesystem::remove_all(dir);
}
