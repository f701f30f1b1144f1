#include <algorithm>

#include "doctest.h"
#include "mcrec/datasim/synthetic.hpp"
#include "mcrec/datasim/treatment.hpp"
#include "mcrec/recommenders/ranking.hpp"
#include "mcrec/seqmodel/checkpoint.hpp"

using namespace mcrec;
using namespace mcrec::recommenders;
using datasim::CandidateSet;

namespace {

CtrHyperParams small_hp(Schema schema, std::uint64_t seed = 5) {
  CtrHyperParams hp = default_hyperparams(schema);
  hp.item_dim = 8;
  hp.attn_dim = 8;
  hp.hidden = {16};
  hp.activation = seqmodel::Activation::Relu;
  hp.epochs = 30;
  hp.batch_size = 16;
  hp.adam.lr = 0.01;
  hp.seed = seed;
  return hp;
}

HistorySnapshot snap(std::vector<ItemId> cloud, std::vector<ItemId> in_session = {}) {
  HistorySnapshot h;
  h.user = 1;
  h.session = 2;
  h.cloud_history = std::move(cloud);
  h.in_session = std::move(in_session);
  h.side_cloud[datasim::side::kHistoryLength] = static_cast<float>(h.cloud_history.size());
  h.side_device = h.side_cloud;
  return h;
}

// Items 0-9 are always clicked, items 10-19 never, whatever the history.
std::vector<CandidateSet> two_clusters() {
  std::vector<CandidateSet> out;
  for (ItemId u = 0; u < 40; ++u) {
    CandidateSet cs;
    cs.snapshot = snap({static_cast<ItemId>(u % 20), static_cast<ItemId>((u * 7) % 20)});
    cs.snapshot.user = u;
    cs.positives = {static_cast<ItemId>(u % 10)};
    for (ItemId k = 0; k < 4; ++k) cs.negatives.push_back(static_cast<ItemId>(10 + (u + 3 * k) % 10));
    out.push_back(cs);
  }
  return out;
}

void zero_weights(CtrModel& m) {
  for (auto* p : m.net.parameters()) p->value = seqmodel::Matrix(p->value.rows(), p->value.cols(), 0.0f);
}

CtrModel zero_model(Schema schema) {
  CandidateSet cs;
  cs.snapshot = snap({0, 1});
  cs.positives = {2};
  for (ItemId i = 3; i < 20; ++i) cs.negatives.push_back(i);
  const std::vector<CandidateSet> data{cs};
  auto hp = small_hp(Schema::Cloud);
  hp.epochs = 1;
  CtrModel cloud = train_ctr_model(data, Schema::Cloud, hp);
  zero_weights(cloud);
  if (schema == Schema::Cloud) return cloud;
  CtrModel device = train_ctr_model(data, Schema::Device, small_hp(Schema::Device), nullptr, &cloud);
  zero_weights(device);
  return device;
}

const CtrModel& trained_cloud() {
  static const CtrModel m = train_ctr_model(two_clusters(), Schema::Cloud, small_hp(Schema::Cloud));
  return m;
}

const CtrModel& trained_device() {
  static const CtrModel m =
      train_ctr_model(two_clusters(), Schema::Device, small_hp(Schema::Device, 6), nullptr, &trained_cloud());
  return m;
}

}  // namespace

TEST_CASE("separable clusters are learned to high train accuracy") {
  CtrReport rep;
  (void)train_ctr_model(two_clusters(), Schema::Cloud, small_hp(Schema::Cloud), &rep);
  CHECK(rep.train_accuracy >= 0.95);
  CHECK(rep.examples == 40 * 5);
  CHECK(rep.epoch_loss.size() == 30);
  CHECK(rep.epoch_loss.back() < rep.epoch_loss.front());
}

TEST_CASE("a single example is memorised") {
  CandidateSet cs;
  cs.snapshot = snap({4, 5, 6});
  cs.positives = {7};
  auto hp = small_hp(Schema::Cloud);
  hp.epochs = 300;
  hp.batch_size = 1;
  CtrReport rep;
  std::vector<CandidateSet> data{cs};
  (void)train_ctr_model(data, Schema::Cloud, hp, &rep);
  CHECK(rep.epoch_loss.back() < 0.01);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto a = train_ctr_model(two_clusters(), Schema::Cloud, small_hp(Schema::Cloud, 9));
  const auto b = train_ctr_model(two_clusters(), Schema::Cloud, small_hp(Schema::Cloud, 9));
  CHECK(seqmodel::serialize_checkpoint(a.to_checkpoint()) == seqmodel::serialize_checkpoint(b.to_checkpoint()));
  const auto c = train_ctr_model(two_clusters(), Schema::Cloud, small_hp(Schema::Cloud, 10));
  CHECK(seqmodel::serialize_checkpoint(a.to_checkpoint()) != seqmodel::serialize_checkpoint(c.to_checkpoint()));
}

TEST_CASE("device training needs the cloud prior and empty data is rejected") {
  CHECK_THROWS_AS(train_ctr_model(two_clusters(), Schema::Device, small_hp(Schema::Device)), std::invalid_argument);
  CHECK_THROWS_AS(train_ctr_model(std::vector<CandidateSet>{}, Schema::Cloud, small_hp(Schema::Cloud)),
                  std::invalid_argument);
}

TEST_CASE("cloud ranking of one candidate and of exact ties") {
  const auto h = snap({1, 2, 3});
  const std::vector<ItemId> one{5};
  CHECK(cloud_rank(one, h, trained_cloud()).size() == 1);

  const auto zero = zero_model(Schema::Cloud);
  const std::vector<ItemId> pool{9, 4, 7, 1};
  const auto r = cloud_rank(pool, h, zero);
  CHECK(r.items == std::vector<ItemId>{1, 4, 7, 9});
  CHECK(r.scores[0] == r.scores[3]);
}

TEST_CASE("the cloud ranking ignores in-session clicks") {
  const std::vector<ItemId> pool{0, 3, 8, 11, 12, 15, 19};
  const auto a = cloud_rank(pool, snap({1, 2, 3}), trained_cloud());
  const auto b = cloud_rank(pool, snap({1, 2, 3}, {14, 16, 18}), trained_cloud());
  CHECK(a.items == b.items);
  CHECK(a.scores == b.scores);
}

TEST_CASE("device re-ranking permutes the cache") {
  const auto h = snap({1, 2}, {12});
  const std::vector<ItemId> pool{0, 2, 5, 9, 10, 13, 17, 18};
  const auto cache = make_cache(cloud_rank(pool, h, trained_cloud()), 5);
  REQUIRE(cache.items.size() == 5);
  const auto r = device_rerank(cache, h, trained_device());
  auto a = r.items, b = cache.items;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  CHECK(std::is_sorted(r.scores.rbegin(), r.scores.rend()));

  ItemCache single;
  single.items = {13};
  single.prior = {0.4};
  single.capacity = 1;
  CHECK(device_rerank(single, h, trained_device()).items == std::vector<ItemId>{13});
}

TEST_CASE("a zero-weight device model keeps cache order") {
  ItemCache cache;
  cache.items = {17, 3, 11, 5};
  cache.prior = {0.9, 0.8, 0.7, 0.6};
  const auto r = device_rerank(cache, snap({1, 2}, {4}), zero_model(Schema::Device));
  CHECK(r.items == cache.items);
}

TEST_CASE("refresh equals the cloud ranking when nothing happened in session") {
  const std::vector<ItemId> pool{0, 3, 8, 11, 12, 15, 19};
  const auto h = snap({1, 2, 3});
  const auto a = cloud_rank(pool, h, trained_cloud());
  const auto b = refresh_rank(pool, h, trained_cloud());
  CHECK(a.items == b.items);
  CHECK(a.scores == b.scores);
}

TEST_CASE("refresh may serve items outside the device cache and leaves the cloud model untouched") {
  std::vector<ItemId> pool;
  for (ItemId i = 0; i < 20; ++i) pool.push_back(i);
  const auto h = snap({11, 12}, {1, 2});
  const auto before = seqmodel::serialize_checkpoint(trained_cloud().to_checkpoint());
  const auto cache = make_cache(cloud_rank(pool, h, trained_cloud()), 3);
  const auto r = refresh_rank(pool, h, trained_cloud());
  CHECK(r.size() == pool.size());
  bool outside = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    outside |= std::find(cache.items.begin(), cache.items.end(), r.items[i]) == cache.items.end();
  }
  CHECK(outside);
  CHECK(seqmodel::serialize_checkpoint(trained_cloud().to_checkpoint()) == before);
}

TEST_CASE("mechanism scores line up with the candidate order") {
  const std::vector<ItemId> cands{7, 2, 15};
  const auto h = snap({1, 3}, {4});
  const auto s = mechanism_scores(Mechanism::Refresh, cands, h, trained_cloud(), &trained_device());
  REQUIRE(s.size() == 3);
  const auto r = refresh_rank(cands, h, trained_cloud());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto at = std::find(r.items.begin(), r.items.end(), cands[i]) - r.items.begin();
    CHECK(s[i] == doctest::Approx(r.scores[static_cast<std::size_t>(at)]));
  }
  CHECK_THROWS(mechanism_scores(Mechanism::Device, cands, h, trained_cloud(), nullptr));
}

TEST_CASE("under large drift refresh finds the best item more often than the device") {
  datasim::WorldSpec spec;
  spec.catalog_size = 150;
  spec.regime_weights = {0.0, 0.0, 1.0};
  const std::size_t users = 1500;
  const auto world = datasim::generate_synthetic(spec, users, 21);
  datasim::RolePlan plan;
  plan.rec_train_share = 0.6;
  plan.treatment_share = 0.25;
  plan.cate_share = 0.05;
  plan.ctr_test_share = 0.1;
  const auto corpus = datasim::build_synthetic_corpus(world, datasim::assign_roles(users, plan, 3), plan, 4);

  auto hc = small_hp(Schema::Cloud, 1);
  hc.item_dim = 16;
  hc.attn_dim = 16;
  hc.hidden = {32};
  hc.epochs = 10;
  hc.batch_size = 64;
  hc.adam.lr = 3e-3;
  auto hd = hc;
  hd.item_dim = 8;
  hd.attn_dim = 8;
  hd.seed = 2;
  const auto cloud = train_ctr_model(corpus.ctr_train, Schema::Cloud, hc);
  const auto device = train_ctr_model(corpus.ctr_train, Schema::Device, hd, nullptr, &cloud);
  const ModelServer server(&cloud, &device, spec.cache_size);

  std::size_t sessions = 0, refresh_hits = 0, device_hits = 0;
  for (const auto& arm : corpus.treatment) {
    for (const auto& pt : arm) {
      const auto& h = pt.snapshot;
      const auto pool = datasim::serving_pool(h, spec.catalog_size, Mechanism::Refresh);
      ItemId best = pool.front();
      for (ItemId i : pool) {
        if (world.affinity(h.user, h.session, i) > world.affinity(h.user, h.session, best)) best = i;
      }
      refresh_hits += server.serve(h, Mechanism::Refresh, pool, 1).front() == best;
      device_hits += server.serve(h, Mechanism::Device, pool, 1).front() == best;
      ++sessions;
    }
  }
  REQUIRE(sessions >= 500);
  CHECK(refresh_hits > device_hits);
}
