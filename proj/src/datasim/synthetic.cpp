#include "mcrec/datasim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "mcrec/seqmodel/checkpoint.hpp"

namespace mcrec::datasim {

using seqmodel::Matrix;

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Static: return "static";
    case Regime::SmallDrift: return "small-drift";
    case Regime::LargeDrift: return "large-drift";
  }
  return "?";
}

void WorldSpec::validate() const {
  if (catalog_size < 2 || latent_dim == 0 || topics == 0) throw std::invalid_argument("world: empty catalog or latent space");
  if (cache_size >= catalog_size) throw std::invalid_argument("world: device cache size must be smaller than the catalog");
  if (cache_size == 0 || session_length == 0) throw std::invalid_argument("world: cache size and session length must be positive");
  if (sessions_per_user < 2) throw std::invalid_argument("world: need at least two sessions per user");
  if (decision_offset >= exposures_per_session) throw std::invalid_argument("world: decision offset must fall inside the session");
  double total = 0.0;
  for (double w : regime_weights) {
    if (w < 0.0) throw std::invalid_argument("world: negative regime weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("world: regime weights must sum to 1");
  for (double d : drift) {
    if (d < 0.0) throw std::invalid_argument("world: drift magnitude must be >= 0");
  }
}

namespace {

void normalize(std::span<float> v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  if (n == 0.0) return;
  for (float& x : v) x = static_cast<float>(x / n);
}

void gaussian_into(std::span<float> v, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (float& x : v) x = static_cast<float>(scale * g(rng));
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

std::vector<ItemId> sample_without_replacement(const std::vector<ItemId>& pool, std::size_t k, std::mt19937_64& rng) {
  std::vector<ItemId> p(pool);
  k = std::min(k, p.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p.size() - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  p.resize(k);
  return p;
}

}  // namespace

double SyntheticWorld::affinity(UserId user, std::uint32_t session, ItemId item) const {
  return dot(users.at(user).interests.row(session), items.row(item));
}

double SyntheticWorld::click_probability(UserId user, std::uint32_t session, ItemId item) const {
  const double z = spec.click_scale * affinity(user, session, item) + spec.click_bias;
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> SyntheticWorld::click_probabilities(UserId user, std::uint32_t session) const {
  std::vector<double> p(spec.catalog_size);
  for (ItemId j = 0; j < spec.catalog_size; ++j) p[j] = click_probability(user, session, j);
  return p;
}

std::pair<std::size_t, std::size_t> SyntheticWorld::user_range(UserId user) const {
  return {user_offsets.at(user), user_offsets.at(user + 1)};
}

std::span<const Interaction> SyntheticWorld::user_events(UserId user) const {
  const auto [b, e] = user_range(user);
  return std::span<const Interaction>(log).subspan(b, e - b);
}

namespace {

void index_users(SyntheticWorld& w) {
  w.user_offsets.assign(w.users.size() + 1, 0);
  std::size_t i = 0;
  for (UserId u = 0; u < w.users.size(); ++u) {
    w.user_offsets[u] = i;
    while (i < w.log.size() && w.log[i].user == u) ++i;
  }
  w.user_offsets[w.users.size()] = i;
  if (i != w.log.size()) throw std::runtime_error("event log is not grouped by ascending user id");
}

}  // namespace

SyntheticWorld generate_synthetic(const WorldSpec& spec, std::size_t n_users, std::uint64_t seed) {
  spec.validate();
  if (n_users == 0) throw std::invalid_argument("generate_synthetic: need at least one user");
  const std::size_t k = spec.latent_dim;
  const double unit = 1.0 / std::sqrt(static_cast<double>(k));

  SyntheticWorld w;
  w.spec = spec;

  std::mt19937_64 item_rng(derive_seed(seed, "world.items"));
  Matrix centers(spec.topics, k);
  for (std::size_t t = 0; t < spec.topics; ++t) {
    gaussian_into(centers.row(t), 1.0, item_rng);
    normalize(centers.row(t));
  }
  w.items = Matrix(spec.catalog_size, k);
  w.item_topic.resize(spec.catalog_size);
  for (std::size_t j = 0; j < spec.catalog_size; ++j) {
    const std::size_t t = j % spec.topics;
    w.item_topic[j] = static_cast<std::uint32_t>(t);
    auto row = w.items.row(j);
    gaussian_into(row, spec.item_noise * unit, item_rng);
    for (std::size_t c = 0; c < k; ++c) row[c] += centers(t, c);
    normalize(row);
  }

  const std::size_t sessions = spec.sessions_per_user;
  const std::size_t exposures = spec.exposures_per_session;
  w.users.resize(n_users);
  w.log.reserve(n_users * sessions * exposures);

  std::vector<float> fresh(k), noise(k);
  std::vector<double> cumulative(spec.catalog_size);
  for (UserId u = 0; u < n_users; ++u) {
    std::mt19937_64 rng(derive_seed(seed, "world.user." + std::to_string(u)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> topic_pick(0, spec.topics - 1);
    std::discrete_distribution<int> regime_pick(spec.regime_weights.begin(), spec.regime_weights.end());

    UserState& st = w.users[u];
    st.regime = static_cast<Regime>(regime_pick(rng));
    st.interests = Matrix(sessions, k);

    auto draw_interest = [&](std::span<float> out) {
      const std::size_t t = topic_pick(rng);
      gaussian_into(out, 0.3 * unit, rng);
      for (std::size_t c = 0; c < k; ++c) out[c] += centers(t, c);
      normalize(out);
    };
    draw_interest(st.interests.row(0));
    const double step = spec.drift[static_cast<std::size_t>(st.regime)];
    for (std::size_t s = 1; s < sessions; ++s) {
      auto prev = st.interests.row(s - 1);
      auto cur = st.interests.row(s);
      if (st.regime == Regime::LargeDrift) {
        draw_interest(fresh);
        for (std::size_t c = 0; c < k; ++c) cur[c] = static_cast<float>((1.0 - step) * prev[c] + step * fresh[c]);
      } else {
        gaussian_into(noise, step * unit, rng);
        for (std::size_t c = 0; c < k; ++c) cur[c] = prev[c] + noise[c];
      }
      if (step > 0.0) normalize(cur);
    }

    for (std::size_t s = 0; s < sessions; ++s) {
      const auto interest = st.interests.row(s);
      double acc = 0.0;
      for (std::size_t j = 0; j < spec.catalog_size; ++j) {
        acc += std::exp(spec.exposure_temperature * dot(interest, w.items.row(j)));
        cumulative[j] = acc;
      }
      std::unordered_set<ItemId> shown;
      for (std::size_t e = 0; e < exposures; ++e) {
        ItemId item = 0;
        for (int attempt = 0; attempt < 20; ++attempt) {
          if (unif(rng) < spec.relevant_share) {
            const double r = unif(rng) * acc;
            item = static_cast<ItemId>(std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
            item = std::min<ItemId>(item, static_cast<ItemId>(spec.catalog_size - 1));
          } else {
            item = static_cast<ItemId>(std::uniform_int_distribution<std::size_t>(0, spec.catalog_size - 1)(rng));
          }
          if (!shown.count(item)) break;
        }
        shown.insert(item);
        const double z = spec.click_scale * dot(interest, w.items.row(item)) + spec.click_bias;
        const int label = unif(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
        w.log.push_back(Interaction{u, item, static_cast<std::int64_t>(s * 1000 + e), label, static_cast<std::uint32_t>(s)});
      }
    }
  }
  index_users(w);
  return w;
}

bool synthetic_snapshot(const SyntheticWorld& world, UserId user, std::uint32_t session, HistorySnapshot& out) {
  const auto events = world.user_events(user);
  const std::size_t begin = static_cast<std::size_t>(session) * world.spec.exposures_per_session;
  const std::size_t cut = begin + world.spec.decision_offset;
  if (session == 0 || cut > events.size()) return false;
  SnapshotOptions opt;
  opt.max_history = world.spec.max_history;
  opt.in_session_norm = world.spec.decision_offset;
  out = make_snapshot(events, begin, cut, opt);
  return !out.cloud_history.empty();
}

void write_world(const std::filesystem::path& path, const SyntheticWorld& world) {
  const auto& s = world.spec;
  nlohmann::json spec{{"catalog_size", s.catalog_size},
                      {"latent_dim", s.latent_dim},
                      {"topics", s.topics},
                      {"item_noise", s.item_noise},
                      {"sessions_per_user", s.sessions_per_user},
                      {"exposures_per_session", s.exposures_per_session},
                      {"decision_offset", s.decision_offset},
                      {"session_length", s.session_length},
                      {"cache_size", s.cache_size},
                      {"max_history", s.max_history},
                      {"regime_weights", s.regime_weights},
                      {"drift", s.drift},
                      {"click_scale", s.click_scale},
                      {"click_bias", s.click_bias},
                      {"relevant_share", s.relevant_share},
                      {"exposure_temperature", s.exposure_temperature}};
  seqmodel::Checkpoint ckpt;
  ckpt.meta["kind"] = "synthetic-world";
  ckpt.meta["spec"] = spec.dump();
  ckpt.add("items", world.items);
  Matrix topics(1, world.item_topic.size());
  for (std::size_t j = 0; j < world.item_topic.size(); ++j) topics(0, j) = static_cast<float>(world.item_topic[j]);
  ckpt.add("item_topic", topics);
  Matrix regimes(1, world.users.size());
  Matrix interests(world.users.size() * s.sessions_per_user, s.latent_dim);
  for (std::size_t u = 0; u < world.users.size(); ++u) {
    regimes(0, u) = static_cast<float>(world.users[u].regime);
    for (std::size_t r = 0; r < s.sessions_per_user; ++r) {
      for (std::size_t c = 0; c < s.latent_dim; ++c) {
        interests(u * s.sessions_per_user + r, c) = world.users[u].interests(r, c);
      }
    }
  }
  ckpt.add("regime", regimes);
  ckpt.add("interests", interests);
  seqmodel::write_checkpoint(path, ckpt);
}

SyntheticWorld read_world(const std::filesystem::path& path, EventLog log) {
  const auto ckpt = seqmodel::read_checkpoint(path);
  if (ckpt.meta.count("kind") == 0 || ckpt.meta_value("kind") != "synthetic-world") {
    throw std::runtime_error(path.string() + " is not a synthetic world file");
  }
  const auto j = nlohmann::json::parse(ckpt.meta_value("spec"));
  SyntheticWorld w;
  auto& s = w.spec;
  s.catalog_size = j.at("catalog_size");
  s.latent_dim = j.at("latent_dim");
  s.topics = j.at("topics");
  s.item_noise = j.at("item_noise");
  s.sessions_per_user = j.at("sessions_per_user");
  s.exposures_per_session = j.at("exposures_per_session");
  s.decision_offset = j.at("decision_offset");
  s.session_length = j.at("session_length");
  s.cache_size = j.at("cache_size");
  s.max_history = j.at("max_history");
  s.regime_weights = j.at("regime_weights");
  s.drift = j.at("drift");
  s.click_scale = j.at("click_scale");
  s.click_bias = j.at("click_bias");
  s.relevant_share = j.at("relevant_share");
  s.exposure_temperature = j.at("exposure_temperature");
  w.items = ckpt.tensor("items");
  const auto& topics = ckpt.tensor("item_topic");
  w.item_topic.resize(topics.cols());
  for (std::size_t c = 0; c < topics.cols(); ++c) w.item_topic[c] = static_cast<std::uint32_t>(topics(0, c));
  const auto& regimes = ckpt.tensor("regime");
  const auto& interests = ckpt.tensor("interests");
  w.users.resize(regimes.cols());
  for (std::size_t u = 0; u < w.users.size(); ++u) {
    w.users[u].regime = static_cast<Regime>(static_cast<int>(regimes(0, u)));
    w.users[u].interests = Matrix(s.sessions_per_user, s.latent_dim);
    for (std::size_t r = 0; r < s.sessions_per_user; ++r) {
      for (std::size_t c = 0; c < s.latent_dim; ++c) {
        w.users[u].interests(r, c) = interests(u * s.sessions_per_user + r, c);
      }
    }
  }
  w.log = std::move(log);
  index_users(w);
  return w;
}

void RolePlan::validate() const {
  for (double v : {rec_train_share, treatment_share, cate_share, ctr_test_share}) {
    if (v < 0.0) throw std::invalid_argument("role shares must be non-negative");
  }
  if (rec_train_share + treatment_share + cate_share + ctr_test_share > 1.0 + 1e-9) {
    throw std::invalid_argument("role shares sum to more than 1");
  }
  for (double v : treatment_skew) {
    if (v <= 0.0) throw std::invalid_argument("treatment skew entries must be positive");
  }
}

RoleAssignment assign_roles(std::size_t n_users, const RolePlan& plan, std::uint64_t seed) {
  plan.validate();
  std::vector<UserId> order(n_users);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto count = [&](double share) { return static_cast<std::size_t>(std::floor(share * static_cast<double>(n_users))); };
  const std::size_t n_treat = count(plan.treatment_share);
  const std::size_t n_cate = count(plan.cate_share);
  const std::size_t n_ctr = count(plan.ctr_test_share);

  RoleAssignment out;
  out.role.assign(n_users, UserRole::RecTrain);
  out.arm.assign(n_users, -1);
  const double skew_total = plan.treatment_skew[0] + plan.treatment_skew[1] + plan.treatment_skew[2];
  std::array<std::size_t, 3> arm_size{};
  arm_size[1] = static_cast<std::size_t>(std::floor(n_treat * plan.treatment_skew[1] / skew_total));
  arm_size[2] = static_cast<std::size_t>(std::floor(n_treat * plan.treatment_skew[2] / skew_total));
  arm_size[0] = n_treat - arm_size[1] - arm_size[2];

  std::size_t i = 0;
  for (int arm = 0; arm < 3; ++arm) {
    for (std::size_t n = 0; n < arm_size[arm]; ++n, ++i) {
      out.role[order[i]] = UserRole::Treatment;
      out.arm[order[i]] = arm;
    }
  }
  for (std::size_t n = 0; n < n_cate; ++n, ++i) {
    out.role[order[i]] = UserRole::CateTest;
    out.arm[order[i]] = static_cast<int>(n % 3);
  }
  for (std::size_t n = 0; n < n_ctr; ++n, ++i) out.role[order[i]] = UserRole::CtrTest;
  // everyone left trains the recommenders
  return out;
}

Corpus build_synthetic_corpus(const SyntheticWorld& world, const RoleAssignment& roles, const RolePlan& plan,
                              std::uint64_t seed) {
  Corpus corpus;
  corpus.vocab_size = world.spec.catalog_size;
  const std::size_t exposures = world.spec.exposures_per_session;
  for (UserId u = 0; u < world.users.size(); ++u) {
    const auto events = world.user_events(u);
    std::set<ItemId> clicked;
    for (const auto& e : events) {
      if (e.label == 1) clicked.insert(e.item);
    }
    std::vector<ItemId> never_clicked;
    for (ItemId j = 0; j < world.spec.catalog_size; ++j) {
      if (!clicked.count(j)) never_clicked.push_back(j);
    }
    std::mt19937_64 rng(derive_seed(seed, "corpus.user." + std::to_string(u)));

    for (std::uint32_t s = 1; s < world.spec.sessions_per_user; ++s) {
      CandidateSet cs;
      if (!synthetic_snapshot(world, u, s, cs.snapshot)) continue;
      const UserRole role = roles.role.at(u);
      if (role == UserRole::Treatment || role == UserRole::CateTest) {
        auto& bucket = role == UserRole::Treatment ? corpus.treatment : corpus.cate_test;
        bucket[static_cast<std::size_t>(roles.arm.at(u))].push_back(std::move(cs));
        continue;
      }
      const auto device = cs.snapshot.device_history();
      const std::set<ItemId> seen(device.begin(), device.end());
      std::vector<ItemId> later;
      for (std::size_t e = s * exposures + world.spec.decision_offset; e < (s + 1) * exposures; ++e) {
        const auto& ev = events[e];
        if (ev.label == 1 && !seen.count(ev.item) &&
            std::find(later.begin(), later.end(), ev.item) == later.end()) {
          later.push_back(ev.item);
        }
      }
      if (later.empty()) continue;
      if (role == UserRole::RecTrain) {
        cs.positives = later;
        cs.negatives = sample_without_replacement(never_clicked, plan.train_negatives * later.size(), rng);
        corpus.ctr_train.push_back(std::move(cs));
      } else {
        cs.positives = {later.front()};
        cs.negatives = sample_without_replacement(never_clicked, plan.test_negatives, rng);
        corpus.ctr_test.push_back(std::move(cs));
      }
    }
  }
  return corpus;
}

}  // namespace mcrec::datasim
