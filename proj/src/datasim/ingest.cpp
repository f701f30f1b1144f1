#include "mcrec/datasim/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "mcrec/datasim/snapshot.hpp"

namespace mcrec::datasim {

Protocol protocol_from_name(const std::string& name) {
  if (name == "movielens-like" || name == "movielens") return Protocol::MovielensLike;
  if (name == "amazon-like" || name == "amazon") return Protocol::AmazonLike;
  throw std::invalid_argument("unknown ingestion protocol '" + name + "' (expected movielens-like or amazon-like)");
}

std::size_t IngestOptions::threshold() const {
  if (min_interactions) return *min_interactions;
  return protocol == Protocol::MovielensLike ? 20 : 10;
}

namespace {

std::vector<std::string_view> split(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view f, std::size_t line, const char* what) {
  double v = 0.0;
  const auto* end = f.data() + f.size();
  const auto [ptr, ec] = std::from_chars(f.data(), end, v);
  if (f.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(f) + "'", line);
  }
  return v;
}

struct Row {
  std::int64_t timestamp;
  std::size_t line;
  ItemId item;
};

std::vector<ItemId> draw_negatives(const std::vector<ItemId>& pool, std::size_t k, std::mt19937_64& rng, bool& short_set) {
  std::vector<ItemId> p(pool);
  short_set = k > p.size();
  k = std::min(k, p.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p.size() - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  p.resize(k);
  return p;
}

}  // namespace

IngestResult ingest_interactions(std::istream& in, const IngestOptions& o) {
  IngestResult r;
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, ItemId> item_index;
  std::vector<std::string> user_names;
  std::vector<std::vector<Row>> rows_by_user;

  std::string delim;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    if (delim.empty()) {
      delim = line.find("::") != std::string::npos ? "::" : (line.find('\t') != std::string::npos ? "\t" : ",");
    }
    const auto f = split(line, delim);
    if (f.size() != 4) {
      throw ParseError("expected 4 fields (user, item, rating, timestamp), got " + std::to_string(f.size()), n);
    }
    const auto user = trim(f[0]);
    const auto item = trim(f[1]);
    if (user.empty() || item.empty()) throw ParseError("empty user or item id", n);
    const double rating = parse_real(trim(f[2]), n, "rating");
    const double ts = parse_real(trim(f[3]), n, "timestamp");
    ++r.stats.rows;

    const auto [iit, inew] = item_index.try_emplace(std::string(item), static_cast<ItemId>(item_index.size()));
    if (inew) r.item_names.emplace_back(item);
    if (rating <= 0.0) continue;
    const auto [uit, unew] = user_index.try_emplace(std::string(user), user_names.size());
    if (unew) {
      user_names.emplace_back(user);
      rows_by_user.emplace_back();
    }
    rows_by_user[uit->second].push_back(Row{static_cast<std::int64_t>(ts), n, iit->second});
  }
  r.vocab_size = item_index.size();
  r.stats.users_seen = user_names.size();

  SnapshotOptions snap_opt;
  snap_opt.max_history = o.max_history;
  snap_opt.in_session_norm = o.session_size;
  std::vector<ItemId> all_items(r.vocab_size);
  for (ItemId j = 0; j < r.vocab_size; ++j) all_items[j] = j;

  for (std::size_t u = 0; u < rows_by_user.size(); ++u) {
    auto& rows = rows_by_user[u];
    if (rows.size() < o.threshold()) {
      ++r.stats.users_dropped;
      continue;
    }
    if (rows.size() < o.test_items + 1) {
      ++r.stats.users_skipped;
      continue;
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.line < b.line; });
    const UserId dense = static_cast<UserId>(r.user_names.size());
    r.user_names.push_back(user_names[u]);
    ++r.stats.users_kept;

    const std::size_t n_train = rows.size() - o.test_items;
    const std::uint32_t test_session = static_cast<std::uint32_t>((n_train + o.session_size - 1) / o.session_size);
    const std::size_t first = r.log.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto session = i < n_train ? static_cast<std::uint32_t>(i / o.session_size) : test_session;
      r.log.push_back(Interaction{dense, rows[i].item, static_cast<std::int64_t>(i), 1, session});
    }
    const std::span<const Interaction> events(r.log.data() + first, rows.size());

    std::unordered_set<ItemId> touched;
    for (const auto& row : rows) touched.insert(row.item);
    std::vector<ItemId> untouched;
    for (ItemId j : all_items) {
      if (!touched.count(j)) untouched.push_back(j);
    }
    std::mt19937_64 rng(derive_seed(o.seed, "ingest.user." + std::to_string(dense)));

    std::size_t session_begin = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && events[i].session != events[i - 1].session) session_begin = i;
      CandidateSet cs;
      cs.snapshot = make_snapshot(events, session_begin, i, snap_opt);
      cs.positives = {events[i].item};
      bool short_set = false;
      const bool is_test = i >= n_train;
      cs.negatives = draw_negatives(untouched, is_test ? o.test_negatives : o.train_negatives, rng, short_set);
      if (short_set) ++r.stats.short_negative_sets;
      (is_test ? r.test : r.train).push_back(std::move(cs));
    }
  }
  return r;
}

IngestResult ingest_interactions(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ingest_interactions(in, options);
}

Corpus corpus_from_ingest(const IngestResult& data, const RolePlan& plan, std::uint64_t seed) {
  RolePlan held_out = plan;
  const double rest = plan.treatment_share + plan.cate_share + plan.ctr_test_share;
  if (rest <= 0.0) throw std::invalid_argument("role plan leaves no users for held-out cases");
  held_out.rec_train_share = 0.0;
  held_out.treatment_share = plan.treatment_share / rest;
  held_out.cate_share = plan.cate_share / rest;
  held_out.ctr_test_share = plan.ctr_test_share / rest;
  const auto roles = assign_roles(data.user_names.size(), held_out, seed);

  Corpus c;
  c.vocab_size = data.vocab_size;
  c.ctr_train = data.train;
  for (const auto& cs : data.test) {
    const UserId u = cs.snapshot.user;
    switch (roles.role.at(u)) {
      case UserRole::Treatment: c.treatment[static_cast<std::size_t>(roles.arm[u])].push_back(cs); break;
      case UserRole::CateTest: c.cate_test[static_cast<std::size_t>(roles.arm[u])].push_back(cs); break;
      default: c.ctr_test.push_back(cs); break;
    }
  }
  return c;
}

}  // namespace mcrec::datasim
