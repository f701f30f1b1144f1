// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
//   acceptance [artifact-dir] [criteria]
// Pipeline artifacts go under artifact-dir (default ./acceptance_runs).
// `criteria` is an optional comma-separated subset, e.g. "1,4".

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcrec/cli/config.hpp"
#include "mcrec/cli/pipeline.hpp"
#include "mcrec/datasim/io.hpp"
#include "mcrec/eval/metrics.hpp"
#include "mcrec/metacontroller/meta.hpp"
#include "mcrec/seqmodel/checkpoint.hpp"
#include "mcrec/seqmodel/grad_check.hpp"
#include "mcrec/seqmodel/loss.hpp"
#include "mcrec/uplift/surrogate.hpp"

using namespace mcrec;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> c;
  std::stringstream ss(line);
  std::string x;
  while (std::getline(ss, x, '\t')) c.push_back(x);
  return c;
}

// Headed TSV as rows of column-name maps.
std::vector<std::map<std::string, std::string>> read_table(const fs::path& p) {
  std::istringstream in(datasim::read_text_file(p));
  std::string line;
  std::getline(in, line);
  const auto header = cells(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    const auto c = cells(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < c.size(); ++i) row[header[i]] = c[i];
    rows.push_back(row);
  }
  return rows;
}

std::map<std::string, std::string> read_pairs(const fs::path& p) {
  std::map<std::string, std::string> out;
  for (const auto& row : read_table(p)) out[row.at("key")] = row.at("value");
  return out;
}

std::map<std::string, std::string> row_where(const fs::path& p, const std::string& col, const std::string& value) {
  for (const auto& row : read_table(p)) {
    if (row.at(col) == value) return row;
  }
  throw std::runtime_error("no row with " + col + " = " + value + " in " + p.string());
}

std::vector<std::pair<double, double>> read_curve(const fs::path& p) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(datasim::read_text_file(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto c = cells(line);
    out.emplace_back(std::stod(c.at(0)), std::stod(c.at(1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gradient integrity

double linear_fixture(std::uint64_t seed) {
  seqmodel::Parameter w("w", 5, 1), b("b", 1, 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (float& v : w.value.values()) v = static_cast<float>(normal(rng));
  b.value(0, 0) = static_cast<float>(normal(rng));
  std::vector<std::array<double, 5>> xs(6);
  std::vector<double> ys(6);
  for (std::size_t n = 0; n < xs.size(); ++n) {
    for (double& x : xs[n]) x = normal(rng);
    ys[n] = normal(rng);
  }
  auto loss = [&](bool grad) {
    if (grad) {
      w.zero_grad();
      b.zero_grad();
    }
    double total = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      double pred = b.value(0, 0);
      for (std::size_t i = 0; i < 5; ++i) pred += xs[n][i] * w.value(i, 0);
      const double r = pred - ys[n];
      total += 0.5 * r * r;
      if (grad) {
        for (std::size_t i = 0; i < 5; ++i) w.grad[i] += r * xs[n][i];
        b.grad[0] += r;
      }
    }
    return total;
  };
  seqmodel::GradCheckOptions opt;
  opt.samples_per_tensor = 0;
  opt.seed = seed;
  return seqmodel::grad_check({&w, &b}, [&] { return loss(true); }, [&] { return loss(false); }, opt)
      .max_relative_error;
}

// Encoder plus three logistic heads, one cross-entropy term per head.
double surrogate_fixture(std::uint64_t seed, std::string* worst) {
  seqmodel::NetConfig cfg;
  cfg.encoder.vocab_size = 12;
  cfg.encoder.item_dim = 6;
  cfg.encoder.attn_dim = 5;
  cfg.encoder.max_len = 8;
  cfg.query = seqmodel::QueryMode::LastItem;
  cfg.side_dim = 4;
  seqmodel::HeadConfig h;
  h.hidden = {7, 5};
  h.activation = seed % 2 == 0 ? seqmodel::Activation::Tanh : seqmodel::Activation::Relu;
  cfg.heads = {h, h, h};
  seqmodel::SequenceNet net(cfg);
  net.init(seed);
  for (float& v : net.encoder().item_embedding().value.values()) v *= 10.0f;
  // Biases off zero keep ReLU pre-activations away from the kink.
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<float> bias(-0.5f, 0.5f);
  for (std::size_t k = 0; k < net.num_heads(); ++k) {
    for (auto& b : net.head(k).biases()) {
      for (float& x : b.value.values()) x = bias(rng);
    }
  }

  std::uniform_int_distribution<ItemId> item(0, 11);
  std::uniform_real_distribution<float> side(-1.0f, 1.0f);
  struct Sample {
    std::vector<ItemId> history;
    std::vector<float> side;
    std::size_t head;
    double y;
  };
  std::vector<Sample> data;
  for (std::size_t n = 0; n < 9; ++n) {
    Sample s;
    for (std::size_t k = 0; k < 2 + n % 4; ++k) s.history.push_back(item(rng));
    for (int k = 0; k < 4; ++k) s.side.push_back(side(rng));
    s.head = n % 3;
    s.y = static_cast<double>(rng() % 2);
    data.push_back(s);
  }
  auto loss = [&](bool grad) {
    if (grad) seqmodel::zero_grads(net.parameters());
    double total = 0.0;
    for (const auto& s : data) {
      const auto t = net.forward(seqmodel::NetInput{s.history, 0, s.side}, s.head);
      const double p = t.head.probs[0];
      total += seqmodel::cross_entropy(std::vector<double>{1.0 - s.y, s.y}, std::vector<double>{1.0 - p, p});
      if (grad) net.backward(t, seqmodel::binary_logit_grad(t.head, seqmodel::OutputKind::Logistic, s.y));
    }
    return total;
  };
  seqmodel::GradCheckOptions opt;
  opt.seed = seed;
  opt.step = 1e-4;
  const auto r = seqmodel::grad_check(net.parameters(), [&] { return loss(true); }, [&] { return loss(false); }, opt);
  if (worst) *worst = r.worst_parameter;
  return r.max_relative_error;
}

Verdict gradient_integrity() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  double net_err = 0.0, lin_err = 0.0;
  std::string worst;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::string w;
    const double e = surrogate_fixture(seed, &w);
    if (e > net_err) {
      net_err = e;
      worst = w;
    }
    lin_err = std::max(lin_err, linear_fixture(seed));
  }
  const double secs = seconds_since(t0);
  v.require(net_err < 1e-4, "network max rel err < 1e-4");
  v.require(lin_err < 1e-6, "linear max rel err < 1e-6");
  v.require(secs < 60.0, "runtime < 1 min");
  v.note("20 seeds: network " + num(net_err, 8) + " (" + worst + "), linear " + num(lin_err, 10) + ", " +
         num(secs, 1) + " s");
  return v;
}

// ---------------------------------------------------------------------------
// 2. Metric oracles

// Percentile uplift over an explicit order, no tie handling needed.
double ordered_auuc(const std::vector<eval::ScoredOutcome>& pool, const std::vector<std::size_t>& order,
                    std::size_t pct) {
  const std::size_t P = pool.size(), N = std::min(pct, P);
  std::vector<double> diff;
  for (std::size_t n = 1; n <= N; ++n) {
    const std::size_t k = (n * P + N - 1) / N;
    double t = 0, tp = 0, c = 0, cp = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& s = pool[order[i]];
      if (s.treated) {
        t += 1;
        tp += s.outcome;
      } else {
        c += 1;
        cp += s.outcome;
      }
    }
    diff.push_back((t > 0 ? tp / t : 0.0) - (c > 0 ? cp / c : 0.0));
  }
  if (N == 1) return diff[0];
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) a += 0.5 * (diff[i] + diff[i + 1]);
  return a / static_cast<double>(N - 1);
}

Verdict metric_oracles() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t pools = 0;
  for (std::size_t P = 2; P <= 8; ++P) {
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<eval::ScoredOutcome> pool(P);
      for (auto& s : pool) s = {u(rng), u(rng) < 0.5, u(rng) < 0.5 ? 1 : 0};
      pool[0].treated = true;
      pool[1].treated = false;
      const std::size_t pct = 1 + rng() % 10;
      std::vector<std::size_t> order(P);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pool[a].score > pool[b].score; });
      const double direct = ordered_auuc(pool, order, pct);
      std::sort(order.begin(), order.end());
      double total = 0.0;
      std::size_t perms = 0;
      do {
        total += ordered_auuc(pool, order, pct);
        ++perms;
      } while (std::next_permutation(order.begin(), order.end()));
      const double random = total / static_cast<double>(perms);
      worst = std::max({worst, std::abs(eval::auuc(pool, pct) - direct),
                        std::abs(eval::auuc_random(pool, pct) - random),
                        std::abs(eval::qini(pool, pct) - (direct - random))});
      ++pools;
    }
  }
  v.require(worst < 1e-12, "auuc/qini equal the exhaustive oracle");

  auto rc = [](std::size_t rank) {
    eval::RankingCase c;
    c.rank = rank;
    return c;
  };
  const std::vector<eval::RankingCase> three{rc(1), rc(3), rc(7)};
  bool hand = std::abs(eval::hitrate_at_k(three, 5) - 2.0 / 3.0) < 1e-12;
  hand &= eval::hitrate_at_k(std::vector<eval::RankingCase>{rc(1)}, 1) == 1.0;
  hand &= eval::hitrate_at_k(std::vector<eval::RankingCase>{rc(3)}, 1) == 0.0;
  hand &= std::abs(eval::ndcg_at_k(std::vector<eval::RankingCase>{rc(2)}, 5) - 0.6309) < 1e-4;
  hand &= eval::ndcg_at_k(std::vector<eval::RankingCase>{rc(1)}, 1) == 1.0;
  hand &= eval::ndcg_at_k(std::vector<eval::RankingCase>{rc(6)}, 5) == 0.0;
  eval::RankingCase g;
  g.positive_scores = {0.9};
  g.negative_scores = {0.2, 0.8};
  hand &= eval::gauc(std::vector<eval::RankingCase>{g}) == 1.0;
  std::swap(g.positive_scores, g.negative_scores);
  g.positive_scores = {0.1};
  hand &= eval::gauc(std::vector<eval::RankingCase>{g}) == 0.0;
  const std::vector<eval::ScoredOutcome> worked{{0.9, true, 1}, {0.4, true, 0}, {0.8, false, 0}, {0.3, false, 0}};
  hand &= std::abs(eval::auuc(worked, 2) - 0.75) < 1e-12;
  v.require(hand, "hand-traced hitrate/ndcg/gauc/auuc fixtures");

  double mean = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<eval::ScoredOutcome> pool(200);
    for (auto& s : pool) s = {u(rng), u(rng) < 0.5, u(rng) < 0.3 ? 1 : 0};
    pool[0].treated = true;
    pool[1].treated = false;
    mean += eval::qini(pool, 20, 20, static_cast<std::uint64_t>(trial)) / 1000.0;
  }
  const double secs = seconds_since(t0);
  v.require(std::abs(mean) < 0.01, "|mean QINI| < 0.01");
  v.require(secs < 120.0, "runtime < 2 min");
  v.note(std::to_string(pools) + " pools, max deviation " + num(worst, 15) + "; mean random QINI " + num(mean, 5) +
         " over 1000 trials; " + num(secs, 1) + " s");
  return v;
}

// ---------------------------------------------------------------------------
// 3. Counterfactual construction

Mechanism direct_label(const std::array<double, 3>& g) {
  const double t1 = g[1] - g[0], t2 = g[2] - g[0];
  if (std::max(t1, t2) <= 0.0) return Mechanism::Cloud;
  return t2 > t1 ? Mechanism::Refresh : Mechanism::Device;
}

Verdict counterfactual_construction() {
  Verdict v;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> grid(0, 16);
  std::size_t ties = 0, mismatches = 0, shift_breaks = 0;
  for (int i = 0; i < 10000; ++i) {
    std::array<double, 3> g{};
    for (double& x : g) x = grid(rng) / 64.0;
    const double t1 = g[1] - g[0], t2 = g[2] - g[0];
    ties += t1 == t2 || t1 == 0.0 || t2 == 0.0;
    const auto label = uplift::best_mechanism(uplift::cate_from_outcomes(g));
    mismatches += label != direct_label(g);
    const double delta = (grid(rng) - 8) / 16.0;
    shift_breaks += uplift::best_mechanism(uplift::cate_from_outcomes({g[0] + delta, g[1] + delta, g[2] + delta})) != label;
  }
  v.require(mismatches == 0, "IND matches the direct rule on 10k triples");
  v.require(ties > 0, "tie cases exercised");
  v.require(shift_breaks == 0, "labels invariant under constant shifts");

  // Whole-dataset path: build_meta_dataset against labels recomputed from
  // the surrogate's own head outputs.
  std::uniform_int_distribution<ItemId> item(0, 29);
  std::array<datasim::TreatmentDataset, 3> d;
  for (std::size_t t = 0; t < 3; ++t) {
    for (int n = 0; n < 3334; ++n) {
      datasim::TreatmentSample s;
      s.snapshot.user = static_cast<UserId>(t * 10000 + n);
      for (int k = 0; k < 3; ++k) s.snapshot.cloud_history.push_back(item(rng));
      s.snapshot.in_session.push_back(item(rng));
      s.treatment = mechanism_from_index(t);
      s.outcome = (s.snapshot.in_session[0] + static_cast<ItemId>(t)) % 3 == 0;
      d[t].push_back(s);
    }
  }
  uplift::SnapshotNetParams hp;
  hp.vocab_size = 30;
  hp.item_dim = 8;
  hp.attn_dim = 8;
  hp.hidden = {8};
  hp.epochs = 1;
  hp.seed = 5;
  const auto model = uplift::train_surrogates(d[0], d[1], d[2], hp);
  const auto meta = uplift::build_meta_dataset(model, d[0], d[1], d[2]);
  std::size_t n = 0, bad = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    for (const auto& s : d[t]) {
      bad += meta.at(n).snapshot != s.snapshot || meta.at(n).label != direct_label(model.outcomes(s.snapshot));
      ++n;
    }
  }
  v.require(meta.size() == n && bad == 0, "build_meta_dataset equals the recomputed labels");
  v.note("10000 triples (" + std::to_string(ties) + " with ties), " + std::to_string(meta.size()) +
         " snapshots relabelled, " + std::to_string(mismatches + bad + shift_breaks) + " mismatches");
  return v;
}

// ---------------------------------------------------------------------------
// 4. Label-smoothing semantics

std::string erm_reference(const uplift::MetaDataset& data, const metacontroller::MetaParams& hp) {
  const auto& np = hp.net;
  auto [train_idx, test_idx] = metacontroller::holdout_split(data.size(), hp.holdout_share, np.seed);
  seqmodel::HeadConfig head;
  head.hidden = np.hidden;
  head.activation = np.activation;
  head.output = seqmodel::OutputKind::Softmax;
  head.classes = 3;
  auto net = uplift::make_snapshot_net(np, np.vocab_size, {head});
  uplift::init_snapshot_net(net, np, "meta.init");
  auto params = net.parameters();
  seqmodel::Adam adam(params, np.adam);
  std::mt19937_64 rng(derive_seed(np.seed, "meta.shuffle"));
  for (std::size_t e = 0; e < np.epochs; ++e) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (std::size_t start = 0; start < train_idx.size(); start += np.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + np.batch_size);
      std::vector<seqmodel::NetTrace> traces;
      std::vector<std::vector<ItemId>> hist;
      hist.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = data[train_idx[k]].snapshot;
        hist.push_back(s.device_history());
        traces.push_back(net.forward(seqmodel::NetInput{hist.back(), 0, s.side_device}, 0));
      }
      seqmodel::zero_grads(params);
      for (std::size_t k = 0; k < traces.size(); ++k) {
        auto g = seqmodel::softmax_logit_grad(traces[k].head, data[train_idx[start + k]].one_hot());
        for (double& x : g) x /= static_cast<double>(end - start);
        net.backward(traces[k], g);
      }
      adam.step();
    }
  }
  return seqmodel::serialize_checkpoint(net.to_checkpoint());
}

Verdict label_smoothing() {
  Verdict v;
  metacontroller::SmoothingConfig cfg;
  cfg.epsilon = 0.1;
  cfg.lambda = 0.3;
  const std::vector<metacontroller::Simplex> pred{{0.1, 0.3, 0.6}};
  const std::vector<metacontroller::Simplex> label{{0.0, 0.0, 1.0}};
  const auto out = metacontroller::smooth_labels(pred, label, cfg)[0];
  v.require(out[0] == 0.0 && std::abs(out[1] - 0.3) < 1e-12 && std::abs(out[2] - 0.7) < 1e-12, "worked example");

  // Random batches: only refresh labels in over-budget batches may change.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t changed = 0, illegal = 0;
  for (int batch = 0; batch < 400; ++batch) {
    std::vector<metacontroller::Simplex> p(32), c(32);
    for (std::size_t i = 0; i < 32; ++i) {
      const double a = u(rng), b = u(rng), r = u(rng) * (batch % 2 == 0 ? 3.0 : 0.2);
      p[i] = {a / (a + b + r), b / (a + b + r), r / (a + b + r)};
      c[i] = {0, 0, 0};
      c[i][rng() % 3] = 1.0;
    }
    const double ratio = metacontroller::invoking_ratio(p);
    const auto s = metacontroller::smooth_labels(p, c, cfg);
    for (std::size_t i = 0; i < 32; ++i) {
      if (s[i] != c[i]) {
        ++changed;
        illegal += !(ratio > cfg.epsilon && c[i][2] == 1.0);
      }
    }
  }
  v.require(changed > 0 && illegal == 0, "only refresh labels in over-budget batches change");

  // λ = 0 against plain cross-entropy training.
  std::uniform_int_distribution<ItemId> item(0, 29);
  uplift::MetaDataset data;
  for (int n = 0; n < 600; ++n) {
    uplift::CounterfactualSample s;
    s.snapshot.user = static_cast<UserId>(n);
    for (int k = 0; k < 4; ++k) s.snapshot.cloud_history.push_back(item(rng));
    s.snapshot.in_session.push_back(item(rng));
    s.label = s.snapshot.in_session[0] < 14 ? Mechanism::Refresh : mechanism_from_index(s.snapshot.in_session[0] % 2);
    data.push_back(s);
  }
  metacontroller::MetaParams hp;
  hp.net.vocab_size = 30;
  hp.net.item_dim = 8;
  hp.net.attn_dim = 8;
  hp.net.hidden = {12};
  hp.net.epochs = 3;
  hp.net.batch_size = 32;
  hp.net.adam.lr = 0.01;
  hp.net.seed = 21;
  metacontroller::SmoothingConfig zero;
  zero.epsilon = 0.1;
  zero.lambda = 0.0;
  metacontroller::MetaReport rep;
  const auto m = metacontroller::train_meta(data, zero, hp, &rep);
  const bool identical = seqmodel::serialize_checkpoint(m.net.to_checkpoint()) == erm_reference(data, hp);
  v.require(identical, "lambda = 0 bit-identical to plain ERM");
  v.note("worked example -> [" + num(out[0], 2) + ", " + num(out[1], 2) + ", " + num(out[2], 2) + "]; " +
         std::to_string(changed) + " labels changed, " + std::to_string(illegal) + " outside the rule; ERM " +
         (identical ? "bit-identical" : "differs"));
  return v;
}

// ---------------------------------------------------------------------------
// Pipeline-backed criteria

struct Stopwatch {
  std::map<std::string, double> stage_seconds;
  double total = 0.0;
};

Stopwatch run_stages(const cli::PipelineConfig& cfg, const fs::path& out, const std::vector<std::string>& stages,
                     const cli::StageOverrides& o = {}) {
  fs::create_directories(out);
  Stopwatch w;
  cli::Pipeline p(cfg, out, std::cerr);
  for (const auto& s : stages) {
    const auto t0 = std::chrono::steady_clock::now();
    p.run(s, o);
    w.stage_seconds[s] = seconds_since(t0);
    w.total += w.stage_seconds[s];
  }
  return w;
}

const std::vector<std::string> kAllStages{"gen-data",  "train-ctr", "collect-treatments", "train-surrogates",
                                          "build-meta", "train-meta", "evaluate",          "sweep"};

Verdict budget_satisfaction(const fs::path& dir, const Stopwatch& w) {
  Verdict v;
  const auto curve = read_curve(dir / cli::artifact::kLambdaCurve);
  const auto rep = read_pairs(dir / cli::artifact::kMetaReport);
  const double unconstrained = curve.at(0).second;
  const double held_out = std::stod(rep.at("holdout_invoking_ratio"));
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) worst_rise = std::max(worst_rise, curve[i].second - curve[i - 1].second);
  const double secs = w.stage_seconds.at("train-meta");
  v.require(std::stod(rep.at("epsilon")) == 0.1, "epsilon 0.1 in the fixture");
  v.require(unconstrained >= 0.35, "unconstrained ratio >= 0.35");
  v.require(held_out <= 0.12, "held-out ratio <= 0.12");
  v.require(worst_rise <= 0.02, "ratio non-increasing in lambda within 0.02");
  v.require(secs < 600.0, "lambda search < 10 min");
  std::string points;
  for (const auto& [l, r] : curve) points += (points.empty() ? "" : " ") + num(l, 2) + ":" + num(r, 3);
  v.note("unconstrained " + num(unconstrained, 3) + ", chosen lambda " + rep.at("lambda").substr(0, 4) +
         " -> held-out " + num(held_out, 3) + ", largest rise " + num(worst_rise, 3) + " [" + points + "], " +
         num(secs, 0) + " s");
  return v;
}

Verdict ordering_trends(const fs::path& dir, const Stopwatch& w) {
  Verdict v;
  const auto ctr = dir / cli::artifact::kCtrReport;
  auto auc = [&](const std::string& m) { return std::stod(row_where(ctr, "method", m).at("auc")); };
  const double crec = auc("CRec"), orec = auc("ORec"), crrec = auc("CRRec"), mcrec = auc("MCRec"), rmix = auc("RMixRec");
  std::map<double, double> by_eps;
  for (const auto& row : read_table(dir / cli::artifact::kSweep)) by_eps[std::stod(row.at("epsilon"))] = std::stod(row.at("auc"));
  v.require(by_eps.count(1.0) && by_eps.size() == 4, "sweep covers 0.1, 0.3, 0.5, 1.0");
  const double unconstrained = by_eps.count(1.0) ? by_eps.at(1.0) : 0.0;
  v.require(crrec >= orec - 0.002 && orec >= crec - 0.002, "(a) CRRec >= ORec >= CRec");
  v.require(unconstrained >= std::max({crec, orec, crrec}) - 0.005, "(b) unconstrained MCRec near the best baseline");
  double worst_drop = 0.0, prev = -1.0;
  std::string eps_list;
  for (const auto& [e, a] : by_eps) {
    if (prev >= 0.0) worst_drop = std::max(worst_drop, prev - a);
    prev = a;
    eps_list += (eps_list.empty() ? "" : " ") + num(e, 1) + ":" + num(a, 4);
  }
  v.require(worst_drop <= 0.005, "(c) MCRec AUC non-decreasing in epsilon");
  v.require(rmix < mcrec, "(d) RMixRec < MCRec");
  v.require(w.total < 1200.0, "pipeline < 20 min");
  v.note("AUC CRec " + num(crec) + ", ORec " + num(orec) + ", CRRec " + num(crrec) + ", MCRec(eps=1) " +
         num(unconstrained) + ", MCRec(eps=0.1) " + num(mcrec) + " vs RMixRec " + num(rmix) + "; by eps [" + eps_list +
         "]; " + num(w.total, 0) + " s");
  return v;
}

Verdict uplift_both_arms(const fs::path& dir) {
  Verdict v;
  std::string d;
  for (const auto& row : read_table(dir / cli::artifact::kUpliftReport)) {
    const double a = std::stod(row.at("auuc")), q = std::stod(row.at("qini"));
    v.require(a > 0.005 && q > 0.005, row.at("treatment") + " AUUC and QINI > 0.005");
    d += (d.empty() ? "" : ", ") + row.at("treatment") + " vs " + row.at("control") + " AUUC " + num(a) + " QINI " + num(q);
  }
  v.require(!d.empty(), "uplift report has rows");
  v.note(d);
  return v;
}

Verdict mechanism_pairs(const cli::PipelineConfig& base, const fs::path& source, const fs::path& root) {
  Verdict v;
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"cloud+device", "110"}, {"cloud+refresh", "101"}, {"device+refresh", "011"}};
  std::map<std::string, double> auc;
  cli::StageOverrides unconstrained;
  unconstrained.epsilon = 1.0;
  unconstrained.lambda = "0";
  for (const auto& [name, mask] : pairs) {
    const auto dir = root / name;
    fs::create_directories(dir);
    for (const char* f : {cli::artifact::kWorld, cli::artifact::kEvents, cli::artifact::kCorpus,
                          cli::artifact::kDataReport, cli::artifact::kCloud, cli::artifact::kDevice}) {
      fs::copy_file(source / f, dir / f, fs::copy_options::overwrite_existing);
    }
    auto cfg = base;
    cfg.mechanisms = mask_from_string(mask);
    cfg.lambda_grid.clear();
    try {
      run_stages(cfg, dir, {"collect-treatments", "train-surrogates", "build-meta", "train-meta", "evaluate"},
                 unconstrained);
      const auto row = row_where(dir / cli::artifact::kCtrReport, "method", "MCRec");
      auc[name] = std::stod(row.at("auc"));
      // A pair never routes to the excluded mechanism.
      const char* excluded = mask[0] == '0' ? "share_cloud" : mask[1] == '0' ? "share_device" : "share_refresh";
      v.require(std::stod(row.at(excluded)) == 0.0, name + " never serves the excluded mechanism");
    } catch (const std::exception& e) {
      v.require(false, name + " ran end to end (" + e.what() + ")");
    }
  }
  if (auc.size() == 3) {
    v.require(auc["device+refresh"] > auc["cloud+device"], "(device+refresh) beats (cloud+device) under heavy drift");
    v.note("MCRec AUC cloud+device " + num(auc["cloud+device"]) + ", cloud+refresh " + num(auc["cloud+refresh"]) +
           ", device+refresh " + num(auc["device+refresh"]));
  }
  return v;
}

Verdict reproducibility(const fs::path& config, const fs::path& root) {
  Verdict v;
  std::map<std::string, std::string> first;
  for (const char* run : {"a", "b"}) {
    const auto dir = root / run;
    fs::remove_all(dir);
    const std::string cmd = std::string(METACTL_PATH) + " run-all --config " + config.string() + " --out " +
                            dir.string() + " 2>/dev/null";
    v.require(std::system(cmd.c_str()) == 0, std::string("metactl run-all (") + run + ") exits 0");
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = datasim::read_text_file(e.path());
    if (first.empty()) {
      first = files;
      continue;
    }
    std::size_t differing = 0;
    for (const auto& [name, bytes] : files) differing += !first.count(name) || first.at(name) != bytes;
    v.require(files.size() == first.size() && differing == 0, "every artifact byte-identical");
    v.note(std::to_string(files.size()) + " artifacts compared, " + std::to_string(differing) + " differ");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
  const fs::path configs = MCREC_CONFIG_DIR;
  fs::create_directories(root);

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
  criteria.emplace_back("gradient integrity", gradient_integrity);
  criteria.emplace_back("metric oracles", metric_oracles);
  criteria.emplace_back("counterfactual construction", counterfactual_construction);
  criteria.emplace_back("label-smoothing semantics", label_smoothing);

  Stopwatch mixed_time;
  const auto mixed_dir = root / "mixed";
  bool mixed_ok = true;
  std::string mixed_error;
  auto run_mixed = [&] {
    static bool done = false;
    if (done) return;
    done = true;
    try {
      fs::remove_all(mixed_dir);
      mixed_time = run_stages(cli::load_pipeline_config(configs / "mixed.conf"), mixed_dir, kAllStages);
    } catch (const std::exception& e) {
      mixed_ok = false;
      mixed_error = e.what();
    }
  };
  criteria.emplace_back("budget satisfaction", [&] {
    run_mixed();
    if (!mixed_ok) return Verdict{false, "mixed pipeline failed: " + mixed_error};
    return budget_satisfaction(mixed_dir, mixed_time);
  });
  criteria.emplace_back("ordering trends", [&] {
    run_mixed();
    if (!mixed_ok) return Verdict{false, "mixed pipeline failed: " + mixed_error};
    return ordering_trends(mixed_dir, mixed_time);
  });

  const auto drift_dir = root / "drift-heavy";
  bool drift_ok = true;
  std::string drift_error;
  cli::PipelineConfig drift_cfg;
  auto run_drift = [&] {
    static bool done = false;
    if (done) return;
    done = true;
    try {
      fs::remove_all(drift_dir);
      drift_cfg = cli::load_pipeline_config(configs / "drift-heavy.conf");
      run_stages(drift_cfg, drift_dir, {"gen-data", "train-ctr", "collect-treatments", "train-surrogates", "build-meta",
                                        "train-meta", "evaluate"});
    } catch (const std::exception& e) {
      drift_ok = false;
      drift_error = e.what();
    }
  };
  criteria.emplace_back("uplift on both arms", [&] {
    run_drift();
    if (!drift_ok) return Verdict{false, "drift-heavy pipeline failed: " + drift_error};
    return uplift_both_arms(drift_dir);
  });
  criteria.emplace_back("mechanism pairs", [&] {
    run_drift();
    if (!drift_ok) return Verdict{false, "drift-heavy pipeline failed: " + drift_error};
    return mechanism_pairs(drift_cfg, drift_dir, root / "pairs");
  });
  criteria.emplace_back("reproducibility", [&] { return reproducibility(configs / "tiny.conf", root / "repro"); });

  std::vector<bool> selected(criteria.size(), argc <= 2);
  if (argc > 2) {
    std::stringstream list(argv[2]);
    std::string item;
    while (std::getline(list, item, ',')) {
      const std::size_t k = std::stoul(item);
      if (k < 1 || k > criteria.size()) {
        std::cerr << "no criterion " << item << '\n';
        return 2;
      }
      selected[k - 1] = true;
    }
  }

  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = Verdict{false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (v.pass ? "PASS" : "FAIL") << "  "
              << v.detail << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
