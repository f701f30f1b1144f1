#include "mcrec/eval/ctr_eval.hpp"

#include <algorithm>
#include <random>

#include "mcrec/recommenders/ranking.hpp"

namespace mcrec::eval {

std::vector<ScoredCase> score_cases(std::span<const datasim::CandidateSet> cases, const recommenders::CtrModel& cloud,
                                    const recommenders::CtrModel& device) {
  std::vector<ScoredCase> out;
  out.reserve(cases.size());
  for (const auto& cs : cases) {
    ScoredCase s;
    s.snapshot = cs.snapshot;
    s.positives = cs.positives;
    s.negatives = cs.negatives;
    std::vector<ItemId> all(cs.positives);
    all.insert(all.end(), cs.negatives.begin(), cs.negatives.end());
    for (std::size_t t = 0; t < kNumMechanisms; ++t) {
      const auto scores = recommenders::mechanism_scores(mechanism_from_index(t), all, cs.snapshot, cloud, &device);
      s.positive_scores[t].assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(cs.positives.size()));
      s.negative_scores[t].assign(scores.begin() + static_cast<std::ptrdiff_t>(cs.positives.size()), scores.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

double CtrMetrics::hitrate_at(std::size_t k) const {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw std::out_of_range("HitRate@" + std::to_string(k) + " was not evaluated");
  return hitrate[static_cast<std::size_t>(it - ks.begin())];
}

double CtrMetrics::ndcg_at(std::size_t k) const {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw std::out_of_range("NDCG@" + std::to_string(k) + " was not evaluated");
  return ndcg[static_cast<std::size_t>(it - ks.begin())];
}

CtrMetrics evaluate_policy(const std::string& name, std::span<const ScoredCase> cases,
                           std::span<const Mechanism> decisions, std::span<const std::size_t> ks) {
  if (cases.size() != decisions.size()) throw std::invalid_argument("evaluate_policy: one decision per case");
  if (cases.empty()) throw std::invalid_argument("evaluate_policy: no cases");
  std::vector<RankingCase> ranked;
  ranked.reserve(cases.size());
  CtrMetrics m;
  m.method = name;
  m.cases = cases.size();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::size_t t = index_of(decisions[i]);
    m.share[t] += 1.0 / static_cast<double>(cases.size());
    ranked.push_back(make_case(cases[i].snapshot.user, cases[i].positives, cases[i].positive_scores[t],
                               cases[i].negatives, cases[i].negative_scores[t]));
  }
  m.refresh_ratio = m.share[index_of(Mechanism::Refresh)];
  m.ks.assign(ks.begin(), ks.end());
  for (std::size_t k : ks) {
    m.hitrate.push_back(hitrate_at_k(ranked, k));
    m.ndcg.push_back(ndcg_at_k(ranked, k));
  }
  m.auc = gauc(ranked, &m.excluded);
  return m;
}

std::vector<Mechanism> constant_policy(std::size_t n, Mechanism m) { return std::vector<Mechanism>(n, m); }

std::vector<Mechanism> random_mixture(std::size_t n, const std::array<double, kNumMechanisms>& share,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double total = share[0] + share[1] + share[2];
  if (!(total > 0.0)) throw std::invalid_argument("random_mixture: shares must have positive mass");
  std::vector<Mechanism> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng) * total;
    out.push_back(u < share[0] ? Mechanism::Cloud : (u < share[0] + share[1] ? Mechanism::Device : Mechanism::Refresh));
  }
  return out;
}

std::vector<Mechanism> meta_policy(const metacontroller::MetaModel& meta, std::span<const ScoredCase> cases,
                                   const metacontroller::ServingOptions& opt) {
  std::vector<datasim::HistorySnapshot> snaps;
  snaps.reserve(cases.size());
  for (const auto& c : cases) snaps.push_back(c.snapshot);
  return metacontroller::decide_all(meta, snaps, opt);
}

std::vector<SweepRow> tradeoff_sweep(const uplift::MetaDataset& d_meta, const metacontroller::MetaParams& hp,
                                     std::span<const double> lambda_grid, std::span<const double> epsilons,
                                     std::span<const ScoredCase> cases, const metacontroller::ServingOptions& opt,
                                     metacontroller::SmoothingConfig base) {
  if (epsilons.empty()) throw std::invalid_argument("tradeoff_sweep: empty epsilon list");
  const std::size_t ks[] = {1, 5};
  std::vector<SweepRow> rows;
  for (double eps : epsilons) {
    metacontroller::MetaModel model;
    metacontroller::MetaReport rep;
    const auto search = metacontroller::lambda_search(d_meta, eps, lambda_grid, hp, &model, &rep, base);
    const auto decisions = meta_policy(model, cases, opt);
    const auto m = evaluate_policy("MCRec", cases, decisions, ks);
    rows.push_back(SweepRow{eps, search.lambda, search.satisfied, m.hitrate_at(1), m.ndcg_at(5), m.auc,
                            m.refresh_ratio, rep.holdout_ratio, search.ratios});
  }
  return rows;
}

}  // namespace mcrec::eval
