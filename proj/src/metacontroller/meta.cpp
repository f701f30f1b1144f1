#include "mcrec/metacontroller/meta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mcrec/seqmodel/loss.hpp"

namespace mcrec::metacontroller {

using namespace seqmodel;

void SmoothingConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in [0, 1)");
  if (estimator == RatioEstimator::Ema && !(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw std::invalid_argument("EMA decay must lie in [0, 1)");
  }
}

std::size_t argmax(const Simplex& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

double invoking_ratio(std::span<const Simplex> predictions) {
  if (predictions.empty()) throw std::invalid_argument("invoking_ratio: no predictions");
  std::size_t refresh = 0;
  for (const auto& p : predictions) {
    if (argmax(p) == index_of(Mechanism::Refresh)) ++refresh;
  }
  return static_cast<double>(refresh) / static_cast<double>(predictions.size());
}

namespace {

std::size_t one_hot_index(const Simplex& c) {
  std::size_t hot = kNumMechanisms, ones = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 1.0) {
      hot = i;
      ++ones;
    } else if (c[i] != 0.0) {
      throw std::invalid_argument("smooth_labels: label is not one-hot");
    }
  }
  if (ones != 1) throw std::invalid_argument("smooth_labels: label is not one-hot");
  return hot;
}

// Largest allowed entry other than `skip`; ties go to the lowest index.
std::size_t largest_except(const Simplex& p, std::size_t skip, MechanismMask allowed) {
  std::size_t best = kNumMechanisms;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == skip || !allowed.allowed[i]) continue;
    if (best == kNumMechanisms || p[i] > p[best]) best = i;
  }
  return best;
}

std::size_t second_largest(const Simplex& p, MechanismMask allowed) {
  std::size_t first = kNumMechanisms;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (allowed.allowed[i] && (first == kNumMechanisms || p[i] > p[first])) first = i;
  }
  return largest_except(p, first, allowed);
}

std::size_t best_alternative(const Simplex& p, MechanismMask allowed) {
  return largest_except(p, index_of(Mechanism::Refresh), allowed);
}

}  // namespace

std::vector<Simplex> smooth_labels(std::span<const Simplex> predictions, std::span<const Simplex> labels,
                                   double batch_ratio, const SmoothingConfig& cfg) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("smooth_labels: size mismatch");
  std::vector<Simplex> out(labels.begin(), labels.end());
  const bool over = batch_ratio > cfg.epsilon;
  const std::size_t refresh = index_of(Mechanism::Refresh);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t hot = one_hot_index(labels[i]);
    if (!over || hot != refresh || cfg.lambda == 0.0) continue;
    const std::size_t alt = cfg.target == SmoothingTarget::SecondLargest ? second_largest(predictions[i], cfg.allowed)
                                                                        : best_alternative(predictions[i], cfg.allowed);
    if (alt == kNumMechanisms) continue;  // no other allowed class to move mass to
    Simplex c{};
    c[hot] = 1.0 - cfg.lambda;
    c[alt] += cfg.lambda;
    out[i] = c;
  }
  return out;
}

std::vector<Simplex> smooth_labels(std::span<const Simplex> predictions, std::span<const Simplex> labels,
                                   const SmoothingConfig& cfg) {
  return smooth_labels(predictions, labels, invoking_ratio(predictions), cfg);
}

Simplex MetaModel::predict(const datasim::HistorySnapshot& h) const {
  const auto history = h.device_history();
  const auto trace = net.forward(NetInput{history, 0, h.side_device}, 0);
  Simplex p{};
  std::copy(trace.head.probs.begin(), trace.head.probs.end(), p.begin());
  return p;
}

Checkpoint MetaModel::to_checkpoint() const {
  Checkpoint ckpt = net.to_checkpoint();
  ckpt.meta["kind"] = "meta";
  nlohmann::json s{{"epsilon", smoothing.epsilon},
                   {"lambda", smoothing.lambda},
                   {"estimator", smoothing.estimator == RatioEstimator::PerBatch ? "per-batch" : "ema"},
                   {"ema_decay", smoothing.ema_decay},
                   {"target", smoothing.target == SmoothingTarget::SecondLargest ? "second-largest" : "best-alternative"},
                   {"allowed", mask_to_string(smoothing.allowed)}};
  ckpt.meta["smoothing"] = s.dump();
  return ckpt;
}

MetaModel MetaModel::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.count("kind") == 0 || ckpt.meta_value("kind") != "meta") {
    throw std::runtime_error("checkpoint does not hold a meta model");
  }
  MetaModel m;
  m.net = SequenceNet::from_checkpoint(ckpt);
  const auto s = nlohmann::json::parse(ckpt.meta_value("smoothing"));
  m.smoothing.epsilon = s.at("epsilon").get<double>();
  m.smoothing.lambda = s.at("lambda").get<double>();
  m.smoothing.estimator = s.at("estimator").get<std::string>() == "ema" ? RatioEstimator::Ema : RatioEstimator::PerBatch;
  m.smoothing.ema_decay = s.at("ema_decay").get<double>();
  m.smoothing.target = s.value("target", std::string("second-largest")) == "best-alternative"
                           ? SmoothingTarget::BestAlternative
                           : SmoothingTarget::SecondLargest;
  m.smoothing.allowed = mask_from_string(s.value("allowed", std::string("111")));
  return m;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t n, double share,
                                                                            std::uint64_t seed) {
  if (share < 0.0 || share >= 1.0) throw std::invalid_argument("holdout share must lie in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "meta.holdout"));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto held = static_cast<std::size_t>(std::floor(share * static_cast<double>(n)));
  std::vector<std::size_t> train(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> test(idx.end() - static_cast<std::ptrdiff_t>(held), idx.end());
  return {train, test};
}

MetaModel train_meta(const MetaDataset& data, const SmoothingConfig& cfg, const MetaParams& hp, MetaReport* report) {
  if (data.empty()) throw std::invalid_argument("train_meta: empty D_meta");
  cfg.validate();
  const auto& np = hp.net;
  if (np.batch_size == 0 || np.epochs == 0) throw std::invalid_argument("train_meta: batch size and epochs must be positive");

  std::vector<std::vector<ItemId>> histories;
  histories.reserve(data.size());
  std::size_t vocab = np.vocab_size;
  for (const auto& s : data) {
    histories.push_back(s.snapshot.device_history());
    if (histories.back().empty()) throw std::invalid_argument("train_meta: snapshot with an empty device history");
    if (np.vocab_size == 0) {
      for (ItemId i : histories.back()) vocab = std::max<std::size_t>(vocab, i + 1);
    }
  }
  auto [train_idx, test_idx] = holdout_split(data.size(), hp.holdout_share, np.seed);
  if (train_idx.empty()) throw std::invalid_argument("train_meta: hold-out leaves no training data");

  HeadConfig head;
  head.hidden = np.hidden;
  head.activation = np.activation;
  head.output = OutputKind::Softmax;
  head.classes = kNumMechanisms;
  MetaModel model;
  model.smoothing = cfg;
  model.net = uplift::make_snapshot_net(np, vocab, {head});
  uplift::init_snapshot_net(model.net, np, "meta.init");
  auto params = model.net.parameters();
  Adam adam(params, np.adam);
  std::mt19937_64 rng(derive_seed(np.seed, "meta.shuffle"));

  MetaReport rep;
  rep.train_size = train_idx.size();
  rep.holdout_size = test_idx.size();
  for (std::size_t i : train_idx) rep.label_share[index_of(data[i].label)] += 1.0 / static_cast<double>(train_idx.size());

  bool have_ema = false;
  double ema = 0.0;
  double estimate = 0.0;
  bool stop = false;
  std::vector<NetTrace> traces;
  std::vector<Simplex> preds, labels;
  for (std::size_t epoch = 0; epoch < np.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0, ratio_sum = 0.0;
    std::size_t epoch_batches = 0, epoch_samples = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += np.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + np.batch_size);
      traces.clear();
      preds.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = train_idx[k];
        traces.push_back(model.net.forward(NetInput{histories[i], 0, data[i].snapshot.side_device}, 0));
        Simplex p{};
        std::copy(traces.back().head.probs.begin(), traces.back().head.probs.end(), p.begin());
        preds.push_back(p);
        labels.push_back(data[i].one_hot());
      }
      const double raw = invoking_ratio(preds);
      double ratio = raw;
      ratio_sum += ratio;
      ++epoch_batches;
      epoch_samples += end - start;
      if (cfg.estimator == RatioEstimator::Ema) {
        ema = have_ema ? cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * ratio : ratio;
        have_ema = true;
        ratio = ema;
      }
      estimate = ratio;
      const auto targets = smooth_labels(preds, labels, ratio, cfg);
      bool smoothed = false;
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] != labels[k]) {
          smoothed = true;
          ++rep.smoothed_labels;
        }
      }
      if (smoothed) ++rep.smoothed_batches;
      ++rep.batches;

      zero_grads(params);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = 0; k < traces.size(); ++k) {
        loss_sum += cross_entropy(targets[k], preds[k]);
        auto g = softmax_logit_grad(traces[k].head, targets[k]);
        for (double& v : g) v *= scale;
        model.net.backward(traces[k], g);
      }
      adam.step();
      if (hp.stop_under_budget && epoch >= hp.min_epochs && rep.smoothed_batches > 0 &&
          std::max(raw, estimate) <= cfg.epsilon) {
        stop = true;
        rep.stopped_early = true;
        break;
      }
    }
    rep.epoch_loss.push_back(loss_sum / static_cast<double>(epoch_samples));
    rep.epoch_ratio.push_back(ratio_sum / static_cast<double>(epoch_batches));
    rep.epochs_run = epoch + 1;
    if (stop) break;
  }

  if (!test_idx.empty()) {
    std::vector<Simplex> held;
    for (std::size_t i : test_idx) held.push_back(model.predict(data[i].snapshot));
    rep.holdout_ratio = invoking_ratio(held);
    for (const auto& p : held) rep.decision_share[argmax(p)] += 1.0 / static_cast<double>(held.size());
  }
  if (report) *report = std::move(rep);
  return model;
}

Mechanism select_mechanism(const Simplex& p, MechanismMask allowed) {
  if (allowed.count() == 0) throw std::invalid_argument("select_mechanism: empty mechanism mask");
  std::size_t best = kNumMechanisms;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    if (!allowed.allowed[t]) continue;
    if (best == kNumMechanisms || p[t] > p[best]) best = t;
  }
  return mechanism_from_index(best);
}

Mechanism select_mechanism(const MetaModel& model, const datasim::HistorySnapshot& h, MechanismMask allowed) {
  return select_mechanism(model.predict(h), allowed);
}

std::vector<Mechanism> decide_all(const MetaModel& model, std::span<const datasim::HistorySnapshot> snaps,
                                  const ServingOptions& opt) {
  std::vector<Mechanism> out;
  out.reserve(snaps.size());
  std::size_t refreshes = 0;
  for (const auto& h : snaps) {
    const Simplex p = model.predict(h);
    Mechanism m = select_mechanism(p, opt.allowed);
    if (opt.hard_cap && m == Mechanism::Refresh) {
      const double next = static_cast<double>(refreshes + 1) / static_cast<double>(out.size() + 1);
      if (next > model.smoothing.epsilon) {
        MechanismMask fallback = opt.allowed;
        fallback.allowed[index_of(Mechanism::Refresh)] = false;
        if (fallback.count() > 0) m = select_mechanism(p, fallback);
      }
    }
    if (m == Mechanism::Refresh) ++refreshes;
    out.push_back(m);
  }
  return out;
}

LambdaSearchResult select_lambda(std::span<const double> grid, std::span<const double> ratios, double epsilon) {
  if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
  if (ratios.empty() || ratios.size() > grid.size()) throw std::invalid_argument("select_lambda: ratios do not match the grid");
  LambdaSearchResult r;
  r.grid.assign(grid.begin(), grid.end());
  r.ratios.assign(ratios.begin(), ratios.end());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] <= epsilon) {
      r.lambda = grid[i];
      r.satisfied = true;
      return r;
    }
  }
  r.lambda = grid[ratios.size() - 1];
  r.satisfied = false;
  return r;
}

LambdaSearchResult lambda_search(const MetaDataset& data, double epsilon, std::span<const double> grid,
                                 const MetaParams& hp, MetaModel* chosen, MetaReport* chosen_report,
                                 SmoothingConfig base) {
  if (grid.empty()) throw std::invalid_argument("lambda_search: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("lambda_search: grid must be strictly ascending");
  }
  base.epsilon = epsilon;
  std::vector<double> ratios;
  std::vector<MetaModel> models;
  std::vector<MetaReport> reports;
  for (double lambda : grid) {
    SmoothingConfig cfg = base;
    cfg.lambda = lambda;
    MetaReport rep;
    models.push_back(train_meta(data, cfg, hp, &rep));
    ratios.push_back(rep.holdout_ratio);
    reports.push_back(rep);
  }
  auto result = select_lambda(grid, ratios, epsilon);
  const auto at = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), result.lambda) - grid.begin());
  if (chosen) *chosen = std::move(models[at]);
  if (chosen_report) *chosen_report = reports[at];
  return result;
}

void save_meta(const std::filesystem::path& path, const MetaModel& model) { write_checkpoint(path, model.to_checkpoint()); }

MetaModel load_meta(const std::filesystem::path& path) { return MetaModel::from_checkpoint(read_checkpoint(path)); }

}  // namespace mcrec::metacontroller
