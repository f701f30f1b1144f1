#include "mcrec/uplift/surrogate.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mcrec/datasim/io.hpp"
#include "mcrec/seqmodel/loss.hpp"

namespace mcrec::uplift {

using namespace seqmodel;

SequenceNet make_snapshot_net(const SnapshotNetParams& hp, std::size_t vocab, std::vector<HeadConfig> heads) {
  NetConfig cfg;
  cfg.encoder.vocab_size = vocab;
  cfg.encoder.item_dim = hp.item_dim;
  cfg.encoder.attn_dim = hp.attn_dim;
  cfg.encoder.max_len = hp.max_len;
  cfg.query = QueryMode::LastItem;
  cfg.side_dim = datasim::kSideDim;
  cfg.heads = std::move(heads);
  return SequenceNet(cfg);
}

void init_snapshot_net(SequenceNet& net, const SnapshotNetParams& hp, const std::string& stream) {
  net.init(derive_seed(hp.seed, stream));
  if (hp.warm_item_embedding.size() == 0) return;
  auto& emb = net.encoder().item_embedding().value;
  if (hp.warm_item_embedding.cols() != emb.cols() || hp.warm_item_embedding.rows() > emb.rows()) {
    throw std::invalid_argument("warm item embedding is " + std::to_string(hp.warm_item_embedding.rows()) + "x" +
                                std::to_string(hp.warm_item_embedding.cols()) + ", net expects at most " +
                                std::to_string(emb.rows()) + "x" + std::to_string(emb.cols()));
  }
  for (std::size_t r = 0; r < hp.warm_item_embedding.rows(); ++r) {
    const auto src = hp.warm_item_embedding.row(r);
    std::copy(src.begin(), src.end(), emb.row(r).begin());
  }
}

namespace {

NetInput device_input(const std::vector<ItemId>& history, const HistorySnapshot& h) {
  return NetInput{history, 0, h.side_device};
}

}  // namespace

std::array<double, kNumMechanisms> SurrogateModel::outcomes(const HistorySnapshot& h) const {
  const auto history = h.device_history();
  const auto cache = net.encode_history(history);
  const ItemId query = cache.items.back();
  std::array<double, kNumMechanisms> g{};
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    g[t] = click_probability(net.forward_cached(cache, query, h.side_device, t), net.config().heads[t].output);
  }
  return g;
}

Checkpoint SurrogateModel::to_checkpoint() const {
  Checkpoint ckpt = net.to_checkpoint();
  ckpt.meta["kind"] = "surrogate";
  ckpt.meta["trained"] = mask_to_string(trained);
  return ckpt;
}

SurrogateModel SurrogateModel::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.count("kind") == 0 || ckpt.meta_value("kind") != "surrogate") {
    throw std::runtime_error("checkpoint does not hold surrogate models");
  }
  SurrogateModel m;
  m.net = SequenceNet::from_checkpoint(ckpt);
  m.trained = mask_from_string(ckpt.meta_value("trained"));
  return m;
}

SurrogateModel train_surrogates(const TreatmentDataset& d0, const TreatmentDataset& d1, const TreatmentDataset& d2,
                                const SnapshotNetParams& hp, SurrogateReport* report, MechanismMask mask) {
  const std::array<const TreatmentDataset*, kNumMechanisms> data{&d0, &d1, &d2};
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    if (mask.allowed[t] && data[t]->empty()) {
      throw std::invalid_argument(std::string("train_surrogates: D_") + std::to_string(t) + " (" +
                                  mechanism_name(mechanism_from_index(t)) + ") is empty");
    }
  }
  if (hp.batch_size == 0 || hp.epochs == 0) throw std::invalid_argument("train_surrogates: batch size and epochs must be positive");

  std::size_t vocab = hp.vocab_size;
  if (vocab == 0) {
    for (const auto* d : data) {
      for (const auto& s : *d) {
        for (ItemId i : s.snapshot.device_history()) vocab = std::max<std::size_t>(vocab, i + 1);
      }
    }
  }
  HeadConfig head;
  head.hidden = hp.hidden;
  head.activation = hp.activation;
  SurrogateModel model;
  model.trained = mask;
  model.net = make_snapshot_net(hp, vocab, {head, head, head});
  init_snapshot_net(model.net, hp, "surrogate.init");

  auto all = model.net.parameters();
  Adam adam(all, hp.adam);
  std::array<ParameterList, kNumMechanisms> routed;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    routed[t] = model.net.encoder_parameters();
    const auto hp_t = model.net.head_parameters(t);
    routed[t].insert(routed[t].end(), hp_t.begin(), hp_t.end());
  }

  std::array<std::vector<std::vector<ItemId>>, kNumMechanisms> histories;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    for (const auto& s : *data[t]) histories[t].push_back(s.snapshot.device_history());
  }

  SurrogateReport rep;
  std::mt19937_64 rng(derive_seed(hp.seed, "surrogate.shuffle"));
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::array<std::vector<std::size_t>, kNumMechanisms> order;
    std::size_t rounds = 0;
    for (std::size_t t = 0; t < kNumMechanisms; ++t) {
      if (!mask.allowed[t]) continue;
      order[t].resize(data[t]->size());
      std::iota(order[t].begin(), order[t].end(), 0);
      std::shuffle(order[t].begin(), order[t].end(), rng);
      rounds = std::max(rounds, (order[t].size() + hp.batch_size - 1) / hp.batch_size);
    }
    std::array<double, kNumMechanisms> loss{};
    std::array<std::size_t, kNumMechanisms> seen{};
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t t = 0; t < kNumMechanisms; ++t) {
        const std::size_t start = r * hp.batch_size;
        if (!mask.allowed[t] || start >= order[t].size()) continue;
        const std::size_t end = std::min(order[t].size(), start + hp.batch_size);
        const double scale = 1.0 / static_cast<double>(end - start);
        zero_grads(all);
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[t][k];
          const auto& sample = (*data[t])[i];
          if (histories[t][i].empty()) continue;
          const auto trace = model.net.forward(device_input(histories[t][i], sample.snapshot), t);
          loss[t] += binary_cross_entropy(sample.outcome, trace.head.probs[0]);
          ++seen[t];
          auto g = binary_logit_grad(trace.head, OutputKind::Logistic, sample.outcome);
          for (double& v : g) v *= scale;
          model.net.backward(trace, g);
        }
        adam.step(routed[t]);
        ++rep.batches;
      }
    }
    for (std::size_t t = 0; t < kNumMechanisms; ++t) {
      if (!mask.allowed[t]) continue;
      rep.head_loss[t].push_back(seen[t] ? loss[t] / static_cast<double>(seen[t]) : 0.0);
      rep.samples[t] = seen[t];
    }
  }
  if (report) *report = std::move(rep);
  return model;
}

CateEstimate cate_from_outcomes(const std::array<double, kNumMechanisms>& g) {
  CateEstimate c;
  c.tau[0] = 0.0;
  c.tau[1] = g[1] - g[0];
  c.tau[2] = g[2] - g[0];
  return c;
}

CateEstimate estimate_cate(const SurrogateModel& model, const HistorySnapshot& h) {
  return cate_from_outcomes(model.outcomes(h));
}

Mechanism best_mechanism(const CateEstimate& cate, MechanismMask mask) {
  if (mask.count() == 0) throw std::invalid_argument("best_mechanism: empty mechanism mask");
  std::size_t best = kNumMechanisms;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) {
    if (!mask.allowed[t]) continue;
    if (best == kNumMechanisms || cate.tau[t] > cate.tau[best]) best = t;
  }
  return mechanism_from_index(best);
}

std::array<double, kNumMechanisms> CounterfactualSample::one_hot() const {
  std::array<double, kNumMechanisms> c{};
  c[index_of(label)] = 1.0;
  return c;
}

MetaDataset build_meta_dataset(const SurrogateModel& model, const TreatmentDataset& d0, const TreatmentDataset& d1,
                               const TreatmentDataset& d2, MechanismMask mask) {
  MetaDataset out;
  out.reserve(d0.size() + d1.size() + d2.size());
  for (const auto* d : {&d0, &d1, &d2}) {
    for (const auto& s : *d) out.push_back({s.snapshot, best_mechanism(estimate_cate(model, s.snapshot), mask)});
  }
  return out;
}

void write_meta_dataset(const std::filesystem::path& path, const MetaDataset& data) {
  std::ostringstream ss;
  for (const auto& s : data) ss << datasim::snapshot_to_json(s.snapshot).dump() << '\t' << index_of(s.label) << '\n';
  datasim::write_text_file(path, ss.str());
}

MetaDataset read_meta_dataset(const std::filesystem::path& path) {
  std::istringstream in(datasim::read_text_file(path));
  MetaDataset out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw datasim::ParseError("expected snapshot and label columns", n);
    CounterfactualSample s;
    try {
      s.snapshot = datasim::snapshot_from_json(nlohmann::json::parse(line.substr(0, tab)));
    } catch (const nlohmann::json::exception& e) {
      throw datasim::ParseError(std::string("bad snapshot payload: ") + e.what(), n);
    }
    const std::string label = line.substr(tab + 1);
    if (label != "0" && label != "1" && label != "2") throw datasim::ParseError("label must be 0, 1 or 2", n);
    s.label = mechanism_from_index(static_cast<std::size_t>(label[0] - '0'));
    out.push_back(std::move(s));
  }
  return out;
}

void save_surrogates(const std::filesystem::path& path, const SurrogateModel& model) {
  write_checkpoint(path, model.to_checkpoint());
}

SurrogateModel load_surrogates(const std::filesystem::path& path) {
  return SurrogateModel::from_checkpoint(read_checkpoint(path));
}

}  // namespace mcrec::uplift
