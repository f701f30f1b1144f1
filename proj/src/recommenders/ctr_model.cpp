#include "mcrec/recommenders/ctr_model.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>

#include "mcrec/seqmodel/loss.hpp"

namespace mcrec::recommenders {

using namespace seqmodel;

const char* schema_name(Schema s) { return s == Schema::Cloud ? "cloud" : "device"; }

Schema schema_from_name(const std::string& name) {
  if (name == "cloud") return Schema::Cloud;
  if (name == "device") return Schema::Device;
  throw std::invalid_argument("unknown schema '" + name + "'");
}

double CtrModel::score(std::span<const ItemId> history, ItemId candidate, std::span<const float> side) const {
  const auto trace = net.forward(NetInput{history, candidate, side}, 0);
  return click_probability(trace.head, net.config().heads[0].output);
}

Checkpoint CtrModel::to_checkpoint() const {
  Checkpoint ckpt = net.to_checkpoint();
  ckpt.meta["kind"] = "ctr";
  ckpt.meta["schema"] = schema_name(schema);
  return ckpt;
}

CtrModel CtrModel::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.count("kind") == 0 || ckpt.meta_value("kind") != "ctr") {
    throw std::runtime_error("checkpoint does not hold a CTR model");
  }
  CtrModel m;
  m.schema = schema_from_name(ckpt.meta_value("schema"));
  m.net = SequenceNet::from_checkpoint(ckpt);
  return m;
}

CtrHyperParams default_hyperparams(Schema schema) {
  CtrHyperParams hp;
  if (schema == Schema::Device) {
    hp.item_dim = 8;
    hp.attn_dim = 8;
  }
  return hp;
}

namespace {

struct Example {
  std::size_t view;  // index into the per-set views
  ItemId item;
  int label;
  float prior;
};

struct View {
  std::vector<ItemId> history;
  datasim::SideFeatures side;
};

}  // namespace

CtrModel train_ctr_model(std::span<const CandidateSet> data, Schema schema, const CtrHyperParams& hp,
                         CtrReport* report, const CtrModel* cloud_prior) {
  if (data.empty()) throw std::invalid_argument("train_ctr_model: empty dataset");
  if (hp.batch_size == 0 || hp.epochs == 0) throw std::invalid_argument("train_ctr_model: batch size and epochs must be positive");
  if (schema == Schema::Device && (cloud_prior == nullptr || cloud_prior->schema != Schema::Cloud)) {
    throw std::invalid_argument("train_ctr_model: device training needs the trained cloud model for prior scores");
  }

  std::size_t vocab = 0;
  for (const auto& cs : data) {
    for (ItemId i : cs.snapshot.device_history()) vocab = std::max<std::size_t>(vocab, i + 1);
    for (ItemId i : cs.positives) vocab = std::max<std::size_t>(vocab, i + 1);
    for (ItemId i : cs.negatives) vocab = std::max<std::size_t>(vocab, i + 1);
  }
  if (cloud_prior) vocab = std::max(vocab, cloud_prior->net.config().encoder.vocab_size);

  std::vector<View> views;
  std::vector<Example> examples;
  std::size_t skipped = 0;
  for (const auto& cs : data) {
    View v;
    v.history = cs.snapshot.device_history();
    v.side = schema == Schema::Cloud ? cs.snapshot.side_cloud : cs.snapshot.side_device;
    const std::size_t n_items = cs.positives.size() + cs.negatives.size();
    if (v.history.empty()) {
      skipped += n_items;
      continue;
    }
    std::optional<HistoryCache> cloud_cache;
    if (schema == Schema::Device && !cs.snapshot.cloud_history.empty()) {
      cloud_cache = cloud_prior->net.encode_history(cs.snapshot.cloud_history);
    }
    const auto prior = [&](ItemId item) -> float {
      if (!cloud_cache) return 0.0f;
      const auto& c = cloud_prior->net;
      return static_cast<float>(click_probability(c.forward_cached(*cloud_cache, item, cs.snapshot.side_cloud, 0),
                                                  c.config().heads[0].output));
    };
    const std::size_t vi = views.size();
    views.push_back(std::move(v));
    for (ItemId p : cs.positives) examples.push_back({vi, p, 1, schema == Schema::Device ? prior(p) : 0.0f});
    for (ItemId n : cs.negatives) examples.push_back({vi, n, 0, schema == Schema::Device ? prior(n) : 0.0f});
  }
  if (examples.empty()) throw std::invalid_argument("train_ctr_model: no example has a usable history");

  NetConfig cfg;
  cfg.encoder.vocab_size = vocab;
  cfg.encoder.item_dim = hp.item_dim;
  cfg.encoder.attn_dim = hp.attn_dim;
  cfg.encoder.max_len = hp.max_len;
  cfg.query = QueryMode::Candidate;
  cfg.side_dim = datasim::kSideDim;
  HeadConfig head;
  head.hidden = hp.hidden;
  head.activation = hp.activation;
  head.output = hp.output;
  head.classes = hp.output == OutputKind::Logistic ? 1 : 2;
  cfg.heads = {head};

  CtrModel model;
  model.schema = schema;
  model.net = SequenceNet(cfg);
  model.net.init(derive_seed(hp.seed, "ctr.init"));
  auto params = model.net.parameters();
  Adam adam(params, hp.adam);
  std::mt19937_64 rng(derive_seed(hp.seed, "ctr.shuffle"));

  const auto side_of = [&](const Example& e) {
    datasim::SideFeatures s = views[e.view].side;
    if (schema == Schema::Device) s[datasim::side::kPriorScore] = e.prior;
    return s;
  };

  CtrReport rep;
  rep.examples = examples.size();
  rep.skipped = skipped;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_grads(params);
      for (std::size_t k = start; k < end; ++k) {
        const Example& e = examples[order[k]];
        const auto side = side_of(e);
        const auto trace = model.net.forward(NetInput{views[e.view].history, e.item, side}, 0);
        loss_sum += binary_cross_entropy(e.label, click_probability(trace.head, head.output));
        auto g = binary_logit_grad(trace.head, head.output, e.label);
        for (double& v : g) v *= scale;
        model.net.backward(trace, g);
      }
      adam.step();
    }
    rep.epoch_loss.push_back(loss_sum / static_cast<double>(examples.size()));
  }

  std::vector<double> scores(examples.size());
  std::vector<int> labels(examples.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto side = side_of(examples[i]);
    scores[i] = model.score(views[examples[i].view].history, examples[i].item, side);
    labels[i] = examples[i].label;
    if ((scores[i] > 0.5) == (labels[i] == 1)) ++correct;
  }
  rep.train_auc = roc_auc(scores, labels);
  rep.train_accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  if (report) *report = std::move(rep);
  return model;
}

void save_model(const std::filesystem::path& path, const CtrModel& model) {
  write_checkpoint(path, model.to_checkpoint());
}

CtrModel load_model(const std::filesystem::path& path) { return CtrModel::from_checkpoint(read_checkpoint(path)); }

}  // namespace mcrec::recommenders
