#include "mcrec/seqmodel/sequence_net.hpp"

#include <random>
#include <stdexcept>

#include "json.hpp"

namespace mcrec::seqmodel {

SequenceNet::SequenceNet(NetConfig cfg) : cfg_(std::move(cfg)), encoder_(cfg_.encoder, "enc.") {
  if (cfg_.heads.empty()) throw std::invalid_argument("SequenceNet needs at least one head");
  for (std::size_t h = 0; h < cfg_.heads.size(); ++h) {
    heads_.emplace_back(feature_dim(), cfg_.heads[h], "head" + std::to_string(h) + ".");
  }
}

void SequenceNet::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  encoder_.init(rng);
  for (auto& h : heads_) h.init(rng);
}

std::span<const ItemId> SequenceNet::visible(std::span<const ItemId> history) const {
  const std::size_t max_len = cfg_.encoder.max_len;
  return history.size() > max_len ? history.subspan(history.size() - max_len) : history;
}

std::vector<double> SequenceNet::features(const EncoderTrace& enc, std::span<const float> side) const {
  if (side.size() != cfg_.side_dim) {
    throw std::invalid_argument("side feature dim " + std::to_string(side.size()) + " != " +
                                std::to_string(cfg_.side_dim));
  }
  std::vector<double> f(enc.output);
  f.insert(f.end(), side.begin(), side.end());
  return f;
}

HistoryCache SequenceNet::encode_history(std::span<const ItemId> history) const {
  return encoder_.encode_history(visible(history));
}

HeadTrace SequenceNet::forward_cached(const HistoryCache& history, ItemId query,
                                      std::span<const float> side, std::size_t head) const {
  const EncoderTrace enc = encoder_.attend(history, query);
  return heads_.at(head).forward(features(enc, side));
}

NetTrace SequenceNet::forward(const NetInput& input, std::size_t head) const {
  NetTrace t;
  t.head_index = head;
  t.history = encode_history(input.history);
  const ItemId query = cfg_.query == QueryMode::Candidate ? input.candidate : t.history.items.back();
  t.encoder = encoder_.attend(t.history, query);
  t.head = heads_.at(head).forward(features(t.encoder, input.side));
  return t;
}

std::vector<double> SequenceNet::predict(const NetInput& input, std::size_t head) const {
  return forward(input, head).head.probs;
}

void SequenceNet::backward(const NetTrace& trace, std::span<const double> d_logits) {
  const std::vector<double> d_features = heads_.at(trace.head_index).backward(trace.head, d_logits);
  encoder_.backward(trace.history, trace.encoder,
                    std::span<const double>(d_features.data(), encoder_.output_dim()));
}

ParameterList SequenceNet::parameters() {
  ParameterList out = encoder_.parameters();
  for (auto& h : heads_) {
    auto hp = h.parameters();
    out.insert(out.end(), hp.begin(), hp.end());
  }
  return out;
}

ParameterList SequenceNet::encoder_parameters() { return encoder_.parameters(); }

ParameterList SequenceNet::head_parameters(std::size_t head) { return heads_.at(head).parameters(); }

Checkpoint SequenceNet::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.meta["net_config"] = net_config_to_json(cfg_);
  for (const Parameter* p : encoder_.parameters()) ckpt.add(p->name, p->value);
  for (const auto& h : heads_) {
    for (const Parameter* p : h.parameters()) ckpt.add(p->name, p->value);
  }
  return ckpt;
}

SequenceNet SequenceNet::from_checkpoint(const Checkpoint& ckpt) {
  SequenceNet net(net_config_from_json(ckpt.meta_value("net_config")));
  for (Parameter* p : net.parameters()) {
    const Matrix& m = ckpt.tensor(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw std::runtime_error("checkpoint tensor '" + p->name + "' has the wrong shape");
    }
    p->value = m;
  }
  return net;
}

std::string net_config_to_json(const NetConfig& cfg) {
  nlohmann::json j;
  j["vocab_size"] = cfg.encoder.vocab_size;
  j["item_dim"] = cfg.encoder.item_dim;
  j["attn_dim"] = cfg.encoder.attn_dim;
  j["max_len"] = cfg.encoder.max_len;
  j["position_embeddings"] = cfg.encoder.position_embeddings;
  j["query"] = cfg.query == QueryMode::Candidate ? "candidate" : "last_item";
  j["side_dim"] = cfg.side_dim;
  j["heads"] = nlohmann::json::array();
  for (const auto& h : cfg.heads) {
    j["heads"].push_back({{"hidden", h.hidden},
                          {"activation", h.activation == Activation::Tanh ? "tanh" : "relu"},
                          {"output", h.output == OutputKind::Logistic ? "logistic" : "softmax"},
                          {"classes", h.classes}});
  }
  return j.dump();
}

NetConfig net_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NetConfig cfg;
  cfg.encoder.vocab_size = j.at("vocab_size").get<std::size_t>();
  cfg.encoder.item_dim = j.at("item_dim").get<std::size_t>();
  cfg.encoder.attn_dim = j.at("attn_dim").get<std::size_t>();
  cfg.encoder.max_len = j.at("max_len").get<std::size_t>();
  cfg.encoder.position_embeddings = j.at("position_embeddings").get<bool>();
  cfg.query = j.at("query").get<std::string>() == "candidate" ? QueryMode::Candidate : QueryMode::LastItem;
  cfg.side_dim = j.at("side_dim").get<std::size_t>();
  cfg.heads.clear();
  for (const auto& h : j.at("heads")) {
    HeadConfig hc;
    hc.hidden = h.at("hidden").get<std::vector<std::size_t>>();
    hc.activation = h.at("activation").get<std::string>() == "tanh" ? Activation::Tanh : Activation::Relu;
    hc.output = h.at("output").get<std::string>() == "logistic" ? OutputKind::Logistic : OutputKind::Softmax;
    hc.classes = h.at("classes").get<std::size_t>();
    cfg.heads.push_back(hc);
  }
  return cfg;
}

}  // namespace mcrec::seqmodel
