#include "mcrec/seqmodel/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace mcrec::seqmodel {

AttentionEncoder::AttentionEncoder(const EncoderConfig& cfg, const std::string& prefix)
    : cfg_(cfg),
      item_emb_(prefix + "item_emb", cfg.vocab_size, cfg.item_dim),
      pos_emb_(prefix + "pos_emb", cfg.max_len, cfg.item_dim),
      q_proj_(prefix + "q_proj", cfg.item_dim, cfg.attn_dim),
      k_proj_(prefix + "k_proj", cfg.item_dim, cfg.attn_dim),
      v_proj_(prefix + "v_proj", cfg.item_dim, cfg.attn_dim) {
  if (cfg.vocab_size == 0 || cfg.item_dim == 0 || cfg.attn_dim == 0 || cfg.max_len == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
}

void AttentionEncoder::init(std::mt19937_64& rng) {
  init_uniform(item_emb_.value, 0.05f, rng);
  if (cfg_.position_embeddings) {
    init_uniform(pos_emb_.value, 0.05f, rng);
  }
  init_xavier(q_proj_.value, rng);
  init_xavier(k_proj_.value, rng);
  init_xavier(v_proj_.value, rng);
}

void AttentionEncoder::check_id(ItemId id) const {
  if (id >= cfg_.vocab_size) {
    throw std::invalid_argument("item id " + std::to_string(id) + " out of vocabulary (size " +
                                std::to_string(cfg_.vocab_size) + ")");
  }
}

HistoryCache AttentionEncoder::encode_history(std::span<const ItemId> history) const {
  if (history.empty()) throw std::invalid_argument("attention_encode: empty history");
  if (history.size() > cfg_.max_len) {
    throw std::invalid_argument("attention_encode: history length " + std::to_string(history.size()) +
                                " exceeds max " + std::to_string(cfg_.max_len));
  }
  const std::size_t n = history.size();
  const std::size_t d = cfg_.item_dim;
  const std::size_t a = cfg_.attn_dim;

  HistoryCache cache;
  cache.items.assign(history.begin(), history.end());
  cache.positions.resize(n);
  cache.embeds.assign(n * d, 0.0);
  cache.keys.assign(n * a, 0.0);
  cache.values.assign(n * a, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    check_id(history[i]);
    cache.positions[i] = n - 1 - i;
    const auto item_row = item_emb_.value.row(history[i]);
    std::span<double> e(cache.embeds.data() + i * d, d);
    for (std::size_t c = 0; c < d; ++c) e[c] = item_row[c];
    if (cfg_.position_embeddings) {
      const auto pos_row = pos_emb_.value.row(cache.positions[i]);
      for (std::size_t c = 0; c < d; ++c) e[c] += pos_row[c];
    }
    affine(e, k_proj_.value, nullptr, std::span<double>(cache.keys.data() + i * a, a));
    affine(e, v_proj_.value, nullptr, std::span<double>(cache.values.data() + i * a, a));
  }
  return cache;
}

EncoderTrace AttentionEncoder::attend(const HistoryCache& history, ItemId query_item) const {
  check_id(query_item);
  const std::size_t n = history.length();
  const std::size_t d = cfg_.item_dim;
  const std::size_t a = cfg_.attn_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(a));

  EncoderTrace t;
  t.query_item = query_item;
  t.query_embed.resize(d);
  const auto q_row = item_emb_.value.row(query_item);
  for (std::size_t c = 0; c < d; ++c) t.query_embed[c] = q_row[c];
  t.query.resize(a);
  affine(t.query_embed, q_proj_.value, nullptr, t.query);

  t.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* k = history.keys.data() + i * a;
    double s = 0.0;
    for (std::size_t c = 0; c < a; ++c) s += t.query[c] * k[c];
    t.weights[i] = s * scale;
  }
  softmax_inplace(t.weights);

  t.output.assign(a + d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = t.weights[i];
    const double* v = history.values.data() + i * a;
    for (std::size_t c = 0; c < a; ++c) t.output[c] += w * v[c];
  }
  for (std::size_t c = 0; c < d; ++c) t.output[a + c] = t.query_embed[c];
  return t;
}

void AttentionEncoder::backward(const HistoryCache& h, const EncoderTrace& t,
                                std::span<const double> d_output) {
  const std::size_t n = h.length();
  const std::size_t d = cfg_.item_dim;
  const std::size_t a = cfg_.attn_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(a));
  const std::span<const double> d_pooled = d_output.subspan(0, a);

  // softmax backward
  std::vector<double> d_weight(n, 0.0);
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* v = h.values.data() + i * a;
    double s = 0.0;
    for (std::size_t c = 0; c < a; ++c) s += d_pooled[c] * v[c];
    d_weight[i] = s;
    weighted += t.weights[i] * s;
  }

  std::vector<double> d_query(a, 0.0);
  std::vector<double> d_key(a), d_value(a), d_embed(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_score = t.weights[i] * (d_weight[i] - weighted) * scale;
    const double* k = h.keys.data() + i * a;
    for (std::size_t c = 0; c < a; ++c) {
      d_query[c] += d_score * k[c];
      d_key[c] = d_score * t.query[c];
      d_value[c] = t.weights[i] * d_pooled[c];
    }
    const std::span<const double> e(h.embeds.data() + i * d, d);
    accumulate_outer(e, d_key, k_proj_.grad);
    accumulate_outer(e, d_value, v_proj_.grad);

    std::fill(d_embed.begin(), d_embed.end(), 0.0);
    affine_backward_input(d_key, k_proj_.value, d_embed);
    affine_backward_input(d_value, v_proj_.value, d_embed);
    double* item_grad = item_emb_.grad.data() + static_cast<std::size_t>(h.items[i]) * d;
    for (std::size_t c = 0; c < d; ++c) item_grad[c] += d_embed[c];
    if (cfg_.position_embeddings) {
      double* pos_grad = pos_emb_.grad.data() + h.positions[i] * d;
      for (std::size_t c = 0; c < d; ++c) pos_grad[c] += d_embed[c];
    }
  }

  accumulate_outer(t.query_embed, d_query, q_proj_.grad);
  std::vector<double> d_query_embed(d_output.begin() + a, d_output.begin() + a + d);
  affine_backward_input(d_query, q_proj_.value, d_query_embed);
  double* q_grad = item_emb_.grad.data() + static_cast<std::size_t>(t.query_item) * d;
  for (std::size_t c = 0; c < d; ++c) q_grad[c] += d_query_embed[c];
}

ParameterList AttentionEncoder::parameters() {
  ParameterList out{&item_emb_};
  if (cfg_.position_embeddings) out.push_back(&pos_emb_);
  out.push_back(&q_proj_);
  out.push_back(&k_proj_);
  out.push_back(&v_proj_);
  return out;
}

std::vector<const Parameter*> AttentionEncoder::parameters() const {
  std::vector<const Parameter*> out{&item_emb_};
  if (cfg_.position_embeddings) out.push_back(&pos_emb_);
  out.push_back(&q_proj_);
  out.push_back(&k_proj_);
  out.push_back(&v_proj_);
  return out;
}

}  // namespace mcrec::seqmodel
