#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcrec/common.hpp"
#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::seqmodel {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t item_dim = 32;
  std::size_t attn_dim = 32;
  std::size_t max_len = 50;
  bool position_embeddings = true;
};

// Projected history. Keys and values do not depend on the query, so one
// cache serves every candidate scored against the same history.
struct HistoryCache {
  std::vector<ItemId> items;
  std::vector<std::size_t> positions;  // 0 = most recent
  std::vector<double> embeds;          // n x item_dim
  std::vector<double> keys;            // n x attn_dim
  std::vector<double> values;          // n x attn_dim

  std::size_t length() const { return items.size(); }
};

// Everything backward needs for one (history, query) pair.
struct EncoderTrace {
  ItemId query_item = 0;
  std::vector<double> query_embed;  // item_dim
  std::vector<double> query;        // attn_dim
  std::vector<double> weights;      // n, softmax(q.k / sqrt(attn_dim))
  std::vector<double> output;       // [pooled (attn_dim), query_embed (item_dim)]
};

// DIN-style target attention: the query item attends over the history and the
// pooled value vector is concatenated with the query item's embedding.
class AttentionEncoder {
 public:
  AttentionEncoder() = default;
  AttentionEncoder(const EncoderConfig& cfg, const std::string& prefix);

  const EncoderConfig& config() const { return cfg_; }
  std::size_t output_dim() const { return cfg_.attn_dim + cfg_.item_dim; }

  void init(std::mt19937_64& rng);

  // Throws std::invalid_argument on an empty history, a history longer than
  // max_len, or an out-of-vocabulary id.
  HistoryCache encode_history(std::span<const ItemId> history) const;
  EncoderTrace attend(const HistoryCache& history, ItemId query_item) const;

  // Accumulates parameter gradients given d(loss)/d(output).
  void backward(const HistoryCache& history, const EncoderTrace& trace,
                std::span<const double> d_output);

  ParameterList parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter& item_embedding() { return item_emb_; }
  Parameter& position_embedding() { return pos_emb_; }
  Parameter& query_projection() { return q_proj_; }
  Parameter& key_projection() { return k_proj_; }
  Parameter& value_projection() { return v_proj_; }
  const Parameter& item_embedding() const { return item_emb_; }
  const Parameter& position_embedding() const { return pos_emb_; }
  const Parameter& query_projection() const { return q_proj_; }
  const Parameter& key_projection() const { return k_proj_; }
  const Parameter& value_projection() const { return v_proj_; }

 private:
  void check_id(ItemId id) const;

  EncoderConfig cfg_;
  Parameter item_emb_;
  Parameter pos_emb_;
  Parameter q_proj_;
  Parameter k_proj_;
  Parameter v_proj_;
};

}  // namespace mcrec::seqmodel
