#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcrec/common.hpp"
#include "mcrec/seqmodel/checkpoint.hpp"
#include "mcrec/seqmodel/encoder.hpp"
#include "mcrec/seqmodel/head.hpp"

namespace mcrec::seqmodel {

// Candidate: the scored item is the attention query (CTR models).
// LastItem: the most recent history item is the query (snapshot-level models
// such as the uplift surrogates and the meta controller).
enum class QueryMode { Candidate, LastItem };

struct NetConfig {
  EncoderConfig encoder;
  QueryMode query = QueryMode::Candidate;
  std::size_t side_dim = 8;
  std::vector<HeadConfig> heads{HeadConfig{}};
};

struct NetInput {
  std::span<const ItemId> history;  // oldest first; only the last max_len are read
  ItemId candidate = 0;             // ignored in LastItem mode
  std::span<const float> side;      // size side_dim
};

struct NetTrace {
  HistoryCache history;
  EncoderTrace encoder;
  HeadTrace head;
  std::size_t head_index = 0;
};

// Shared encoder feeding one or more MLP heads:
//   features = [attention pooled, query embedding, side features]
class SequenceNet {
 public:
  SequenceNet() = default;
  explicit SequenceNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return encoder_.output_dim() + cfg_.side_dim; }
  std::size_t num_heads() const { return heads_.size(); }

  void init(std::uint64_t seed);

  NetTrace forward(const NetInput& input, std::size_t head) const;
  std::vector<double> predict(const NetInput& input, std::size_t head) const;

  // Scoring many candidates against one history without re-projecting it.
  HistoryCache encode_history(std::span<const ItemId> history) const;
  HeadTrace forward_cached(const HistoryCache& history, ItemId query, std::span<const float> side,
                           std::size_t head) const;

  void backward(const NetTrace& trace, std::span<const double> d_logits);

  ParameterList parameters();
  ParameterList encoder_parameters();
  ParameterList head_parameters(std::size_t head);

  AttentionEncoder& encoder() { return encoder_; }
  const AttentionEncoder& encoder() const { return encoder_; }
  MlpHead& head(std::size_t i) { return heads_.at(i); }
  const MlpHead& head(std::size_t i) const { return heads_.at(i); }

  Checkpoint to_checkpoint() const;
  static SequenceNet from_checkpoint(const Checkpoint& ckpt);

 private:
  std::span<const ItemId> visible(std::span<const ItemId> history) const;
  std::vector<double> features(const EncoderTrace& enc, std::span<const float> side) const;

  NetConfig cfg_;
  AttentionEncoder encoder_;
  std::vector<MlpHead> heads_;
};

std::string net_config_to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const std::string& text);

}  // namespace mcrec::seqmodel
