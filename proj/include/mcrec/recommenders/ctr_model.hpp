#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mcrec/datasim/types.hpp"
#include "mcrec/seqmodel/adam.hpp"
#include "mcrec/seqmodel/sequence_net.hpp"

namespace mcrec::recommenders {

using datasim::CandidateSet;
using datasim::HistorySnapshot;

// Which features a model may read. Cloud models see H_cloud and S_cloud;
// device models see H_device and S_device, with the cloud's prior score of
// the candidate written into the prior-score side slot.
enum class Schema { Cloud, Device };

const char* schema_name(Schema s);
Schema schema_from_name(const std::string& name);

struct CtrModel {
  Schema schema = Schema::Cloud;
  seqmodel::SequenceNet net;

  // Probability of a click on `candidate` given a history and side block.
  double score(std::span<const ItemId> history, ItemId candidate, std::span<const float> side) const;

  seqmodel::Checkpoint to_checkpoint() const;
  static CtrModel from_checkpoint(const seqmodel::Checkpoint& ckpt);
};

struct CtrHyperParams {
  std::size_t item_dim = 32;
  std::size_t attn_dim = 32;
  std::size_t max_len = 50;
  std::vector<std::size_t> hidden{128, 64};
  seqmodel::Activation activation = seqmodel::Activation::Tanh;
  seqmodel::OutputKind output = seqmodel::OutputKind::Logistic;
  std::size_t epochs = 4;
  std::size_t batch_size = 256;
  seqmodel::AdamConfig adam;
  std::uint64_t seed = 0;
};

// Default hyperparameters for each schema (device embeddings are 8-dim).
CtrHyperParams default_hyperparams(Schema schema);

struct CtrReport {
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
  double train_auc = 0.0;
  double train_accuracy = 0.0;
  std::size_t examples = 0;
  std::size_t skipped = 0;  // examples whose view had an empty history
};

// Supervised CTR training on labelled candidate sets. Device training needs
// the trained cloud model to fill the prior-score slot. Throws
// std::invalid_argument on an empty dataset.
CtrModel train_ctr_model(std::span<const CandidateSet> data, Schema schema, const CtrHyperParams& hp,
                         CtrReport* report = nullptr, const CtrModel* cloud_prior = nullptr);

void save_model(const std::filesystem::path& path, const CtrModel& model);
CtrModel load_model(const std::filesystem::path& path);

}  // namespace mcrec::recommenders
