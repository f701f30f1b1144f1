#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mcrec/datasim/types.hpp"
#include "mcrec/seqmodel/adam.hpp"
#include "mcrec/seqmodel/sequence_net.hpp"

namespace mcrec::uplift {

using datasim::HistorySnapshot;
using datasim::TreatmentDataset;

// Hyperparameters of snapshot-level nets (surrogates and the meta model).
struct SnapshotNetParams {
  std::size_t vocab_size = 0;  // 0: infer from the training data
  std::size_t item_dim = 32;
  std::size_t attn_dim = 32;
  std::size_t max_len = 50;
  std::vector<std::size_t> hidden{128, 64};
  seqmodel::Activation activation = seqmodel::Activation::Tanh;
  std::size_t epochs = 4;
  std::size_t batch_size = 256;
  seqmodel::AdamConfig adam;
  std::uint64_t seed = 0;
  // Optional starting point for the item embedding table (vocab x item_dim),
  // copied in after random init. Empty means random init only.
  seqmodel::Matrix warm_item_embedding;
};

// Net over the device view (H_device, S_device) with the most recent item as
// the attention query.
seqmodel::SequenceNet make_snapshot_net(const SnapshotNetParams& hp, std::size_t vocab,
                                        std::vector<seqmodel::HeadConfig> heads);

// Seeds init, then applies hp.warm_item_embedding. Throws std::invalid_argument
// when the warm table does not match the net's embedding shape.
void init_snapshot_net(seqmodel::SequenceNet& net, const SnapshotNetParams& hp, const std::string& stream);

// Shared encoder plus g_base (head 0), g_uplift1 (head 1), g_uplift2 (head 2).
struct SurrogateModel {
  seqmodel::SequenceNet net;
  MechanismMask trained = MechanismMask::all();

  // g_t(h) for every head.
  std::array<double, kNumMechanisms> outcomes(const HistorySnapshot& h) const;

  seqmodel::Checkpoint to_checkpoint() const;
  static SurrogateModel from_checkpoint(const seqmodel::Checkpoint& ckpt);
};

struct SurrogateReport {
  std::array<std::vector<double>, kNumMechanisms> head_loss;  // mean loss per epoch, per head
  std::array<std::size_t, kNumMechanisms> samples{};
  std::size_t batches = 0;
};

// Fits the three outcome objectives. Batches are homogeneous in t and visited
// round-robin (0, 1, 2, 0, ...); a batch updates the shared encoder and its
// own head only. Mechanisms outside `mask` are neither required nor trained.
// Throws std::invalid_argument when a required dataset is empty.
SurrogateModel train_surrogates(const TreatmentDataset& d0, const TreatmentDataset& d1, const TreatmentDataset& d2,
                                const SnapshotNetParams& hp, SurrogateReport* report = nullptr,
                                MechanismMask mask = MechanismMask::all());

struct CateEstimate {
  std::array<double, kNumMechanisms> tau{};  // tau[0] == 0 exactly
};

CateEstimate cate_from_outcomes(const std::array<double, kNumMechanisms>& g);
CateEstimate estimate_cate(const SurrogateModel& model, const HistorySnapshot& h);

// IND: the mechanism with the largest CATE among those in `mask`; ties go to
// the lowest index.
Mechanism best_mechanism(const CateEstimate& cate, MechanismMask mask = MechanismMask::all());

struct CounterfactualSample {
  HistorySnapshot snapshot;
  Mechanism label = Mechanism::Cloud;

  std::array<double, kNumMechanisms> one_hot() const;
  bool operator==(const CounterfactualSample&) const = default;
};

using MetaDataset = std::vector<CounterfactualSample>;

// Relabels every snapshot of D_0 ∪ D_1 ∪ D_2 (in that order) by IND over the
// estimated CATEs; outcomes and treatment tags are dropped.
MetaDataset build_meta_dataset(const SurrogateModel& model, const TreatmentDataset& d0, const TreatmentDataset& d1,
                               const TreatmentDataset& d2, MechanismMask mask = MechanismMask::all());

// `snapshot-json \t label-index` per line.
void write_meta_dataset(const std::filesystem::path& path, const MetaDataset& data);
MetaDataset read_meta_dataset(const std::filesystem::path& path);

void save_surrogates(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_surrogates(const std::filesystem::path& path);

}  // namespace mcrec::uplift
