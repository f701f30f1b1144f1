#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mcrec/uplift/surrogate.hpp"

namespace mcrec::metacontroller {

using uplift::MetaDataset;
using Simplex = std::array<double, kNumMechanisms>;

enum class RatioEstimator { PerBatch, Ema };

// Which class c⁻ marks. SecondLargest is the literal rule. BestAlternative takes
// the most likely class other than refresh; the two agree whenever refresh is
// the sample's argmax.
enum class SmoothingTarget { SecondLargest, BestAlternative };

struct SmoothingConfig {
  double epsilon = 1.0;  // max refresh invoking ratio, in (0, 1]
  double lambda = 0.0;   // smoothing strength, in [0, 1)
  RatioEstimator estimator = RatioEstimator::PerBatch;
  double ema_decay = 0.9;
  SmoothingTarget target = SmoothingTarget::SecondLargest;
  MechanismMask allowed = MechanismMask::all();  // classes c⁻ may mark

  void validate() const;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Simplex& p);

// Fraction of predictions whose argmax is refresh. Throws on empty input.
double invoking_ratio(std::span<const Simplex> predictions);

// ĉ = (1 − λ)c + λc⁻ for refresh labels when `batch_ratio` exceeds ε, where c⁻
// is chosen per cfg.target; everything else passes through. Throws
// std::invalid_argument for a label that is not one-hot.
std::vector<Simplex> smooth_labels(std::span<const Simplex> predictions, std::span<const Simplex> labels,
                                   double batch_ratio, const SmoothingConfig& cfg);
// Same, with the ratio taken from `predictions`.
std::vector<Simplex> smooth_labels(std::span<const Simplex> predictions, std::span<const Simplex> labels,
                                   const SmoothingConfig& cfg);

struct MetaModel {
  seqmodel::SequenceNet net;
  SmoothingConfig smoothing;

  Simplex predict(const datasim::HistorySnapshot& h) const;

  seqmodel::Checkpoint to_checkpoint() const;
  static MetaModel from_checkpoint(const seqmodel::Checkpoint& ckpt);
};

struct MetaParams {
  uplift::SnapshotNetParams net;
  double holdout_share = 0.2;  // tail of a seeded shuffle of D_meta kept out of training
  // After min_epochs full epochs, stop at the first batch where both the
  // batch ratio and its running estimate are within ε, provided smoothing has
  // fired at least once. Runs without smoothing use the full epoch budget.
  bool stop_under_budget = false;
  std::size_t min_epochs = 2;
};

struct MetaReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_ratio;  // mean batch invoking ratio during each epoch
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  std::size_t batches = 0;
  std::size_t smoothed_batches = 0;
  std::size_t smoothed_labels = 0;
  double holdout_ratio = 0.0;  // refresh invoking ratio on the held-out block
  std::array<double, kNumMechanisms> decision_share{};  // on the held-out block
  std::array<double, kNumMechanisms> label_share{};     // of the training block
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
};

// Cross-entropy training with budget smoothing applied per batch from the same
// forward pass that produces the loss. λ = 0 is exactly plain ERM.
MetaModel train_meta(const MetaDataset& data, const SmoothingConfig& cfg, const MetaParams& hp,
                     MetaReport* report = nullptr);

// The split train_meta uses: indices of the training and held-out blocks.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t n, double share,
                                                                            std::uint64_t seed);

struct ServingOptions {
  MechanismMask allowed = MechanismMask::all();
  bool hard_cap = false;  // reject refresh once the running ratio would pass ε
};

// argmax of f_meta(h) over the allowed mechanisms, ties to the lowest index.
Mechanism select_mechanism(const Simplex& prediction, MechanismMask allowed = MechanismMask::all());
Mechanism select_mechanism(const MetaModel& model, const datasim::HistorySnapshot& h,
                           MechanismMask allowed = MechanismMask::all());

// Decisions for a stream of snapshots. With the hard cap on, a refresh choice
// that would lift the running refresh share above ε falls back to the
// sample's best non-refresh mechanism.
std::vector<Mechanism> decide_all(const MetaModel& model, std::span<const datasim::HistorySnapshot> snaps,
                                  const ServingOptions& opt);

struct LambdaSearchResult {
  double lambda = 0.0;
  bool satisfied = true;  // false: no grid point met ε, largest λ returned
  std::vector<double> grid;
  std::vector<double> ratios;  // held-out ratio per grid point that was trained
};

// Pure selection rule over measured ratios: the smallest λ whose ratio is
// within ε; λ = 0 if the first (unconstrained) entry already is; otherwise the
// largest λ, flagged.
LambdaSearchResult select_lambda(std::span<const double> grid, std::span<const double> ratios, double epsilon);

// Trains one meta model per grid point, records each held-out ratio and
// applies select_lambda. The grid must be non-empty and ascending. The
// chosen model is returned through `chosen` when given.
LambdaSearchResult lambda_search(const MetaDataset& data, double epsilon, std::span<const double> grid,
                                 const MetaParams& hp, MetaModel* chosen = nullptr, MetaReport* chosen_report = nullptr,
                                 SmoothingConfig base = {});

void save_meta(const std::filesystem::path& path, const MetaModel& model);
MetaModel load_meta(const std::filesystem::path& path);

}  // namespace mcrec::metacontroller
