#pragma once

#include <cstdint>
#include <vector>

#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::seqmodel {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments for one parameter tensor. The step counter is per tensor so heads
// that skip batches still get the right bias correction.
struct AdamSlot {
  std::vector<double> first;
  std::vector<double> second;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of `param` from its accumulated gradient.
// Throws std::invalid_argument when the slot shape does not mirror the param.
void adam_step(Parameter& param, AdamSlot& slot, const AdamConfig& cfg);

class Adam {
 public:
  Adam(ParameterList params, AdamConfig cfg);

  const AdamConfig& config() const { return cfg_; }

  // Updates every tracked parameter.
  void step();
  // Updates only the given subset; untouched tensors keep params and moments.
  void step(const ParameterList& subset);

  const AdamSlot& slot(std::size_t i) const { return slots_.at(i); }

 private:
  std::size_t index_of(const Parameter* p) const;

  ParameterList params_;
  std::vector<AdamSlot> slots_;
  AdamConfig cfg_;
};

}  // namespace mcrec::seqmodel
