#include "mcrec/seqmodel/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mcrec::seqmodel {

void adam_step(Parameter& param, AdamSlot& slot, const AdamConfig& cfg) {
  const std::size_t n = param.value.size();
  if (param.grad.size() != n || slot.first.size() != n || slot.second.size() != n) {
    throw std::invalid_argument("adam_step: shape mismatch for " + param.name);
  }
  ++slot.step;
  const double t = static_cast<double>(slot.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto values = param.value.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = param.grad[i];
    slot.first[i] = cfg.beta1 * slot.first[i] + (1.0 - cfg.beta1) * g;
    slot.second[i] = cfg.beta2 * slot.second[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = slot.first[i] / c1;
    const double v_hat = slot.second[i] / c2;
    values[i] = static_cast<float>(static_cast<double>(values[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

Adam::Adam(ParameterList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  slots_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    slots_[i].first.assign(params_[i]->value.size(), 0.0);
    slots_[i].second.assign(params_[i]->value.size(), 0.0);
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(*params_[i], slots_[i], cfg_);
}

void Adam::step(const ParameterList& subset) {
  for (Parameter* p : subset) adam_step(*p, slots_[index_of(p)], cfg_);
}

std::size_t Adam::index_of(const Parameter* p) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i] == p) return i;
  }
  throw std::invalid_argument("Adam: parameter not tracked by this optimizer");
}

}  // namespace mcrec::seqmodel
