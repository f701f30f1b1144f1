#include "mcrec/seqmodel/head.hpp"

#include <cmath>
#include <stdexcept>

namespace mcrec::seqmodel {

MlpHead::MlpHead(std::size_t input_dim, const HeadConfig& cfg, const std::string& prefix)
    : cfg_(cfg), input_dim_(input_dim) {
  if (input_dim == 0) throw std::invalid_argument("head input dim must be positive");
  if (cfg.output == OutputKind::Softmax && cfg.classes < 2) {
    throw std::invalid_argument("softmax head needs at least 2 classes");
  }
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.logits());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l + 1] == 0) throw std::invalid_argument("head layer dims must be positive");
    weights_.emplace_back(prefix + "w" + std::to_string(l), dims[l], dims[l + 1]);
    biases_.emplace_back(prefix + "b" + std::to_string(l), 1, dims[l + 1]);
  }
}

void MlpHead::init(std::mt19937_64& rng) {
  for (auto& w : weights_) init_xavier(w.value, rng);
  for (auto& b : biases_) std::fill(b.value.values().begin(), b.value.values().end(), 0.0f);
}

HeadTrace MlpHead::forward(std::span<const double> features) const {
  if (features.size() != input_dim_) {
    throw std::invalid_argument("head_forward: feature dim " + std::to_string(features.size()) +
                                " != " + std::to_string(input_dim_));
  }
  HeadTrace t;
  t.activations.emplace_back(features.begin(), features.end());
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> z(weights_[l].value.cols());
    affine(t.activations.back(), weights_[l].value, &biases_[l].value, z);
    if (l + 1 == layers) {
      t.logits = std::move(z);
      break;
    }
    for (double& v : z) v = cfg_.activation == Activation::Tanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
    t.activations.push_back(std::move(z));
  }
  t.probs = t.logits;
  if (cfg_.output == OutputKind::Logistic) {
    t.probs[0] = 1.0 / (1.0 + std::exp(-t.logits[0]));
  } else {
    softmax_inplace(t.probs);
  }
  return t;
}

std::vector<double> MlpHead::backward(const HeadTrace& t, std::span<const double> d_logits) {
  std::vector<double> delta(d_logits.begin(), d_logits.end());
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const auto& input = t.activations[l];
    accumulate_outer(input, delta, weights_[l].grad);
    for (std::size_t j = 0; j < delta.size(); ++j) biases_[l].grad[j] += delta[j];
    std::vector<double> d_input(input.size(), 0.0);
    affine_backward_input(delta, weights_[l].value, d_input);
    if (l > 0) {
      // input is the activated output of layer l-1
      for (std::size_t i = 0; i < d_input.size(); ++i) {
        const double a = input[i];
        d_input[i] *= cfg_.activation == Activation::Tanh ? (1.0 - a * a) : (a > 0.0 ? 1.0 : 0.0);
      }
    }
    delta = std::move(d_input);
  }
  return delta;
}

ParameterList MlpHead::parameters() {
  ParameterList out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Parameter*> MlpHead::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

double click_probability(const HeadTrace& trace, OutputKind kind) {
  return kind == OutputKind::Logistic ? trace.probs[0] : trace.probs[1];
}

std::vector<double> binary_logit_grad(const HeadTrace& trace, OutputKind kind, double y) {
  if (kind == OutputKind::Logistic) return {trace.probs[0] - y};
  if (trace.probs.size() != 2) throw std::invalid_argument("binary outcome needs a 2-way head");
  return {trace.probs[0] - (1.0 - y), trace.probs[1] - y};
}

std::vector<double> softmax_logit_grad(const HeadTrace& trace, std::span<const double> target) {
  if (target.size() != trace.probs.size()) {
    throw std::invalid_argument("target size does not match head output");
  }
  std::vector<double> g(target.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = trace.probs[i] - target[i];
  return g;
}

}  // namespace mcrec::seqmodel
