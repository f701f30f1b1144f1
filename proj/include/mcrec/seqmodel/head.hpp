#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::seqmodel {

enum class Activation { Tanh, Relu };

// Logistic: one logit, sigmoid output (scalar click probability).
// Softmax: `classes` logits, probability simplex output.
enum class OutputKind { Logistic, Softmax };

struct HeadConfig {
  std::vector<std::size_t> hidden{128, 64};
  Activation activation = Activation::Tanh;
  OutputKind output = OutputKind::Logistic;
  std::size_t classes = 1;

  std::size_t logits() const { return output == OutputKind::Logistic ? 1 : classes; }
};

struct HeadTrace {
  std::vector<std::vector<double>> activations;  // [input, hidden_1, ..., hidden_k]
  std::vector<double> logits;
  std::vector<double> probs;  // logistic: {p}; softmax: simplex
};

class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(std::size_t input_dim, const HeadConfig& cfg, const std::string& prefix);

  const HeadConfig& config() const { return cfg_; }
  std::size_t input_dim() const { return input_dim_; }

  void init(std::mt19937_64& rng);

  // Throws std::invalid_argument when features.size() != input_dim().
  HeadTrace forward(std::span<const double> features) const;

  // Backpropagates d(loss)/d(logits); accumulates weight gradients and returns
  // d(loss)/d(features).
  std::vector<double> backward(const HeadTrace& trace, std::span<const double> d_logits);

  ParameterList parameters();
  std::vector<const Parameter*> parameters() const;

  std::vector<Parameter>& weights() { return weights_; }
  std::vector<Parameter>& biases() { return biases_; }

 private:
  HeadConfig cfg_;
  std::size_t input_dim_ = 0;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

// Probability of a click from an outcome head's output: p for a logistic
// head, the positive-class mass for a 2-way softmax head.
double click_probability(const HeadTrace& trace, OutputKind kind);

// d(cross-entropy)/d(logits) for a binary outcome y in [0, 1].
std::vector<double> binary_logit_grad(const HeadTrace& trace, OutputKind kind, double y);

// d(cross-entropy)/d(logits) for a softmax head against a target distribution.
std::vector<double> softmax_logit_grad(const HeadTrace& trace, std::span<const double> target);

}  // namespace mcrec::seqmodel
