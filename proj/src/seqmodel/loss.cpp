#include "mcrec/seqmodel/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcrec::seqmodel {

double cross_entropy(std::span<const double> target, std::span<const double> predicted) {
  if (target.size() != predicted.size()) {
    throw std::invalid_argument("cross_entropy: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 0.0) continue;
    const double p = std::clamp(predicted[i], kProbClamp, 1.0 - kProbClamp);
    loss -= target[i] * std::log(p);
  }
  return loss;
}

double binary_cross_entropy(double y, double p) {
  const double t[2] = {1.0 - y, y};
  const double q[2] = {1.0 - p, p};
  return cross_entropy(t, q);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j + 1);  // 1-based average rank of the block
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos += 1.0;
        rank_sum += mid;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return 0.5;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace mcrec::seqmodel
