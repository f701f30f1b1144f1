#pragma once

#include <span>
#include <vector>

namespace mcrec::seqmodel {

inline constexpr double kProbClamp = 1e-7;

// -sum_i target_i * ln(clamp(predicted_i)), predicted clamped to
// [1e-7, 1 - 1e-7]. Throws std::invalid_argument on a length mismatch.
double cross_entropy(std::span<const double> target, std::span<const double> predicted);

// Binary form: target (1 - y, y) against (1 - p, p).
double binary_cross_entropy(double y, double p);

// Pooled ROC AUC of scores against 0/1 labels; tied scores count half.
// Returns 0.5 when either class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace mcrec::seqmodel
