#pragma once

#include <cstdint>
#include <functional>

#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::seqmodel {

struct GradCheckOptions {
  double step = 1e-3;
  std::size_t samples_per_tensor = 16;  // 0 = every element
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_parameter;
};

// Compares analytic gradients against central differences over a sampled
// subset of parameter elements.
//   loss_with_grad: zeroes gradients, returns the loss, fills gradients.
//   loss_only:      returns the loss without touching gradients.
// Relative error is |analytic - fd| / (|analytic| + |fd| + 1e-8).
GradCheckResult grad_check(const ParameterList& params,
                           const std::function<double()>& loss_with_grad,
                           const std::function<double()>& loss_only,
                           const GradCheckOptions& options = {});

}  // namespace mcrec::seqmodel
