#include "mcrec/seqmodel/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mcrec::seqmodel {

GradCheckResult grad_check(const ParameterList& params,
                           const std::function<double()>& loss_with_grad,
                           const std::function<double()>& loss_only,
                           const GradCheckOptions& options) {
  loss_with_grad();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Parameter& p = *params[t];
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.samples_per_tensor > 0 && idx.size() > options.samples_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.samples_per_tensor);
    }
    auto values = p.value.values();
    for (std::size_t i : idx) {
      const float original = values[i];
      // the realised perturbation differs from `step` by float rounding
      const float up = static_cast<float>(original + options.step);
      const float down = static_cast<float>(original - options.step);
      values[i] = up;
      const double loss_up = loss_only();
      values[i] = down;
      const double loss_down = loss_only();
      values[i] = original;
      const double fd = (loss_up - loss_down) / (static_cast<double>(up) - static_cast<double>(down));
      const double an = analytic[t][i];
      const double rel = std::abs(an - fd) / (std::abs(an) + std::abs(fd) + 1e-8);
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace mcrec::seqmodel
