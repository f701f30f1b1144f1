#include "mcrec/seqmodel/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace mcrec::seqmodel {

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

void init_uniform(Matrix& m, float limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-limit, limit);
  for (float& v : m.values()) v = dist(rng);
}

void init_xavier(Matrix& m, std::mt19937_64& rng) {
  const float limit = std::sqrt(6.0f / static_cast<float>(m.rows() + m.cols()));
  init_uniform(m, limit, rng);
}

void affine(std::span<const double> x, const Matrix& w, const Matrix* bias, std::span<double> out) {
  const std::size_t out_dim = w.cols();
  if (bias) {
    for (std::size_t j = 0; j < out_dim; ++j) out[j] = (*bias)(0, j);
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const auto wr = w.row(i);
    for (std::size_t j = 0; j < out_dim; ++j) out[j] += xi * wr[j];
  }
}

void affine_backward_input(std::span<const double> dout, const Matrix& w, std::span<double> dx) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < dout.size(); ++j) acc += dout[j] * wr[j];
    dx[i] += acc;
  }
}

void accumulate_outer(std::span<const double> x, std::span<const double> dout, std::vector<double>& dw) {
  const std::size_t cols = dout.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* row = dw.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += xi * dout[j];
  }
}

void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) return;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - mx);
    total += z;
  }
  for (double& z : logits) z /= total;
}

}  // namespace mcrec::seqmodel
