#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mcrec::seqmodel {

// Row-major 32-bit dense matrix. Vectors are 1 x n matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  float& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

// A trainable tensor with its gradient accumulator. Gradients are kept in
// double so batch reductions accumulate at 64 bits.
struct Parameter {
  std::string name;
  Matrix value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows * cols, 0.0) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);

// uniform(-limit, limit) fill
void init_uniform(Matrix& m, float limit, std::mt19937_64& rng);
// Xavier/Glorot uniform over a fan_in x fan_out weight
void init_xavier(Matrix& m, std::mt19937_64& rng);

// Dense helpers over double activations. Weights are (in x out) row-major.
// out[j] = bias[j] + sum_i x[i] * w(i, j)
void affine(std::span<const double> x, const Matrix& w, const Matrix* bias, std::span<double> out);
// dx[i] += sum_j dout[j] * w(i, j)
void affine_backward_input(std::span<const double> dout, const Matrix& w, std::span<double> dx);
// dw(i, j) += x[i] * dout[j]
void accumulate_outer(std::span<const double> x, std::span<const double> dout, std::vector<double>& dw);

// Numerically stable softmax, in place.
void softmax_inplace(std::span<double> logits);

}  // namespace mcrec::seqmodel
