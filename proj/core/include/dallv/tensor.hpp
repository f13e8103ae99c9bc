/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Double-precision vector kernels and probability utilities shared by every
// training and inference path.

#ifndef DALLV_TENSOR_HPP_
#define DALLV_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace dallv {

using DenseVector = std::vector<double>;

// Clamp applied to probabilities before every logarithm.
inline constexpr double kLogClamp = 1e-12;
// Norms at or below this are treated as zero.
inline constexpr double kMinNorm = 1e-12;

// A categorical distribution over C classes.
struct ProbDist {
  std::vector<double> probs;

  ProbDist() = default;
  explicit ProbDist(std::vector<double> p) : probs(std::move(p)) {}

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  std::span<const double> view() const noexcept { return probs; }

  friend bool operator==(const ProbDist&, const ProbDist&) = default;
};

// True when every entry is in [0, 1] and the total is within `tol` of 1.
bool is_valid_dist(const ProbDist& p, double tol = 1e-9) noexcept;

// Uniform distribution over `classes` entries.
ProbDist uniform_dist(std::size_t classes);

// One-hot distribution at `label`.
ProbDist one_hot(std::size_t classes, std::size_t label);

// Throws kNonFiniteValue naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> v, std::string_view what);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Throws kNearZeroNorm when ||v|| <= kMinNorm.
DenseVector l2_normalize(std::span<const double> v);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> v);

// exp(z/tau) / sum exp(z'/tau), evaluated with max subtraction.
ProbDist softmax(std::span<const double> logits, double tau = 1.0);

// sum_c p_c * (ln max(p_c, eps) - ln max(q_c, eps)); zero-mass entries of p
// contribute nothing.
double kl_div(const ProbDist& p, const ProbDist& q);

// -ln max(p[label], eps).
double cross_entropy(const ProbDist& p, std::size_t label);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h in every coordinate.
DenseVector finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h = 1e-6);

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // y = M x
  DenseVector multiply(std::span<const double> x) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace dallv

#endif  // DALLV_TENSOR_HPP_
