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

// Bottleneck adapter appended to a frozen vision encoder:
//
//   y = r * x + (1 - r) * ReLU(W2 * ReLU(W1 * x + b1) + b2)
//
// with W1: h x d, W2: d x h and h = max(1, round(d / 4)).

#ifndef DALLV_ADAPTER_HPP_
#define DALLV_ADAPTER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dallv/tensor.hpp"

namespace dallv {

// Intermediate activations of one forward pass.
struct ForwardCache {
  DenseVector input;       // x
  DenseVector hidden_pre;  // W1 x + b1
  DenseVector hidden;      // ReLU(hidden_pre)
  DenseVector output_pre;  // W2 hidden + b2
};

// Gradients in the same flat layout as Adapter::params().
struct ParamGrads {
  std::vector<double> values;
};

class Adapter {
 public:
  Adapter() = default;
  // Zero-initialized adapter.
  Adapter(std::size_t input_dim, std::size_t hidden_dim, double residual_ratio);

  static std::size_t hidden_dim_for(std::size_t input_dim) noexcept;

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  double residual_ratio() const noexcept { return residual_ratio_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  // Flat layout: W1 (row-major h x d), b1 (h), W2 (row-major d x h), b2 (d).
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  std::span<double> w1() noexcept { return slice(w1_offset(), hidden_dim_ * input_dim_); }
  std::span<double> b1() noexcept { return slice(b1_offset(), hidden_dim_); }
  std::span<double> w2() noexcept { return slice(w2_offset(), input_dim_ * hidden_dim_); }
  std::span<double> b2() noexcept { return slice(b2_offset(), input_dim_); }
  std::span<const double> w1() const noexcept { return cslice(w1_offset(), hidden_dim_ * input_dim_); }
  std::span<const double> b1() const noexcept { return cslice(b1_offset(), hidden_dim_); }
  std::span<const double> w2() const noexcept { return cslice(w2_offset(), input_dim_ * hidden_dim_); }
  std::span<const double> b2() const noexcept { return cslice(b2_offset(), input_dim_); }

  // Offsets of each block inside params().
  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept { return hidden_dim_ * input_dim_; }
  std::size_t w2_offset() const noexcept { return b1_offset() + hidden_dim_; }
  std::size_t b2_offset() const noexcept { return w2_offset() + input_dim_ * hidden_dim_; }

  DenseVector forward(std::span<const double> x) const;
  DenseVector forward(std::span<const double> x, ForwardCache& cache) const;

  // Adds d(loss)/d(params) into `param_grads` (length parameter_count()) and
  // returns d(loss)/dx. ReLU derivative at exactly 0 is taken as 0.
  DenseVector backward_accumulate(const ForwardCache& cache,
                                  std::span<const double> grad_out,
                                  std::span<double> param_grads) const;

  friend bool operator==(const Adapter&, const Adapter&) = default;

 private:
  std::span<double> slice(std::size_t off, std::size_t n) noexcept {
    return std::span<double>(params_).subspan(off, n);
  }
  std::span<const double> cslice(std::size_t off, std::size_t n) const noexcept {
    return std::span<const double>(params_).subspan(off, n);
  }

  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  double residual_ratio_ = 0.0;
  std::vector<double> params_;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero. Throws
// kDimTooSmall for d < 4 and kInvalidConfig for r outside [0, 1].
Adapter init_adapter(std::size_t input_dim, std::uint64_t seed,
                     double residual_ratio = 0.0);

struct ForwardResult {
  DenseVector output;
  ForwardCache cache;
};

ForwardResult adapter_forward(const Adapter& adapter, std::span<const double> x);

struct BackwardResult {
  ParamGrads grads;
  DenseVector grad_in;
};

BackwardResult adapter_backward(const Adapter& adapter,
                                const ForwardCache& cache,
                                std::span<const double> grad_out);

// ADP1 checkpoint: "ADP1", u32 version = 1, u32 d, u32 h, f64 residual ratio,
// then W1, b1, W2, b2 as little-endian f64.
void save_adapter(const Adapter& adapter, const std::filesystem::path& path);
Adapter load_adapter(const std::filesystem::path& path);

}  // namespace dallv

#endif  // DALLV_ADAPTER_HPP_
