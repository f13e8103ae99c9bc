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

#include "dallv/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "dallv/error.hpp"
#include "dallv/random.hpp"

namespace dallv {

namespace {

constexpr std::string_view kAdapterMagic = "ADP1";
constexpr std::uint32_t kAdapterVersion = 1;

void check_ratio(double r) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "residual ratio must be in [0, 1], got " + std::to_string(r));
  }
}

}  // namespace

Adapter::Adapter(std::size_t input_dim, std::size_t hidden_dim,
                 double residual_ratio)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      residual_ratio_(residual_ratio),
      params_(2 * input_dim * hidden_dim + hidden_dim + input_dim, 0.0) {
  check_ratio(residual_ratio);
  if (hidden_dim == 0 || input_dim == 0) {
    throw Error(ErrorCode::kDimTooSmall, "adapter dimensions must be positive");
  }
}

std::size_t Adapter::hidden_dim_for(std::size_t input_dim) noexcept {
  const auto h = static_cast<std::size_t>(
      std::lround(static_cast<double>(input_dim) / 4.0));
  return std::max<std::size_t>(1, h);
}

DenseVector Adapter::forward(std::span<const double> x) const {
  ForwardCache scratch;
  return forward(x, scratch);
}

DenseVector Adapter::forward(std::span<const double> x,
                             ForwardCache& cache) const {
  if (x.size() != input_dim_) {
    throw Error(ErrorCode::kDimMismatch,
                "adapter of dim " + std::to_string(input_dim_) +
                    " applied to input of dim " + std::to_string(x.size()));
  }
  const std::size_t d = input_dim_;
  const std::size_t h = hidden_dim_;
  const double* w1p = params_.data() + w1_offset();
  const double* b1p = params_.data() + b1_offset();
  const double* w2p = params_.data() + w2_offset();
  const double* b2p = params_.data() + b2_offset();

  cache.input.assign(x.begin(), x.end());
  cache.hidden_pre.resize(h);
  cache.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    double s = b1p[j];
    const double* row = w1p + j * d;
    for (std::size_t i = 0; i < d; ++i) s += row[i] * x[i];
    cache.hidden_pre[j] = s;
    cache.hidden[j] = s > 0.0 ? s : 0.0;
  }
  cache.output_pre.resize(d);
  DenseVector y(d);
  const double r = residual_ratio_;
  for (std::size_t i = 0; i < d; ++i) {
    double s = b2p[i];
    const double* row = w2p + i * h;
    for (std::size_t j = 0; j < h; ++j) s += row[j] * cache.hidden[j];
    cache.output_pre[i] = s;
    y[i] = r * x[i] + (1.0 - r) * (s > 0.0 ? s : 0.0);
  }
  return y;
}

DenseVector Adapter::backward_accumulate(const ForwardCache& cache,
                                         std::span<const double> grad_out,
                                         std::span<double> param_grads) const {
  const std::size_t d = input_dim_;
  const std::size_t h = hidden_dim_;
  if (cache.input.size() != d || cache.hidden_pre.size() != h ||
      cache.hidden.size() != h || cache.output_pre.size() != d) {
    throw Error(ErrorCode::kStaleCache,
                "forward cache does not match an adapter of dims " +
                    std::to_string(d) + "x" + std::to_string(h));
  }
  if (grad_out.size() != d) {
    throw Error(ErrorCode::kDimMismatch, "grad_out length " +
                                             std::to_string(grad_out.size()) +
                                             ", expected " + std::to_string(d));
  }
  if (param_grads.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter gradient buffer has length " +
                                               std::to_string(param_grads.size()));
  }
  const double r = residual_ratio_;
  const double* w1p = params_.data() + w1_offset();
  const double* w2p = params_.data() + w2_offset();
  double* gw1 = param_grads.data() + w1_offset();
  double* gb1 = param_grads.data() + b1_offset();
  double* gw2 = param_grads.data() + w2_offset();
  double* gb2 = param_grads.data() + b2_offset();

  DenseVector grad_in(d);
  DenseVector g_hidden(h, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    grad_in[i] = r * grad_out[i];
    const double g = cache.output_pre[i] > 0.0 ? (1.0 - r) * grad_out[i] : 0.0;
    if (g == 0.0) continue;
    gb2[i] += g;
    double* grow = gw2 + i * h;
    const double* wrow = w2p + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      grow[j] += g * cache.hidden[j];
      g_hidden[j] += g * wrow[j];
    }
  }
  for (std::size_t j = 0; j < h; ++j) {
    const double g = cache.hidden_pre[j] > 0.0 ? g_hidden[j] : 0.0;
    if (g == 0.0) continue;
    gb1[j] += g;
    double* grow = gw1 + j * d;
    const double* wrow = w1p + j * d;
    for (std::size_t i = 0; i < d; ++i) {
      grow[i] += g * cache.input[i];
      grad_in[i] += g * wrow[i];
    }
  }
  return grad_in;
}

Adapter init_adapter(std::size_t input_dim, std::uint64_t seed,
                     double residual_ratio) {
  if (input_dim < 4) {
    throw Error(ErrorCode::kDimTooSmall,
                "adapter input dim must be at least 4, got " +
                    std::to_string(input_dim));
  }
  check_ratio(residual_ratio);
  Adapter a(input_dim, Adapter::hidden_dim_for(input_dim), residual_ratio);
  CounterRng rng = CounterRng::stream(seed, "adapter-init");
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(a.input_dim()));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(a.hidden_dim()));
  for (double& w : a.w1()) w = rng.uniform(-bound1, bound1);
  for (double& w : a.w2()) w = rng.uniform(-bound2, bound2);
  return a;
}

ForwardResult adapter_forward(const Adapter& adapter, std::span<const double> x) {
  ForwardResult out;
  out.output = adapter.forward(x, out.cache);
  return out;
}

BackwardResult adapter_backward(const Adapter& adapter,
                                const ForwardCache& cache,
                                std::span<const double> grad_out) {
  BackwardResult out;
  out.grads.values.assign(adapter.parameter_count(), 0.0);
  out.grad_in = adapter.backward_accumulate(cache, grad_out, out.grads.values);
  return out;
}

void save_adapter(const Adapter& adapter, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_bytes(kAdapterMagic);
  w.put_u32(kAdapterVersion);
  w.put_u32(static_cast<std::uint32_t>(adapter.input_dim()));
  w.put_u32(static_cast<std::uint32_t>(adapter.hidden_dim()));
  w.put_f64(adapter.residual_ratio());
  for (double v : adapter.params()) w.put_f64(v);
  detail::write_file_atomic(path, w.bytes());
}

Adapter load_adapter(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_header(kAdapterMagic, kAdapterVersion);
  const std::uint32_t d = r.get_u32();
  const std::uint32_t h = r.get_u32();
  const double ratio = r.get_f64();
  if (d == 0 || h == 0) {
    throw Error(ErrorCode::kDimTooSmall, path.string() + ": zero adapter dims");
  }
  Adapter a(d, h, ratio);
  for (double& v : a.params()) v = r.get_f64();
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                path.string() + ": " + std::to_string(r.remaining()) +
                    " trailing bytes");
  }
  require_finite(a.params(), path.string());
  return a;
}

}  // namespace dallv
