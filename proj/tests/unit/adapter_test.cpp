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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dallv/adapter.hpp"
#include "expect_error.hpp"
#include "test_support.hpp"

namespace dallv {
namespace {

using testing::gaussian_vector;

// Independent forward: plain loops over the documented layout.
DenseVector reference_forward(const Adapter& a, const DenseVector& x) {
  const std::size_t d = a.input_dim(), h = a.hidden_dim();
  const auto p = a.params();
  std::vector<double> hid(h);
  for (std::size_t j = 0; j < h; ++j) {
    double s = p[h * d + j];
    for (std::size_t i = 0; i < d; ++i) s += p[j * d + i] * x[i];
    hid[j] = s > 0.0 ? s : 0.0;
  }
  DenseVector y(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = p[h * d + h + d * h + i];
    for (std::size_t j = 0; j < h; ++j) s += p[h * d + h + i * h + j] * hid[j];
    const double r = a.residual_ratio();
    y[i] = r * x[i] + (1.0 - r) * (s > 0.0 ? s : 0.0);
  }
  return y;
}

// Adapter with biases perturbed so both ReLUs see mixed signs.
Adapter random_adapter(CounterRng& rng, std::size_t d, double r) {
  Adapter a = init_adapter(d, rng.next_u64(), r);
  for (double& b : a.b1()) b = 0.3 * rng.normal();
  for (double& b : a.b2()) b = 0.3 * rng.normal();
  return a;
}

TEST(AdapterInit, HiddenWidth) {
  EXPECT_EQ(init_adapter(8, 0).hidden_dim(), 2u);
  EXPECT_EQ(init_adapter(512, 0).hidden_dim(), 128u);
  EXPECT_EQ(Adapter::hidden_dim_for(64), 16u);
  EXPECT_EQ(Adapter::hidden_dim_for(2), 1u);
}

TEST(AdapterInit, ParameterCount) {
  const Adapter a = init_adapter(512, 0);
  EXPECT_EQ(a.parameter_count(), 128u * 512u + 128u + 512u * 128u + 512u);
  EXPECT_EQ(a.parameter_count(), 131712u);
}

TEST(AdapterInit, DeterministicPerSeed) {
  EXPECT_EQ(init_adapter(32, 17), init_adapter(32, 17));
  EXPECT_NE(init_adapter(32, 17), init_adapter(32, 18));
}

TEST(AdapterInit, BoundsAndZeroBiases) {
  const Adapter a = init_adapter(64, 3);
  const double b1 = 1.0 / std::sqrt(64.0), b2 = 1.0 / std::sqrt(16.0);
  for (double w : a.w1()) EXPECT_LE(std::abs(w), b1);
  for (double w : a.w2()) EXPECT_LE(std::abs(w), b2);
  for (double b : a.b1()) EXPECT_EQ(b, 0.0);
  for (double b : a.b2()) EXPECT_EQ(b, 0.0);
}

TEST(AdapterInit, Errors) {
  EXPECT_DALLV_ERROR(init_adapter(3, 0), ErrorCode::kDimTooSmall);
  EXPECT_DALLV_ERROR(init_adapter(8, 0, 1.5), ErrorCode::kInvalidConfig);
}

TEST(AdapterForward, PureResidual) {
  CounterRng rng(1);
  const Adapter a = random_adapter(rng, 12, 1.0);
  const DenseVector x = gaussian_vector(rng, 12);
  EXPECT_EQ(a.forward(x), x);
}

TEST(AdapterForward, ZeroWeightsGiveReluOfBias) {
  Adapter a(6, 2, 0.0);
  const std::vector<double> b2{0.5, -1.0, 0.0, 2.0, -0.1, 0.3};
  std::copy(b2.begin(), b2.end(), a.b2().begin());
  const DenseVector y = a.forward(std::vector<double>{1, 2, 3, 4, 5, 6});
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(y[i], std::max(0.0, b2[i]));
}

TEST(AdapterForward, MatchesReference) {
  CounterRng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 4 + rng.below(20);
    const double r = trial % 2 ? 0.0 : rng.uniform();
    const Adapter a = random_adapter(rng, d, r);
    const DenseVector x = gaussian_vector(rng, d);
    const DenseVector ref = reference_forward(a, x);
    const ForwardResult got = adapter_forward(a, x);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(got.output[i], ref[i], 1e-12);
  }
}

TEST(AdapterForward, DimMismatch) {
  const Adapter a = init_adapter(8, 0);
  EXPECT_DALLV_ERROR(a.forward(std::vector<double>(7, 1.0)), ErrorCode::kDimMismatch);
}

TEST(AdapterBackward, ZeroUpstream) {
  CounterRng rng(3);
  const Adapter a = random_adapter(rng, 10, 0.0);
  const ForwardResult fwd = adapter_forward(a, gaussian_vector(rng, 10));
  const BackwardResult back = adapter_backward(a, fwd.cache, DenseVector(10, 0.0));
  for (double g : back.grads.values) EXPECT_EQ(g, 0.0);
  for (double g : back.grad_in) EXPECT_EQ(g, 0.0);
}

TEST(AdapterBackward, PureResidualPassesThrough) {
  CounterRng rng(4);
  const Adapter a = random_adapter(rng, 10, 1.0);
  const ForwardResult fwd = adapter_forward(a, gaussian_vector(rng, 10));
  const DenseVector up = gaussian_vector(rng, 10);
  const BackwardResult back = adapter_backward(a, fwd.cache, up);
  EXPECT_EQ(back.grad_in, up);
  for (double g : back.grads.values) EXPECT_EQ(g, 0.0);
}

TEST(AdapterBackward, FiniteDifferences) {
  CounterRng rng(5);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t d = 4 + rng.below(9);
    const double r = trial % 3 == 0 ? 0.0 : rng.uniform();
    Adapter a = random_adapter(rng, d, r);
    const DenseVector x = gaussian_vector(rng, d);
    const DenseVector up = gaussian_vector(rng, d);
    const ForwardResult fwd = adapter_forward(a, x);
    const BackwardResult back = adapter_backward(a, fwd.cache, up);

    const std::vector<double> theta(a.params().begin(), a.params().end());
    const DenseVector num_params = finite_diff_grad(
        [&](std::span<const double> t) {
          Adapter b = a;
          std::copy(t.begin(), t.end(), b.params().begin());
          return dot(b.forward(x), up);
        },
        theta);
    const DenseVector num_x = finite_diff_grad(
        [&](std::span<const double> t) { return dot(a.forward(t), up); }, x);
    ASSERT_LT(testing::max_rel_err(back.grads.values, num_params), 1e-5) << trial;
    ASSERT_LT(testing::max_rel_err(back.grad_in, num_x), 1e-5) << trial;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(AdapterBackward, Accumulates) {
  CounterRng rng(6);
  const Adapter a = random_adapter(rng, 8, 0.0);
  const ForwardResult fwd = adapter_forward(a, gaussian_vector(rng, 8));
  const DenseVector up = gaussian_vector(rng, 8);
  std::vector<double> grads(a.parameter_count(), 0.0);
  a.backward_accumulate(fwd.cache, up, grads);
  a.backward_accumulate(fwd.cache, up, grads);
  const BackwardResult once = adapter_backward(a, fwd.cache, up);
  for (std::size_t i = 0; i < grads.size(); ++i) EXPECT_NEAR(grads[i], 2.0 * once.grads.values[i], 1e-15);
}

TEST(AdapterBackward, StaleCache) {
  CounterRng rng(7);
  const Adapter small = random_adapter(rng, 8, 0.0);
  const Adapter big = random_adapter(rng, 12, 0.0);
  const ForwardResult fwd = adapter_forward(small, gaussian_vector(rng, 8));
  EXPECT_DALLV_ERROR(adapter_backward(big, fwd.cache, DenseVector(12, 1.0)),
                     ErrorCode::kStaleCache);
  std::vector<double> short_buffer(3);
  EXPECT_DALLV_ERROR(small.backward_accumulate(fwd.cache, DenseVector(8, 1.0), short_buffer),
                     ErrorCode::kShapeMismatch);
}

TEST(AdapterCheckpoint, RoundTripIsBitwise) {
  testing::TempDir dir("adp");
  CounterRng rng(8);
  const Adapter a = random_adapter(rng, 20, 0.25);
  save_adapter(a, dir / "a.adp");
  const Adapter b = load_adapter(dir / "a.adp");
  EXPECT_EQ(a, b);
  save_adapter(b, dir / "b.adp");
  EXPECT_EQ(testing::slurp(dir / "a.adp"), testing::slurp(dir / "b.adp"));
}

TEST(AdapterCheckpoint, CorruptFiles) {
  testing::TempDir dir("adp_bad");
  save_adapter(init_adapter(8, 1), dir / "a.adp");
  const std::string bytes = testing::slurp(dir / "a.adp");
  EXPECT_EQ(bytes.substr(0, 4), "ADP1");

  std::string bad = bytes;
  bad[0] = 'X';
  testing::spit(dir / "magic.adp", bad);
  EXPECT_DALLV_ERROR(load_adapter(dir / "magic.adp"), ErrorCode::kBadMagic);

  bad = bytes;
  bad[4] = 9;
  testing::spit(dir / "version.adp", bad);
  EXPECT_DALLV_ERROR(load_adapter(dir / "version.adp"), ErrorCode::kBadVersion);

  testing::spit(dir / "short.adp", bytes.substr(0, bytes.size() - 5));
  EXPECT_DALLV_ERROR(load_adapter(dir / "short.adp"), ErrorCode::kTruncatedFile);

  EXPECT_DALLV_ERROR(load_adapter(dir / "missing.adp"), ErrorCode::kIo);
}

}  // namespace
}  // namespace dallv
