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

#ifndef DALLV_OPTIM_HPP_
#define DALLV_OPTIM_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace dallv {

struct AdamWOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.2;
};

// One parameter tensor and its gradient. Buffers with decay = false skip the
// weight-decay term.
struct ParamBuffer {
  std::span<double> values;
  std::span<const double> grads;
  bool decay = true;
};

// Adam with decoupled weight decay:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
// Moment buffers are sized on the first step and must keep their shapes.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(AdamWOptions options) : options_(options) {}

  // Throws kShapeMismatch or kNonFiniteGradient; on error nothing is updated.
  void step(std::span<const ParamBuffer> buffers);

  std::size_t step_count() const noexcept { return step_count_; }
  const AdamWOptions& options() const noexcept { return options_; }
  const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

 private:
  AdamWOptions options_;
  std::size_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace dallv

#endif  // DALLV_OPTIM_HPP_
