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

#include "dallv/optim.hpp"

#include <cmath>
#include <string>

#include "dallv/error.hpp"

namespace dallv {

void AdamW::step(std::span<const ParamBuffer> buffers) {
  const bool first = m_.empty();
  if (!first && buffers.size() != m_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "optimizer state has " + std::to_string(m_.size()) +
                    " buffers, step given " + std::to_string(buffers.size()));
  }
  for (std::size_t b = 0; b < buffers.size(); ++b) {
    const ParamBuffer& buf = buffers[b];
    if (buf.values.size() != buf.grads.size() ||
        (!first && buf.values.size() != m_[b].size())) {
      throw Error(ErrorCode::kShapeMismatch,
                  "buffer " + std::to_string(b) + " shape changed");
    }
    for (double g : buf.grads) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNonFiniteGradient,
                    "non-finite gradient in buffer " + std::to_string(b));
      }
    }
  }
  if (first) {
    m_.resize(buffers.size());
    v_.resize(buffers.size());
    for (std::size_t b = 0; b < buffers.size(); ++b) {
      m_[b].assign(buffers[b].values.size(), 0.0);
      v_[b].assign(buffers[b].values.size(), 0.0);
    }
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);
  for (std::size_t b = 0; b < buffers.size(); ++b) {
    const ParamBuffer& buf = buffers[b];
    const double wd = buf.decay ? options_.weight_decay : 0.0;
    std::vector<double>& m = m_[b];
    std::vector<double>& v = v_[b];
    for (std::size_t i = 0; i < buf.values.size(); ++i) {
      const double g = buf.grads[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      double& theta = buf.values[i];
      theta -= options_.lr * (m_hat / (std::sqrt(v_hat) + options_.eps) + wd * theta);
    }
  }
}

}  // namespace dallv
