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

#include "dallv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dallv/error.hpp"

namespace dallv {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNearZeroNorm: return "NearZeroNorm";
    case ErrorCode::kNonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyTemplateSubset: return "EmptyTemplateSubset";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyVideo: return "EmptyVideo";
    case ErrorCode::kDimTooSmall: return "DimTooSmall";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kPercentileOutOfRange: return "PercentileOutOfRange";
    case ErrorCode::kMisalignedBundle: return "MisalignedBundle";
    case ErrorCode::kEmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDuplicateVideoId: return "DuplicateVideoId";
    case ErrorCode::kZeroFrames: return "ZeroFrames";
    case ErrorCode::kNonUnitRow: return "NonUnitRow";
    case ErrorCode::kClassCountMismatch: return "ClassCountMismatch";
    case ErrorCode::kIdSetMismatch: return "IdSetMismatch";
    case ErrorCode::kManifestInvalid: return "ManifestInvalid";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kUnlabeledSourceVideo: return "UnlabeledSourceVideo";
    case ErrorCode::kMissingLabels: return "MissingLabels";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kUnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

bool is_valid_dist(const ProbDist& p, double tol) noexcept {
  if (p.size() == 0) return false;
  double total = 0.0;
  for (double v : p.probs) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

ProbDist uniform_dist(std::size_t classes) {
  return ProbDist(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbDist one_hot(std::size_t classes, std::size_t label) {
  if (label >= classes) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "label " + std::to_string(label) + " with " +
                    std::to_string(classes) + " classes");
  }
  std::vector<double> p(classes, 0.0);
  p[label] = 1.0;
  return ProbDist(std::move(p));
}

void require_finite(std::span<const double> v, std::string_view what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::kNonFiniteValue,
                  std::string(what) + " has a non-finite entry at index " +
                      std::to_string(i));
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch, "dot of lengths " +
                                             std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

DenseVector l2_normalize(std::span<const double> v) {
  require_finite(v, "vector");
  const double n = l2_norm(v);
  if (!(n > kMinNorm)) {
    throw Error(ErrorCode::kNearZeroNorm, "cannot normalize a vector of norm " +
                                              std::to_string(n));
  }
  DenseVector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

ProbDist softmax(std::span<const double> logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kNonPositiveTemperature,
                "temperature must be positive, got " + std::to_string(tau));
  }
  if (logits.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "softmax over zero classes");
  }
  require_finite(logits, "logits");
  const double top = logits[argmax(logits)];
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - top) / tau);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return ProbDist(std::move(p));
}

double kl_div(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "kl_div over " + std::to_string(p.size()) + " and " +
                    std::to_string(q.size()) + " classes");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] <= 0.0) continue;
    total += p[c] * (std::log(std::max(p[c], kLogClamp)) -
                     std::log(std::max(q[c], kLogClamp)));
  }
  return total;
}

double cross_entropy(const ProbDist& p, std::size_t label) {
  if (label >= p.size()) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "label " + std::to_string(label) + " with " +
                    std::to_string(p.size()) + " classes");
  }
  return -std::log(std::max(p[label], kLogClamp));
}

DenseVector finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h) {
  DenseVector probe(theta.begin(), theta.end());
  DenseVector grad(theta.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(probe);
    probe[i] = saved - h;
    const double down = f(probe);
    probe[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

DenseVector Matrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw Error(ErrorCode::kDimMismatch,
                "matrix with " + std::to_string(cols_) +
                    " columns applied to a vector of length " +
                    std::to_string(x.size()));
  }
  DenseVector y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* w = data_.data() + r * cols_;
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += w[c] * x[c];
    y[r] = s;
  }
  return y;
}

}  // namespace dallv
