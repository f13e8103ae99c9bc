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

#include "dallv/clipspace.hpp"

#include <cmath>
#include <string>

#include "dallv/error.hpp"

namespace dallv {

void TextBank::validate() const {
  if (classes() < 2) {
    throw Error(ErrorCode::kInvalidConfig, "text bank needs at least 2 classes");
  }
  if (template_count() < 1) {
    throw Error(ErrorCode::kInvalidConfig, "text bank needs at least 1 template");
  }
  if (dim == 0 || embeddings.size() != classes() * template_count() * dim) {
    throw Error(ErrorCode::kInvalidConfig, "text bank payload has " +
                                               std::to_string(embeddings.size()) +
                                               " values, expected C*T*d");
  }
  if (!(logit_temperature > 0.0) || !std::isfinite(logit_temperature)) {
    throw Error(ErrorCode::kNonPositiveTemperature,
                "text bank logit temperature must be positive");
  }
  require_finite(embeddings, "text bank");
  for (std::size_t c = 0; c < classes(); ++c) {
    for (std::size_t t = 0; t < template_count(); ++t) {
      const double n = l2_norm(row(c, t));
      if (std::abs(n - 1.0) > 1e-3) {
        throw Error(ErrorCode::kNonUnitRow,
                    "text row (class " + std::to_string(c) + ", template " +
                        std::to_string(t) + ") has norm " + std::to_string(n));
      }
    }
  }
}

ClassPrototypes build_prototypes(
    const TextBank& bank,
    const std::optional<std::vector<std::size_t>>& template_subset,
    double tau_sim) {
  if (!(tau_sim > 0.0)) {
    throw Error(ErrorCode::kNonPositiveTemperature,
                "tau_sim must be positive, got " + std::to_string(tau_sim));
  }
  std::vector<std::size_t> selected;
  if (template_subset) {
    selected = *template_subset;
  } else {
    for (std::size_t t = 0; t < bank.template_count(); ++t) selected.push_back(t);
  }
  if (selected.empty()) {
    throw Error(ErrorCode::kEmptyTemplateSubset, "no templates selected");
  }
  for (std::size_t t : selected) {
    if (t >= bank.template_count()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "template index " + std::to_string(t) + " with " +
                      std::to_string(bank.template_count()) + " templates");
    }
  }

  ClassPrototypes out;
  out.dim = bank.dim;
  out.tau_sim = tau_sim;
  out.prototypes = Matrix(bank.classes(), bank.dim);
  DenseVector mean(bank.dim);
  for (std::size_t c = 0; c < bank.classes(); ++c) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t t : selected) {
      auto r = bank.row(c, t);
      for (std::size_t i = 0; i < bank.dim; ++i) mean[i] += r[i];
    }
    for (double& v : mean) v /= static_cast<double>(selected.size());
    const DenseVector unit = l2_normalize(mean);
    std::copy(unit.begin(), unit.end(), out.prototypes.row(c).begin());
  }
  return out;
}

std::vector<std::size_t> first_templates(std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = i;
  return out;
}

DenseVector cosine_similarities(std::span<const double> frame,
                                const ClassPrototypes& protos) {
  if (frame.size() != protos.dim) {
    throw Error(ErrorCode::kDimMismatch,
                "frame of dim " + std::to_string(frame.size()) +
                    " against prototypes of dim " + std::to_string(protos.dim));
  }
  const DenseVector unit = l2_normalize(frame);
  return protos.prototypes.multiply(unit);
}

ProbDist frame_probs(std::span<const double> frame,
                     const ClassPrototypes& protos) {
  return softmax(cosine_similarities(frame, protos), protos.tau_sim);
}

namespace {

template <typename RowAt>
ProbDist mean_frame_probs(std::size_t frames, const RowAt& row_at,
                          const ClassPrototypes& protos) {
  if (frames == 0) throw Error(ErrorCode::kEmptyVideo, "video has no frames");
  std::vector<double> acc(protos.classes(), 0.0);
  for (std::size_t k = 0; k < frames; ++k) {
    const ProbDist p = frame_probs(row_at(k), protos);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
  }
  for (double& v : acc) v /= static_cast<double>(frames);
  return ProbDist(std::move(acc));
}

}  // namespace

ProbDist video_probs(const Matrix& frames, const ClassPrototypes& protos) {
  return mean_frame_probs(
      frames.rows(), [&](std::size_t k) { return frames.row(k); }, protos);
}

ProbDist video_probs(std::span<const DenseVector> frames,
                     const ClassPrototypes& protos) {
  return mean_frame_probs(
      frames.size(),
      [&](std::size_t k) { return std::span<const double>(frames[k]); }, protos);
}

VideoPrediction make_prediction(std::string video_id, ProbDist dist) {
  VideoPrediction out;
  out.video_id = std::move(video_id);
  out.predicted_class = argmax(dist.view());
  out.confidence = dist[out.predicted_class];
  out.dist = std::move(dist);
  return out;
}

std::vector<VideoPrediction> zeroshot_classify(const EmbeddingDataset& dataset,
                                               const ClassPrototypes& protos) {
  if (!dataset.empty() && dataset.dim != protos.dim) {
    throw Error(ErrorCode::kDimMismatch,
                "dataset of dim " + std::to_string(dataset.dim) +
                    " against prototypes of dim " + std::to_string(protos.dim));
  }
  std::vector<VideoPrediction> out;
  out.reserve(dataset.size());
  for (const Video& v : dataset.videos) {
    out.push_back(make_prediction(v.id, video_probs(v.frames, protos)));
  }
  return out;
}

}  // namespace dallv
