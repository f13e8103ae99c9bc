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

// Zero-shot classification against text-derived class prototypes. A frame is
// scored by the softmax of its cosine similarities to each prototype divided
// by a logit temperature; a video is scored by the mean of its frame
// distributions.

#ifndef DALLV_CLIPSPACE_HPP_
#define DALLV_CLIPSPACE_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dallv/dataset.hpp"
#include "dallv/tensor.hpp"

namespace dallv {

// Default logit temperature (inverse of a logit scale of 100).
inline constexpr double kDefaultTauSim = 0.01;

// Placeholder substituted by the class name in every template.
inline constexpr std::string_view kClassPlaceholder = "[CLS]";

// The 16 action-recognition prompt templates.
inline constexpr std::array<std::string_view, 16> kActionPromptTemplates = {
    "a photo of action [CLS]",
    "a picture of action [CLS]",
    "Human action of [CLS]",
    "[CLS], an action",
    "[CLS] this is an action",
    "[CLS], a video of action",
    "Playing action of [CLS]",
    "[CLS]",
    "Playing a kind of action, [CLS]",
    "Doing a kind of action, [CLS]",
    "Look, the human is [CLS]",
    "Can you recognize the action of [CLS]?",
    "Video classification of [CLS]",
    "A video of [CLS]",
    "The man is [CLS]",
    "The woman is [CLS]",
};

// Per-class, per-template unit text embeddings.
struct TextBank {
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> templates;
  std::vector<double> embeddings;  // C x T x d, class-major
  double logit_temperature = kDefaultTauSim;

  std::size_t classes() const noexcept { return class_names.size(); }
  std::size_t template_count() const noexcept { return templates.size(); }

  std::span<const double> row(std::size_t cls, std::size_t tmpl) const {
    return std::span<const double>(embeddings)
        .subspan((cls * templates.size() + tmpl) * dim, dim);
  }
  std::span<double> row(std::size_t cls, std::size_t tmpl) {
    return std::span<double>(embeddings)
        .subspan((cls * templates.size() + tmpl) * dim, dim);
  }

  // Throws kNonUnitRow if any row norm deviates from 1 by more than 1e-3,
  // kInvalidConfig on C < 2, T < 1, or a payload of the wrong size.
  void validate() const;
};

struct ClassPrototypes {
  std::size_t dim = 0;
  Matrix prototypes;  // C x d, unit rows
  double tau_sim = kDefaultTauSim;

  std::size_t classes() const noexcept { return prototypes.rows(); }
};

struct VideoPrediction {
  std::string video_id;
  ProbDist dist;
  std::size_t predicted_class = 0;
  double confidence = 0.0;
};

// Per class, the mean of the selected template rows renormalized to unit
// length. An empty optional selects every template.
ClassPrototypes build_prototypes(
    const TextBank& bank,
    const std::optional<std::vector<std::size_t>>& template_subset,
    double tau_sim);

// The first `count` templates, the subset used by the template sweep.
std::vector<std::size_t> first_templates(std::size_t count);

// Cosine similarities between a (not necessarily unit) frame and every
// prototype.
DenseVector cosine_similarities(std::span<const double> frame,
                                const ClassPrototypes& protos);

ProbDist frame_probs(std::span<const double> frame,
                     const ClassPrototypes& protos);

// Mean of the frame distributions over the rows of `frames`.
ProbDist video_probs(const Matrix& frames, const ClassPrototypes& protos);
ProbDist video_probs(std::span<const DenseVector> frames,
                     const ClassPrototypes& protos);

VideoPrediction make_prediction(std::string video_id, ProbDist dist);

std::vector<VideoPrediction> zeroshot_classify(const EmbeddingDataset& dataset,
                                               const ClassPrototypes& protos);

}  // namespace dallv

#endif  // DALLV_CLIPSPACE_HPP_
