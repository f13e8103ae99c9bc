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

#ifndef DALLV_PSEUDOLABEL_HPP_
#define DALLV_PSEUDOLABEL_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dallv/clipspace.hpp"
#include "dallv/tensor.hpp"

namespace dallv {

inline constexpr double kDefaultPercentile = 0.8;

struct PseudoLabelEntry {
  std::string video_id;
  std::size_t pseudo_label = 0;
  double confidence = 0.0;
  bool kept = false;

  friend bool operator==(const PseudoLabelEntry&, const PseudoLabelEntry&) = default;
};

// Every prediction in input order, flagged kept or filtered, plus the
// per-class confidence thresholds that decided it.
struct PseudoLabelSet {
  std::vector<PseudoLabelEntry> entries;
  std::vector<std::optional<double>> class_thresholds;  // empty class: nullopt

  std::size_t source_count() const noexcept { return entries.size(); }
  std::size_t kept_count() const noexcept;
  std::vector<PseudoLabelEntry> kept() const;
};

// 0-based nearest-rank index ceil(percentile * n) - 1 into an ascending
// sort of n values. A 1e-9 slack absorbs products like 0.7 * 10 that land a
// hair above an integer.
std::size_t nearest_rank_index(std::size_t n, double percentile);

// Groups predictions by predicted class and keeps, per class, those whose
// confidence reaches that class's nearest-rank percentile.
PseudoLabelSet filter_by_class_percentile(std::span<const VideoPrediction> preds,
                                          double percentile = kDefaultPercentile);

// Predictions of the three teacher heads over the same videos, same order.
struct EnsembleBundle {
  std::vector<VideoPrediction> zero_shot;
  std::vector<VideoPrediction> source_adapter;
  std::vector<VideoPrediction> target_adapter;
};

// Per video, (p_zs + p_src + p_tgt) / 3. Throws kMisalignedBundle.
std::vector<ProbDist> ensemble_average(const EnsembleBundle& bundle);

// The class with at least two of the three votes, else argmax(fallback).
std::size_t majority_vote(std::size_t zero_shot_vote, std::size_t source_vote,
                          std::size_t target_vote, const ProbDist& fallback);

// CSV with header video_id,pseudo_label,confidence,kept.
void write_pseudo_labels_csv(const PseudoLabelSet& set,
                             const std::filesystem::path& path);
std::vector<PseudoLabelEntry> read_pseudo_labels_csv(
    const std::filesystem::path& path);

}  // namespace dallv

#endif  // DALLV_PSEUDOLABEL_HPP_
