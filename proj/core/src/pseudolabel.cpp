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

#include "dallv/pseudolabel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "binary_io.hpp"
#include "csv.hpp"
#include "dallv/error.hpp"

namespace dallv {

std::size_t PseudoLabelSet::kept_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [](const PseudoLabelEntry& e) { return e.kept; }));
}

std::vector<PseudoLabelEntry> PseudoLabelSet::kept() const {
  std::vector<PseudoLabelEntry> out;
  for (const PseudoLabelEntry& e : entries) {
    if (e.kept) out.push_back(e);
  }
  return out;
}

std::size_t nearest_rank_index(std::size_t n, double percentile) {
  const double rank = std::ceil(percentile * static_cast<double>(n) - 1e-9);
  const auto k = static_cast<std::size_t>(
      std::clamp(rank, 1.0, static_cast<double>(n)));
  return k - 1;
}

PseudoLabelSet filter_by_class_percentile(std::span<const VideoPrediction> preds,
                                          double percentile) {
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw Error(ErrorCode::kPercentileOutOfRange,
                "percentile must be in (0, 1), got " + std::to_string(percentile));
  }
  PseudoLabelSet out;
  if (preds.empty()) return out;
  const std::size_t classes = preds.front().dist.size();

  std::vector<std::vector<double>> by_class(classes);
  for (const VideoPrediction& p : preds) {
    if (p.predicted_class >= classes || p.dist.size() != classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "prediction for " + p.video_id + " is inconsistent with " +
                      std::to_string(classes) + " classes");
    }
    by_class[p.predicted_class].push_back(p.confidence);
  }
  out.class_thresholds.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double>& conf = by_class[c];
    if (conf.empty()) continue;
    std::sort(conf.begin(), conf.end());
    out.class_thresholds[c] = conf[nearest_rank_index(conf.size(), percentile)];
  }
  out.entries.reserve(preds.size());
  for (const VideoPrediction& p : preds) {
    const double threshold = *out.class_thresholds[p.predicted_class];
    out.entries.push_back(PseudoLabelEntry{p.video_id, p.predicted_class,
                                           p.confidence,
                                           p.confidence >= threshold});
  }
  return out;
}

std::vector<ProbDist> ensemble_average(const EnsembleBundle& bundle) {
  const std::size_t n = bundle.zero_shot.size();
  if (bundle.source_adapter.size() != n || bundle.target_adapter.size() != n) {
    throw Error(ErrorCode::kMisalignedBundle, "ensemble heads cover different video counts");
  }
  std::vector<ProbDist> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VideoPrediction& a = bundle.zero_shot[i];
    const VideoPrediction& b = bundle.source_adapter[i];
    const VideoPrediction& c = bundle.target_adapter[i];
    if (a.video_id != b.video_id || a.video_id != c.video_id) {
      throw Error(ErrorCode::kMisalignedBundle,
                  "ensemble heads disagree on video " + std::to_string(i) + ": " +
                      a.video_id + " / " + b.video_id + " / " + c.video_id);
    }
    if (a.dist.size() != b.dist.size() || a.dist.size() != c.dist.size()) {
      throw Error(ErrorCode::kMisalignedBundle,
                  "ensemble heads disagree on class count for " + a.video_id);
    }
    std::vector<double> p(a.dist.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = (a.dist[k] + b.dist[k] + c.dist[k]) / 3.0;
    }
    out.emplace_back(std::move(p));
  }
  return out;
}

std::size_t majority_vote(std::size_t zero_shot_vote, std::size_t source_vote,
                          std::size_t target_vote, const ProbDist& fallback) {
  const std::array<std::size_t, 3> votes = {zero_shot_vote, source_vote, target_vote};
  for (std::size_t v : votes) {
    if (v >= fallback.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "vote " + std::to_string(v) + " with " +
                      std::to_string(fallback.size()) + " classes");
    }
  }
  if (votes[0] == votes[1] || votes[0] == votes[2]) return votes[0];
  if (votes[1] == votes[2]) return votes[1];
  return argmax(fallback.view());
}

void write_pseudo_labels_csv(const PseudoLabelSet& set,
                             const std::filesystem::path& path) {
  std::ostringstream os;
  os << "video_id,pseudo_label,confidence,kept\n";
  for (const PseudoLabelEntry& e : set.entries) {
    os << detail::csv_field(e.video_id) << ',' << e.pseudo_label << ','
       << detail::format_double(e.confidence) << ',' << (e.kept ? 1 : 0) << '\n';
  }
  detail::write_file_atomic(path, os.str());
}

std::vector<PseudoLabelEntry> read_pseudo_labels_csv(
    const std::filesystem::path& path) {
  const detail::CsvTable table = detail::read_csv(
      path, {"video_id", "pseudo_label", "confidence", "kept"});
  std::vector<PseudoLabelEntry> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    PseudoLabelEntry e;
    e.video_id = row[0];
    const long long label = detail::parse_int(row[1], path.string());
    const long long kept = detail::parse_int(row[3], path.string());
    if (label < 0 || (kept != 0 && kept != 1)) {
      throw Error(ErrorCode::kConfigParse,
                  path.string() + ": bad row for " + e.video_id);
    }
    e.pseudo_label = static_cast<std::size_t>(label);
    e.confidence = detail::parse_double(row[2], path.string());
    e.kept = kept == 1;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dallv
