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
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "dallv/pseudolabel.hpp"
#include "expect_error.hpp"
#include "test_support.hpp"

namespace dallv {
namespace {

// Prediction for class `cls` of C with the given confidence as its max.
VideoPrediction pred(const std::string& id, std::size_t cls, std::size_t C, double conf) {
  std::vector<double> p(C, (1.0 - conf) / static_cast<double>(C - 1));
  p[cls] = conf;
  VideoPrediction v;
  v.video_id = id;
  v.dist = ProbDist(p);
  v.predicted_class = cls;
  v.confidence = conf;
  return v;
}

TEST(NearestRank, Index) {
  EXPECT_EQ(nearest_rank_index(10, 0.8), 7u);
  EXPECT_EQ(nearest_rank_index(1, 0.8), 0u);
  EXPECT_EQ(nearest_rank_index(5, 0.5), 2u);
  EXPECT_EQ(nearest_rank_index(4, 0.01), 0u);
}

TEST(PercentileFilter, TenConfidences) {
  // The confidence field is what gets ranked; the dist is filler.
  std::vector<VideoPrediction> preds;
  for (int i = 1; i <= 10; ++i) {
    VideoPrediction v;
    v.video_id = "v" + std::to_string(i);
    v.dist = ProbDist({0.1 * i, 0.0, 1.0 - 0.1 * i});
    v.predicted_class = 0;
    v.confidence = 0.1 * i;
    preds.push_back(v);
  }
  const PseudoLabelSet set = filter_by_class_percentile(preds, 0.8);
  ASSERT_TRUE(set.class_thresholds[0].has_value());
  EXPECT_NEAR(*set.class_thresholds[0], 0.8, 1e-12);
  EXPECT_EQ(set.kept_count(), 3u);
  const auto kept = set.kept();
  EXPECT_EQ(kept[0].video_id, "v8");
  EXPECT_EQ(kept[2].video_id, "v10");
  EXPECT_FALSE(set.class_thresholds[1].has_value());
}

TEST(PercentileFilter, SingletonAlwaysKept) {
  const std::vector<VideoPrediction> preds{pred("a", 1, 3, 0.4), pred("b", 0, 3, 0.9),
                                           pred("c", 0, 3, 0.95)};
  const PseudoLabelSet set = filter_by_class_percentile(preds, 0.8);
  EXPECT_TRUE(set.entries[0].kept);
  EXPECT_DOUBLE_EQ(*set.class_thresholds[1], 0.4);
}

TEST(PercentileFilter, TiesAreAllKept) {
  std::vector<VideoPrediction> preds;
  for (int i = 0; i < 7; ++i) preds.push_back(pred("t" + std::to_string(i), 2, 4, 0.6));
  const PseudoLabelSet set = filter_by_class_percentile(preds, 0.8);
  EXPECT_EQ(set.kept_count(), 7u);
}

TEST(PercentileFilter, KeepsInputOrderAndAllEntries) {
  CounterRng rng(51);
  std::vector<VideoPrediction> preds;
  for (int i = 0; i < 40; ++i) {
    preds.push_back(pred("p" + std::to_string(i), rng.below(4), 4, rng.uniform(0.3, 1.0)));
  }
  const PseudoLabelSet set = filter_by_class_percentile(preds, 0.8);
  ASSERT_EQ(set.source_count(), 40u);
  for (int i = 0; i < 40; ++i) {
    EXPECT_EQ(set.entries[i].video_id, preds[i].video_id);
    EXPECT_EQ(set.entries[i].pseudo_label, preds[i].predicted_class);
  }
}

TEST(PercentileFilter, KeepBounds) {
  CounterRng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = 2 + rng.below(4);
    const double pct = rng.uniform(0.05, 0.95);
    std::vector<VideoPrediction> preds;
    const std::size_t n = 1 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse confidences so ties are common.
      const double conf = 0.5 + 0.05 * static_cast<double>(rng.below(10));
      preds.push_back(pred(std::to_string(i), rng.below(C), C, conf));
    }
    const PseudoLabelSet set = filter_by_class_percentile(preds, pct);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_class;
    for (const auto& e : set.entries) {
      ++per_class[e.pseudo_label].first;
      if (e.kept) ++per_class[e.pseudo_label].second;
    }
    for (const auto& [c, counts] : per_class) {
      const auto [n_c, kept] = counts;
      EXPECT_GE(kept, static_cast<std::size_t>(std::ceil((1.0 - pct) * n_c - 1e-9)));
      EXPECT_LE(kept, n_c);
      EXPECT_GE(kept, 1u);
    }
  }
}

TEST(PercentileFilter, Errors) {
  const std::vector<VideoPrediction> preds{pred("a", 0, 2, 0.9)};
  EXPECT_DALLV_ERROR(filter_by_class_percentile(preds, 0.0), ErrorCode::kPercentileOutOfRange);
  EXPECT_DALLV_ERROR(filter_by_class_percentile(preds, 1.0), ErrorCode::kPercentileOutOfRange);
  EXPECT_TRUE(filter_by_class_percentile({}, 0.8).entries.empty());
}

EnsembleBundle bundle_of(const ProbDist& a, const ProbDist& b, const ProbDist& c) {
  EnsembleBundle e;
  e.zero_shot.push_back(make_prediction("v", a));
  e.source_adapter.push_back(make_prediction("v", b));
  e.target_adapter.push_back(make_prediction("v", c));
  return e;
}

TEST(Ensemble, IdenticalHeads) {
  const ProbDist p({0.1, 0.7, 0.2});
  const auto out = ensemble_average(bundle_of(p, p, p));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out[0][c], p[c], 1e-15);
}

TEST(Ensemble, Arithmetic) {
  const auto out =
      ensemble_average(bundle_of(ProbDist({1.0, 0.0}), ProbDist({0.0, 1.0}), ProbDist({0.5, 0.5})));
  EXPECT_DOUBLE_EQ(out[0][0], 0.5);
  EXPECT_DOUBLE_EQ(out[0][1], 0.5);
}

TEST(Ensemble, RandomBundlesSumToOne) {
  CounterRng rng(53);
  EnsembleBundle e;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "v" + std::to_string(i);
    e.zero_shot.push_back(make_prediction(id, testing::random_dist(rng, 6)));
    e.source_adapter.push_back(make_prediction(id, testing::random_dist(rng, 6)));
    e.target_adapter.push_back(make_prediction(id, testing::random_dist(rng, 6)));
  }
  const auto out = ensemble_average(e);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_TRUE(is_valid_dist(out[i]));
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_NEAR(out[i][c],
                  (e.zero_shot[i].dist[c] + e.source_adapter[i].dist[c] + e.target_adapter[i].dist[c]) / 3.0,
                  1e-15);
    }
  }
}

TEST(Ensemble, Misaligned) {
  EnsembleBundle e = bundle_of(uniform_dist(2), uniform_dist(2), uniform_dist(2));
  e.target_adapter[0].video_id = "w";
  EXPECT_DALLV_ERROR(ensemble_average(e), ErrorCode::kMisalignedBundle);
  e = bundle_of(uniform_dist(2), uniform_dist(2), uniform_dist(2));
  e.source_adapter.clear();
  EXPECT_DALLV_ERROR(ensemble_average(e), ErrorCode::kMisalignedBundle);
  e = bundle_of(uniform_dist(2), uniform_dist(3), uniform_dist(2));
  EXPECT_DALLV_ERROR(ensemble_average(e), ErrorCode::kMisalignedBundle);
}

TEST(MajorityVote, Cases) {
  const ProbDist u = uniform_dist(8);
  EXPECT_EQ(majority_vote(2, 2, 5, u), 2u);
  EXPECT_EQ(majority_vote(7, 7, 7, u), 7u);
  EXPECT_EQ(majority_vote(0, 1, 2, ProbDist({0.2, 0.5, 0.3})), 1u);
  EXPECT_EQ(majority_vote(3, 1, 1, u), 1u);
}

TEST(MajorityVote, PermutationInvariant) {
  const ProbDist f({0.1, 0.2, 0.3, 0.4});
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t r = majority_vote(a, b, c, f);
        EXPECT_EQ(r, majority_vote(b, a, c, f));
        EXPECT_EQ(r, majority_vote(c, b, a, f));
        EXPECT_EQ(r, majority_vote(a, c, b, f));
      }
}

TEST(MajorityVote, OutOfRange) {
  EXPECT_DALLV_ERROR(majority_vote(0, 3, 1, uniform_dist(3)), ErrorCode::kIndexOutOfRange);
}

TEST(PseudoLabelCsv, RoundTrip) {
  testing::TempDir dir("pl");
  const std::vector<VideoPrediction> preds{pred("a", 0, 3, 0.9), pred("b", 1, 3, 0.7123456789),
                                           pred("c", 0, 3, 0.5)};
  const PseudoLabelSet set = filter_by_class_percentile(preds, 0.8);
  write_pseudo_labels_csv(set, dir / "pl.csv");
  EXPECT_EQ(read_pseudo_labels_csv(dir / "pl.csv"), set.entries);
}

TEST(PseudoLabelCsv, BadHeader) {
  testing::TempDir dir("pl_bad");
  testing::spit(dir / "pl.csv", "id,label\na,1\n");
  EXPECT_DALLV_ERROR(read_pseudo_labels_csv(dir / "pl.csv"), ErrorCode::kConfigParse);
}

}  // namespace
}  // namespace dallv
