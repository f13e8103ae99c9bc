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

// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dallv/adapter.hpp"
#include "dallv/clipspace.hpp"
#include "dallv/dataio.hpp"
#include "dallv/losses.hpp"
#include "dallv/pipeline.hpp"
#include "dallv/pseudolabel.hpp"
#include "dallv/random.hpp"
#include "dallv/synth.hpp"
#include "dallv/tensor.hpp"
#include "test_support.hpp"

namespace dallv {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void report(const char* name, const Verdict& v) {
  std::printf("%s %s: %s\n", v.ok ? "PASS" : "FAIL", name, v.detail.c_str());
  std::fflush(stdout);
  if (!v.ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

constexpr double kGradTol = 1e-5;
constexpr int kGradInstances = 100;

Verdict gradients() {
  const auto t0 = Clock::now();
  CounterRng rng = CounterRng::stream(101, "acceptance-grad");
  double worst_adapter = 0, worst_sim = 0, worst_temp = 0, worst_ce = 0, worst_blend = 0;

  for (int i = 0; i < kGradInstances; ++i) {
    const std::size_t d = 4 + rng.below(13);
    const double r = i % 3 == 0 ? 0.0 : rng.uniform();
    Adapter a = init_adapter(d, rng.next_u64(), r);
    // Nonzero biases keep ReLU inputs away from the kink at 0 most of the time.
    for (double& b : a.b1()) b = 0.3 * rng.normal();
    for (double& b : a.b2()) b = 0.3 * rng.normal();
    const DenseVector x = testing::gaussian_vector(rng, d);
    const DenseVector up = testing::gaussian_vector(rng, d);
    const BackwardResult back = adapter_backward(a, adapter_forward(a, x).cache, up);
    const std::vector<double> theta(a.params().begin(), a.params().end());
    const DenseVector num_p = finite_diff_grad(
        [&](std::span<const double> t) {
          Adapter b = a;
          std::copy(t.begin(), t.end(), b.params().begin());
          return dot(b.forward(x), up);
        },
        theta);
    const DenseVector num_x =
        finite_diff_grad([&](std::span<const double> t) { return dot(a.forward(t), up); }, x);
    worst_adapter = std::max({worst_adapter, testing::max_rel_err(back.grads.values, num_p),
                              testing::max_rel_err(back.grad_in, num_x)});
  }

  for (int i = 0; i < kGradInstances; ++i) {
    const std::size_t C = 2 + rng.below(9);
    const DenseVector z = testing::gaussian_vector(rng, C, 2.0);
    auto grad_of = [&](auto&& loss) {
      return finite_diff_grad([&](std::span<const double> t) { return loss(softmax(t)).value; }, z);
    };

    const TargetDist q = i % 2 ? TargetDist::hard(C, rng.below(C))
                               : TargetDist{testing::random_dist(rng, C)};
    auto sim = [&](const ProbDist& p) { return similarity_kl_loss(p, q); };
    worst_sim = std::max(worst_sim, testing::max_rel_err(sim(softmax(z)).grad_logits, grad_of(sim)));

    const ProbDist ens = testing::random_dist(rng, C, 3.0);
    const double tau = rng.uniform(1.0, 4.0);
    auto plain = [&](const ProbDist& p) { return tempered_distill_kl(p, ens, tau, false); };
    const DenseVector num_t = grad_of(plain);
    DenseVector scaled = num_t;
    for (double& g : scaled) g *= tau * tau;
    worst_temp = std::max({worst_temp, testing::max_rel_err(plain(softmax(z)).grad_logits, num_t),
                           testing::max_rel_err(
                               tempered_distill_kl(softmax(z), ens, tau, true).grad_logits, scaled)});

    const std::size_t y = rng.below(C);
    auto ce = [&](const ProbDist& p) { return cross_entropy_loss(p, y); };
    worst_ce = std::max(worst_ce, testing::max_rel_err(ce(softmax(z)).grad_logits, grad_of(ce)));

    const double alpha = rng.uniform();
    auto blend = [&](const ProbDist& p) {
      return blended_distill_loss(p, ens, y, alpha, tau, false);
    };
    worst_blend =
        std::max(worst_blend, testing::max_rel_err(blend(softmax(z)).grad_logits, grad_of(blend)));
  }

  const double secs = seconds_since(t0);
  const double worst = std::max({worst_adapter, worst_sim, worst_temp, worst_ce, worst_blend});
  return {worst < kGradTol && secs < 30.0,
          fmt("%d instances each, max rel err adapter %.2e sim-kl %.2e tempered-kl %.2e "
              "ce %.2e blended %.2e (tol %.0e), %.2fs (limit 30s)",
              kGradInstances, worst_adapter, worst_sim, worst_temp, worst_ce, worst_blend,
              kGradTol, secs)};
}

// ---------------------------------------------------------------------------

bool sums_to_one(const ProbDist& p, double& worst) {
  double s = 0.0;
  bool nonneg = true;
  for (double v : p.probs) {
    s += v;
    nonneg = nonneg && v >= 0.0;
  }
  worst = std::max(worst, std::abs(s - 1.0));
  return nonneg && std::abs(s - 1.0) <= 1e-9;
}

Verdict probability_invariants() {
  CounterRng rng = CounterRng::stream(102, "acceptance-prob");
  constexpr int kInputs = 10000;
  int bad = 0;
  double worst_sum = 0.0, worst_kl = 0.0;

  for (int i = 0; i < kInputs; ++i) {
    const std::size_t C = 2 + rng.below(15);
    // Wide logit ranges, including ones that would overflow a naive exp.
    const double scale = std::pow(10.0, rng.uniform(-2.0, 3.0));
    const DenseVector z = testing::gaussian_vector(rng, C, scale);
    const ProbDist p = softmax(z, rng.uniform(0.05, 5.0));
    if (!sums_to_one(p, worst_sum)) ++bad;
    const double kl = kl_div(p, p);
    worst_kl = std::max(worst_kl, std::abs(kl));
    if (!(kl <= 1e-12 && kl >= -1e-12)) ++bad;
  }

  for (int i = 0; i < kInputs; ++i) {
    const std::size_t C = 2 + rng.below(7);
    const std::size_t d = C + rng.below(13);
    CounterRng brng(rng.next_u64());
    const ClassPrototypes protos =
        build_prototypes(testing::random_bank(brng, C, d, 1 + rng.below(3)), std::nullopt,
                         rng.uniform(0.005, 1.0));
    const std::size_t K = 1 + rng.below(6);
    Matrix frames(K, d);
    for (std::size_t k = 0; k < K; ++k) {
      const DenseVector f = testing::gaussian_vector(rng, d, rng.uniform(0.1, 10.0));
      std::copy(f.begin(), f.end(), frames.row(k).begin());
    }
    if (!sums_to_one(video_probs(frames, protos), worst_sum)) ++bad;
  }

  for (int i = 0; i < kInputs; ++i) {
    const std::size_t C = 2 + rng.below(15);
    EnsembleBundle b;
    for (auto* head : {&b.zero_shot, &b.source_adapter, &b.target_adapter}) {
      head->push_back(make_prediction("v", testing::random_dist(rng, C, rng.uniform(0.1, 20.0))));
    }
    if (!sums_to_one(ensemble_average(b).front(), worst_sum)) ++bad;
  }

  int argmax_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t C = 2 + rng.below(30);
    const DenseVector z = testing::gaussian_vector(rng, C, rng.uniform(0.1, 10.0));
    const std::size_t expect = argmax(z);
    for (double tau : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0, rng.uniform(0.01, 100.0)}) {
      if (argmax(softmax(z, tau).probs) != expect) ++argmax_bad;
    }
  }

  return {bad == 0 && argmax_bad == 0,
          fmt("%d inputs each for softmax/video_probs/ensemble_average, %d violations, "
              "max |sum-1| %.1e (tol 1e-9), max |KL(p,p)| %.1e (tol 1e-12), "
              "argmax changed in %d of 7000 temperature checks",
              kInputs, bad, worst_sum, worst_kl, argmax_bad)};
}

// ---------------------------------------------------------------------------

// Smallest value v of the multiset with #{x <= v} >= p * n.
double nearest_rank_oracle(const std::vector<double>& values, double p) {
  const double need = p * static_cast<double>(values.size()) - 1e-9;
  double best = INFINITY;
  for (double v : values) {
    std::size_t at_most = 0;
    for (double x : values) at_most += x <= v;
    if (static_cast<double>(at_most) >= need && v < best) best = v;
  }
  return best;
}

Verdict percentile_oracle() {
  CounterRng rng = CounterRng::stream(103, "acceptance-pct");
  int mismatched = 0, with_ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t C = 1 + rng.below(5);
    const std::size_t n = 1 + rng.below(40);
    // Coarse grids for most trials so ties are common.
    const std::size_t levels = trial % 4 == 3 ? 0 : 1 + rng.below(6);
    const double p = trial % 5 == 0 ? 0.8 : trial % 5 == 1 ? 0.5 : rng.uniform(0.01, 0.99);

    std::vector<VideoPrediction> preds;
    std::vector<std::vector<double>> by_class(C);
    for (std::size_t i = 0; i < n; ++i) {
      VideoPrediction v;
      v.video_id = "v" + std::to_string(i);
      v.dist = uniform_dist(C);
      v.predicted_class = rng.below(C);
      v.confidence = levels ? static_cast<double>(1 + rng.below(levels)) / (levels + 1)
                            : rng.uniform();
      by_class[v.predicted_class].push_back(v.confidence);
      preds.push_back(std::move(v));
    }
    bool tied = false;
    for (auto cls : by_class) {
      std::sort(cls.begin(), cls.end());
      tied = tied || std::adjacent_find(cls.begin(), cls.end()) != cls.end();
    }
    with_ties += tied;

    const PseudoLabelSet got = filter_by_class_percentile(preds, p);
    bool same = got.entries.size() == n;
    for (std::size_t i = 0; same && i < n; ++i) {
      const double t = nearest_rank_oracle(by_class[preds[i].predicted_class], p);
      same = got.entries[i].kept == (preds[i].confidence >= t) &&
             got.entries[i].video_id == preds[i].video_id;
    }
    mismatched += !same;
  }
  return {mismatched == 0, fmt("1000 multisets (%d with ties), %d mismatches against "
                               "brute-force nearest rank", with_ties, mismatched)};
}

// ---------------------------------------------------------------------------

Verdict majority_oracle() {
  CounterRng rng = CounterRng::stream(104, "acceptance-vote");
  std::size_t cases = 0, fallback_cases = 0, mismatched = 0;
  for (std::size_t C = 1; C <= 5; ++C) {
    std::vector<ProbDist> fallbacks;
    for (int f = 0; f < 4; ++f) fallbacks.push_back(testing::random_dist(rng, C));
    for (std::size_t fc = 0; fc < C; ++fc) fallbacks.push_back(one_hot(C, fc));
    for (std::size_t a = 0; a < C; ++a) {
      for (std::size_t b = 0; b < C; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          for (const ProbDist& fb : fallbacks) {
            std::vector<int> count(C, 0);
            ++count[a];
            ++count[b];
            ++count[c];
            std::size_t expect = C;
            for (std::size_t k = 0; k < C; ++k) {
              if (count[k] >= 2) expect = k;
            }
            if (expect == C) {
              ++fallback_cases;
              expect = 0;
              for (std::size_t k = 1; k < C; ++k) {
                if (fb[k] > fb[expect]) expect = k;
              }
            }
            mismatched += majority_vote(a, b, c, fb) != expect;
            ++cases;
          }
        }
      }
    }
  }
  return {mismatched == 0 && fallback_cases > 0,
          fmt("%zu vote triples x fallbacks for C in 1..5 (%zu all-distinct), %zu mismatches",
              cases, fallback_cases, mismatched)};
}

// ---------------------------------------------------------------------------

SynthConfig reference_config(std::uint64_t seed) {
  SynthConfig c;
  c.classes = 8;
  c.teacher_dim = 64;
  c.student_dim = 48;
  c.videos_per_class = 40;
  c.frames_per_video = 8;
  c.shift = 0.5;
  c.sigma_class = 0.25;
  c.seed = seed;
  return c;
}

PipelineInputs inputs_of(const SynthBenchmark& b) {
  return PipelineInputs{b.teacher_bank,   b.student_bank,   b.source_teacher,
                        b.target_teacher, b.target_student, b.target_labels};
}

Verdict end_to_end() {
  const auto t0 = Clock::now();
  constexpr int kSeeds = 5;
  double zs = 0, src = 0, tgt = 0, ens = 0, zss = 0, dist = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SynthBenchmark b = generate_benchmark(reference_config(s));
    TrainConfig cfg;
    cfg.seed = s;
    const PipelineReport r = run_pipeline(inputs_of(b), cfg);
    zs += r.zero_shot_teacher.accuracy() / kSeeds;
    src += r.source_head.accuracy() / kSeeds;
    tgt += r.target_head.accuracy() / kSeeds;
    ens += r.ensemble.accuracy() / kSeeds;
    zss += r.zero_shot_student.accuracy() / kSeeds;
    dist += r.distilled_student.accuracy() / kSeeds;
  }
  const double secs = seconds_since(t0);
  const bool ok = dist >= ens - 0.02 && ens >= zs && ens >= src && ens >= tgt &&
                  dist >= zss + 0.03 && secs < 180.0;
  return {ok, fmt("5-seed mean target acc: zs-teacher %.1f src %.1f tgt %.1f ensemble %.1f "
                  "zs-student %.1f distilled %.1f; need dist >= ens-2, ens >= each head, "
                  "dist >= zs-student+3; %.1fs (limit 180s)",
                  100 * zs, 100 * src, 100 * tgt, 100 * ens, 100 * zss, 100 * dist, secs)};
}

// ---------------------------------------------------------------------------

Verdict determinism() {
  const SynthBenchmark b = generate_benchmark(reference_config(7));
  TrainConfig cfg;
  cfg.seed = 7;
  testing::TempDir dir("acceptance");
  std::vector<std::string> files;
  for (const char* run : {"a", "b"}) {
    const PipelineReport r = run_pipeline(inputs_of(b), cfg);
    const std::string p = std::string(run) + "_";
    save_adapter(r.source_adapter, dir / (p + "source.adp"));
    save_adapter(r.target_adapter, dir / (p + "target.adp"));
    save_adapter(r.student_adapter, dir / (p + "student.adp"));
    write_metrics_csv(r.ensemble, dir / (p + "ensemble_metrics.csv"));
    write_metrics_csv(r.distilled_student, dir / (p + "student_metrics.csv"));
  }
  int differing = 0;
  const char* names[] = {"source.adp", "target.adp", "student.adp", "ensemble_metrics.csv",
                         "student_metrics.csv"};
  for (const char* n : names) {
    const std::string x = testing::slurp(dir / (std::string("a_") + n));
    const std::string y = testing::slurp(dir / (std::string("b_") + n));
    differing += x.empty() || x != y;
  }
  return {differing == 0, fmt("2 full runs, %d of 5 artifacts (3 ADP1 checkpoints, 2 metrics "
                              "CSVs) differ", differing)};
}

// ---------------------------------------------------------------------------

Verdict loss_endpoints() {
  CounterRng rng = CounterRng::stream(105, "acceptance-endpoints");
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t C = 2 + rng.below(15);
    const ProbDist s = testing::random_dist(rng, C, rng.uniform(0.1, 5.0));
    const ProbDist e = testing::random_dist(rng, C, rng.uniform(0.1, 5.0));
    const std::size_t y = rng.below(C);
    const double tau = rng.uniform(0.5, 8.0);
    const bool comp = i % 2 == 0;
    const LossValueAndGrad ce = cross_entropy_loss(s, y);
    const LossValueAndGrad kl = tempered_distill_kl(s, e, tau, comp);
    const LossValueAndGrad at1 = blended_distill_loss(s, e, y, 1.0, tau, comp);
    const LossValueAndGrad at0 = blended_distill_loss(s, e, y, 0.0, tau, comp);
    bad += !(at1.value == ce.value && at1.grad_logits == ce.grad_logits);
    bad += !(at0.value == kl.value && at0.grad_logits == kl.grad_logits);
  }
  return {bad == 0, fmt("1000 instances, %d inexact endpoints (alpha=1 vs CE, alpha=0 vs "
                        "tempered KL, value and gradient)", bad)};
}

// ---------------------------------------------------------------------------

Verdict noiseless_sanity() {
  SynthConfig sc = reference_config(0);
  sc.shift = 0.0;
  sc.sigma_class = 0.0;
  sc.sigma_text = 0.0;
  sc.sigma_cross = 0.0;
  const SynthBenchmark b = generate_benchmark(sc);
  TrainConfig cfg;
  const ClassPrototypes protos =
      build_prototypes(b.teacher_bank, std::nullopt, resolve_tau_sim(cfg, b.teacher_bank));
  const EmbeddingDataset target = attach_labels(b.target_teacher, b.target_labels);
  const Metrics zs = evaluate(target, protos, nullptr, b.class_names);

  const PseudoLabelSet pl =
      filter_by_class_percentile(zeroshot_classify(b.target_teacher, protos), cfg.percentile);
  std::size_t kept = 0, wrong = 0;
  for (std::size_t i = 0; i < pl.entries.size(); ++i) {
    if (!pl.entries[i].kept) continue;
    ++kept;
    wrong += static_cast<std::int32_t>(pl.entries[i].pseudo_label) != target.videos[i].label;
  }
  const bool ok = zs.correct == zs.total && zs.total > 0 && kept > 0 && wrong == 0;
  return {ok, fmt("zero-shot %.1f%% (%zu/%zu), %zu kept pseudo-labels, %zu incorrect",
                  100.0 * zs.accuracy(), zs.correct, zs.total, kept, wrong)};
}

}  // namespace
}  // namespace dallv

int main() {
  using namespace dallv;
  try {
    report("gradient-correctness", gradients());
    report("probability-invariants", probability_invariants());
    report("percentile-filter-oracle", percentile_oracle());
    report("majority-vote-oracle", majority_oracle());
    report("end-to-end-ordering", end_to_end());
    report("determinism", determinism());
    report("loss-endpoints", loss_endpoints());
    report("noiseless-sanity", noiseless_sanity());
  } catch (const Error& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures;
}
