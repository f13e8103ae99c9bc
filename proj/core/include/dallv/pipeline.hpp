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

// The adaptation stages:
//
//   1. train_source_adapter  supervised adapter on labeled source videos
//   2. adapt_target          zero-shot pseudo-labels, class-wise percentile
//                            filter, adapter trained on the kept subset
//   3. distill               ensemble of (zero-shot, source adapter, target
//                            adapter) in the teacher space distilled into a
//                            student adapter in the student space
//   4. evaluate              accuracy, per-class accuracy, confusion matrix

#ifndef DALLV_PIPELINE_HPP_
#define DALLV_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "dallv/adapter.hpp"
#include "dallv/clipspace.hpp"
#include "dallv/dataio.hpp"
#include "dallv/dataset.hpp"
#include "dallv/losses.hpp"
#include "dallv/optim.hpp"
#include "dallv/pseudolabel.hpp"

namespace dallv {

struct TrainConfig {
  double tau_sim = kDefaultTauSim;  // used only when a bank carries none
  double tau_distill = 2.0;
  double alpha = 0.3;
  double lr = 0.01;
  double weight_decay = 0.2;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double percentile = kDefaultPercentile;
  double residual_ratio = 0.0;
  std::uint64_t seed = 0;
  bool tau_sq_compensation = true;
  bool decay_biases = true;

  // Throws kInvalidConfig.
  void validate() const;
};

// The bank's logit temperature when it has a valid one, else cfg.tau_sim.
double resolve_tau_sim(const TrainConfig& cfg, const TextBank& bank);

// Mean training loss per epoch.
using LossTrace = std::vector<double>;

struct TrainResult {
  Adapter adapter;
  LossTrace loss_trace;
};

// Activations of one video pushed through an adapter and the cosine
// classifier, kept for the backward pass.
struct AdaptedVideoPass {
  struct Frame {
    ForwardCache cache;
    double norm = 0.0;
    DenseVector unit;
    ProbDist probs;
  };
  std::vector<Frame> frames;
  ProbDist dist;  // mean of the frame distributions
};

// Video distribution with every frame passed through `adapter` first.
ProbDist forward_adapted_video(const Adapter& adapter, const Matrix& frames,
                               const ClassPrototypes& protos,
                               AdaptedVideoPass& pass);

// Accumulates parameter gradients given d(loss)/d(logits) of the video
// distribution, in the convention of LossValueAndGrad::grad_logits.
void backward_adapted_video(const Adapter& adapter, const ClassPrototypes& protos,
                            const AdaptedVideoPass& pass,
                            std::span<const double> grad_logits,
                            std::span<double> param_grads);

// Predictions for every video; `adapter` may be null for raw zero-shot.
std::vector<VideoPrediction> classify(const EmbeddingDataset& dataset,
                                      const ClassPrototypes& protos,
                                      const Adapter* adapter);

// Throws kUnlabeledSourceVideo or kDimMismatch.
TrainResult train_source_adapter(const EmbeddingDataset& source,
                                 const TextBank& bank, const TrainConfig& cfg);

struct TargetResult {
  Adapter adapter;
  PseudoLabelSet pseudo_labels;
  LossTrace loss_trace;
};

// Pseudo-labels come from the raw (non-adapted) prototypes only. Target
// labels are ignored. Throws kEmptyAfterFiltering.
TargetResult adapt_target(const EmbeddingDataset& target, const TextBank& bank,
                          const TrainConfig& cfg);

struct TeacherBundle {
  ClassPrototypes prototypes;  // teacher space
  Adapter source_adapter;
  Adapter target_adapter;
};

// Teacher predictions over a target set: the three heads and their fusion.
struct TeacherOutputs {
  EnsembleBundle heads;
  std::vector<ProbDist> ensemble;
  std::vector<std::size_t> hard_labels;  // majority vote
};

TeacherOutputs run_teachers(const TeacherBundle& bundle,
                            const EmbeddingDataset& target_teacher);

enum class DistillObjective {
  kBlended,        // alpha * CE + (1 - alpha) * tempered KL
  kHardLabelOnly,  // CE on the majority-vote labels alone
};

struct DistillResult {
  Adapter student;
  LossTrace loss_trace;
};

// Uses the whole target set. Throws kIdSetMismatch or kDimMismatch.
DistillResult distill(const TeacherBundle& bundle,
                      const EmbeddingDataset& target_teacher,
                      const EmbeddingDataset& target_student,
                      const TextBank& student_bank, const TrainConfig& cfg,
                      DistillObjective objective = DistillObjective::kBlended);

struct Metrics {
  std::vector<std::string> class_names;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> class_count;
  std::vector<std::size_t> class_correct;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  double accuracy() const noexcept {
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
  // NaN for classes without any video.
  double class_accuracy(std::size_t c) const noexcept;
};

// Throws kMissingLabels if any video is unlabeled.
Metrics evaluate_predictions(const EmbeddingDataset& labeled,
                             std::span<const VideoPrediction> predictions,
                             std::vector<std::string> class_names);

Metrics evaluate(const EmbeddingDataset& labeled, const ClassPrototypes& protos,
                 const Adapter* adapter, std::vector<std::string> class_names);

// metrics CSV: scope,class_index,class_name,count,correct,accuracy with one
// "class" row per class followed by an "overall" row.
void write_metrics_csv(const Metrics& metrics, const std::filesystem::path& path);
// C x C confusion matrix; rows are true classes.
void write_confusion_csv(const Metrics& metrics, const std::filesystem::path& path);
// epoch,loss
void write_loss_trace_csv(const LossTrace& trace, const std::filesystem::path& path);
// video_id,predicted_class,confidence,p_0..p_{C-1}
void write_predictions_csv(std::span<const VideoPrediction> predictions,
                           const std::filesystem::path& path);

// Target accuracies of every head over one benchmark run, plus the
// trained adapters.
struct PipelineReport {
  Adapter source_adapter;
  Adapter target_adapter;
  Adapter student_adapter;
  PseudoLabelSet pseudo_labels;
  Metrics zero_shot_teacher;
  Metrics source_head;
  Metrics target_head;
  Metrics ensemble;
  Metrics zero_shot_student;
  Metrics distilled_student;
};

struct PipelineInputs {
  TextBank teacher_bank;
  TextBank student_bank;
  EmbeddingDataset source_teacher;
  EmbeddingDataset target_teacher;
  EmbeddingDataset target_student;
  std::vector<LabelRecord> target_labels;  // for evaluation only
};

PipelineReport run_pipeline(const PipelineInputs& inputs, const TrainConfig& cfg);

}  // namespace dallv

#endif  // DALLV_PIPELINE_HPP_
