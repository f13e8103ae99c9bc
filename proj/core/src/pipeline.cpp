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

#include "dallv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "csv.hpp"
#include "dallv/error.hpp"
#include "dallv/random.hpp"

namespace dallv {

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, why);
  };
  if (!(tau_sim > 0.0)) fail("tau_sim must be positive");
  if (!(tau_distill > 0.0)) fail("tau_distill must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0, 1]");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(percentile > 0.0 && percentile < 1.0)) fail("percentile must be in (0, 1)");
  if (!(residual_ratio >= 0.0 && residual_ratio <= 1.0)) {
    fail("residual_ratio must be in [0, 1]");
  }
}

double resolve_tau_sim(const TrainConfig& cfg, const TextBank& bank) {
  if (bank.logit_temperature > 0.0 && std::isfinite(bank.logit_temperature)) {
    return bank.logit_temperature;
  }
  return cfg.tau_sim;
}

ProbDist forward_adapted_video(const Adapter& adapter, const Matrix& frames,
                               const ClassPrototypes& protos,
                               AdaptedVideoPass& pass) {
  const std::size_t K = frames.rows();
  if (K == 0) throw Error(ErrorCode::kEmptyVideo, "video has no frames");
  if (adapter.input_dim() != frames.cols() || protos.dim != frames.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "frames of dim " + std::to_string(frames.cols()) +
                    ", adapter dim " + std::to_string(adapter.input_dim()) +
                    ", prototype dim " + std::to_string(protos.dim));
  }
  pass.frames.resize(K);
  std::vector<double> acc(protos.classes(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    AdaptedVideoPass::Frame& f = pass.frames[k];
    const DenseVector y = adapter.forward(frames.row(k), f.cache);
    f.norm = l2_norm(y);
    if (f.norm > kMinNorm) {
      f.unit = l2_normalize(y);
      f.probs = softmax(protos.prototypes.multiply(f.unit), protos.tau_sim);
    } else {
      // Every output unit is inactive: the frame carries no evidence.
      f.unit.clear();
      f.probs = uniform_dist(protos.classes());
    }
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += f.probs[c];
  }
  for (double& v : acc) v /= static_cast<double>(K);
  pass.dist = ProbDist(std::move(acc));
  return pass.dist;
}

void backward_adapted_video(const Adapter& adapter, const ClassPrototypes& protos,
                            const AdaptedVideoPass& pass,
                            std::span<const double> grad_logits,
                            std::span<double> param_grads) {
  const std::size_t C = protos.classes();
  const std::size_t d = protos.dim;
  const std::size_t K = pass.frames.size();
  if (grad_logits.size() != C || pass.dist.size() != C) {
    throw Error(ErrorCode::kLengthMismatch, "video gradient has " +
                                                std::to_string(grad_logits.size()) +
                                                " classes, expected " +
                                                std::to_string(C));
  }
  std::vector<double> weighted(C);
  DenseVector grad_unit(d);
  DenseVector grad_y(d);
  for (std::size_t k = 0; k < K; ++k) {
    const AdaptedVideoPass::Frame& f = pass.frames[k];
    if (f.unit.empty()) continue;
    // The video distribution is a mean of frame softmaxes. With g the logit
    // gradient at the video level, the frame logit gradient is
    // w * g - p_k <w, g>, where w_j = p_kj / (K p_j) is the share of class j
    // mass the frame contributes.
    double inner = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      const double w = pass.dist[j] > 0.0
                           ? f.probs[j] / (static_cast<double>(K) * pass.dist[j])
                           : 0.0;
      weighted[j] = w * grad_logits[j];
      inner += weighted[j];
    }
    std::fill(grad_unit.begin(), grad_unit.end(), 0.0);
    for (std::size_t j = 0; j < C; ++j) {
      const double g_cos = (weighted[j] - f.probs[j] * inner) / protos.tau_sim;
      if (g_cos == 0.0) continue;
      const auto proto = protos.prototypes.row(j);
      for (std::size_t i = 0; i < d; ++i) grad_unit[i] += g_cos * proto[i];
    }
    // Through y -> y / |y|.
    const double radial = dot(grad_unit, f.unit);
    for (std::size_t i = 0; i < d; ++i) {
      grad_y[i] = (grad_unit[i] - radial * f.unit[i]) / f.norm;
    }
    adapter.backward_accumulate(f.cache, grad_y, param_grads);
  }
}

std::vector<VideoPrediction> classify(const EmbeddingDataset& dataset,
                                      const ClassPrototypes& protos,
                                      const Adapter* adapter) {
  if (adapter == nullptr) return zeroshot_classify(dataset, protos);
  std::vector<VideoPrediction> out;
  out.reserve(dataset.size());
  AdaptedVideoPass pass;
  for (const Video& v : dataset.videos) {
    out.push_back(make_prediction(v.id, forward_adapted_video(*adapter, v.frames, protos, pass)));
  }
  return out;
}

namespace {

std::uint64_t derived_seed(std::uint64_t seed, std::string_view purpose) {
  return CounterRng::stream(seed, purpose).next_u64();
}

AdamWOptions optimizer_options(const TrainConfig& cfg) {
  AdamWOptions o;
  o.lr = cfg.lr;
  o.weight_decay = cfg.weight_decay;
  return o;
}

std::vector<ParamBuffer> adapter_buffers(Adapter& a, std::span<const double> grads,
                                         bool decay_biases) {
  auto g = [&](std::size_t off, std::size_t n) { return grads.subspan(off, n); };
  const std::size_t d = a.input_dim();
  const std::size_t h = a.hidden_dim();
  return {
      ParamBuffer{a.w1(), g(a.w1_offset(), h * d), true},
      ParamBuffer{a.b1(), g(a.b1_offset(), h), decay_biases},
      ParamBuffer{a.w2(), g(a.w2_offset(), d * h), true},
      ParamBuffer{a.b2(), g(a.b2_offset(), d), decay_biases},
  };
}

// Mini-batch AdamW over `dataset` in a seeded shuffled order. For each batch
// `protos_for_batch()` supplies the classifier and `loss_for(i, dist)` the
// objective on video i.
template <typename ProtosFn, typename LossFn>
LossTrace run_training(Adapter& adapter, const EmbeddingDataset& dataset,
                       const TrainConfig& cfg, std::string_view purpose,
                       ProtosFn&& protos_for_batch, LossFn&& loss_for) {
  LossTrace trace;
  if (cfg.epochs == 0 || dataset.empty()) return trace;
  AdamW optimizer(optimizer_options(cfg));
  CounterRng order_rng = CounterRng::stream(cfg.seed, std::string(purpose) + "/order");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grads(adapter.parameter_count());
  AdaptedVideoPass pass;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      const ClassPrototypes& protos = protos_for_batch();
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const ProbDist& dist =
            forward_adapted_video(adapter, dataset.videos[i].frames, protos, pass);
        LossValueAndGrad loss = loss_for(i, dist);
        epoch_loss += loss.value;
        for (double& g : loss.grad_logits) g *= inv_batch;
        backward_adapted_video(adapter, protos, pass, loss.grad_logits, grads);
      }
      const auto buffers = adapter_buffers(adapter, grads, cfg.decay_biases);
      optimizer.step(buffers);
    }
    trace.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return trace;
}

// Supervised adapter training with one template sampled per optimizer step.
TrainResult train_on_labels(const EmbeddingDataset& data,
                            const std::vector<std::size_t>& labels,
                            const TextBank& bank, const TrainConfig& cfg,
                            std::string_view purpose) {
  cfg.validate();
  if (!data.empty() && data.dim != bank.dim) {
    throw Error(ErrorCode::kDimMismatch,
                "dataset of dim " + std::to_string(data.dim) +
                    " against a text bank of dim " + std::to_string(bank.dim));
  }
  const double tau = resolve_tau_sim(cfg, bank);
  std::vector<ClassPrototypes> per_template;
  per_template.reserve(bank.template_count());
  for (std::size_t t = 0; t < bank.template_count(); ++t) {
    per_template.push_back(build_prototypes(bank, std::vector<std::size_t>{t}, tau));
  }
  TrainResult out;
  out.adapter = init_adapter(bank.dim, derived_seed(cfg.seed, purpose), cfg.residual_ratio);
  CounterRng template_rng =
      CounterRng::stream(cfg.seed, std::string(purpose) + "/template");
  const std::size_t classes = bank.classes();
  out.loss_trace = run_training(
      out.adapter, data, cfg, purpose,
      [&]() -> const ClassPrototypes& {
        return per_template[template_rng.below(per_template.size())];
      },
      [&](std::size_t i, const ProbDist& dist) {
        return similarity_kl_loss(dist, TargetDist::hard(classes, labels[i]));
      });
  return out;
}

}  // namespace

TrainResult train_source_adapter(const EmbeddingDataset& source,
                                 const TextBank& bank, const TrainConfig& cfg) {
  std::vector<std::size_t> labels;
  labels.reserve(source.size());
  for (const Video& v : source.videos) {
    if (!v.labeled()) {
      throw Error(ErrorCode::kUnlabeledSourceVideo,
                  "source video " + v.id + " has no label");
    }
    if (static_cast<std::size_t>(v.label) >= bank.classes()) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "source video " + v.id + " has label " + std::to_string(v.label));
    }
    labels.push_back(static_cast<std::size_t>(v.label));
  }
  return train_on_labels(source, labels, bank, cfg, "source-adapter");
}

TargetResult adapt_target(const EmbeddingDataset& target, const TextBank& bank,
                          const TrainConfig& cfg) {
  cfg.validate();
  const ClassPrototypes raw =
      build_prototypes(bank, std::nullopt, resolve_tau_sim(cfg, bank));
  const std::vector<VideoPrediction> preds = zeroshot_classify(target, raw);

  TargetResult out;
  out.pseudo_labels = filter_by_class_percentile(preds, cfg.percentile);

  EmbeddingDataset kept;
  kept.dim = target.dim;
  kept.space = target.space;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const PseudoLabelEntry& e = out.pseudo_labels.entries[i];
    if (!e.kept) continue;
    Video v = target.videos[i];
    v.label = static_cast<std::int32_t>(e.pseudo_label);
    kept.videos.push_back(std::move(v));
    labels.push_back(e.pseudo_label);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyAfterFiltering,
                "no target video survived pseudo-label filtering");
  }
  TrainResult trained = train_on_labels(kept, labels, bank, cfg, "target-adapter");
  out.adapter = std::move(trained.adapter);
  out.loss_trace = std::move(trained.loss_trace);
  return out;
}

TeacherOutputs run_teachers(const TeacherBundle& bundle,
                            const EmbeddingDataset& target_teacher) {
  if (bundle.source_adapter.input_dim() != bundle.prototypes.dim ||
      bundle.target_adapter.input_dim() != bundle.prototypes.dim) {
    throw Error(ErrorCode::kDimMismatch,
                "teacher adapters must match the teacher prototype dim " +
                    std::to_string(bundle.prototypes.dim));
  }
  TeacherOutputs out;
  out.heads.zero_shot = classify(target_teacher, bundle.prototypes, nullptr);
  out.heads.source_adapter = classify(target_teacher, bundle.prototypes, &bundle.source_adapter);
  out.heads.target_adapter = classify(target_teacher, bundle.prototypes, &bundle.target_adapter);
  out.ensemble = ensemble_average(out.heads);
  out.hard_labels.reserve(out.ensemble.size());
  for (std::size_t i = 0; i < out.ensemble.size(); ++i) {
    out.hard_labels.push_back(majority_vote(out.heads.zero_shot[i].predicted_class,
                                            out.heads.source_adapter[i].predicted_class,
                                            out.heads.target_adapter[i].predicted_class,
                                            out.ensemble[i]));
  }
  return out;
}

DistillResult distill(const TeacherBundle& bundle,
                      const EmbeddingDataset& target_teacher,
                      const EmbeddingDataset& target_student,
                      const TextBank& student_bank, const TrainConfig& cfg,
                      DistillObjective objective) {
  cfg.validate();
  const AlignedPair aligned = align_by_id(target_teacher, target_student);
  if (!aligned.first.empty() && aligned.first.dim != bundle.prototypes.dim) {
    throw Error(ErrorCode::kDimMismatch, "teacher target set has dim " +
                                             std::to_string(aligned.first.dim) +
                                             ", teacher prototypes " +
                                             std::to_string(bundle.prototypes.dim));
  }
  if (!aligned.second.empty() && aligned.second.dim != student_bank.dim) {
    throw Error(ErrorCode::kDimMismatch, "student target set has dim " +
                                             std::to_string(aligned.second.dim) +
                                             ", student bank " +
                                             std::to_string(student_bank.dim));
  }
  if (student_bank.classes() != bundle.prototypes.classes()) {
    throw Error(ErrorCode::kClassCountMismatch,
                "student bank and teacher prototypes disagree on class count");
  }

  // Teachers are frozen, so their outputs are computed once up front.
  const TeacherOutputs teachers = run_teachers(bundle, aligned.first);
  const ClassPrototypes student_protos = build_prototypes(
      student_bank, std::nullopt, resolve_tau_sim(cfg, student_bank));

  DistillResult out;
  out.student = init_adapter(student_bank.dim, derived_seed(cfg.seed, "student-adapter"),
                             cfg.residual_ratio);
  out.loss_trace = run_training(
      out.student, aligned.second, cfg, "student-adapter",
      [&]() -> const ClassPrototypes& { return student_protos; },
      [&](std::size_t i, const ProbDist& dist) {
        if (objective == DistillObjective::kHardLabelOnly) {
          return cross_entropy_loss(dist, teachers.hard_labels[i]);
        }
        return blended_distill_loss(dist, teachers.ensemble[i], teachers.hard_labels[i],
                                    cfg.alpha, cfg.tau_distill, cfg.tau_sq_compensation);
      });
  return out;
}

double Metrics::class_accuracy(std::size_t c) const noexcept {
  if (class_count[c] == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(class_correct[c]) / static_cast<double>(class_count[c]);
}

Metrics evaluate_predictions(const EmbeddingDataset& labeled,
                             std::span<const VideoPrediction> predictions,
                             std::vector<std::string> class_names) {
  const std::size_t C = class_names.size();
  if (predictions.size() != labeled.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predictions do not cover the dataset");
  }
  Metrics m;
  m.class_names = std::move(class_names);
  m.class_count.assign(C, 0);
  m.class_correct.assign(C, 0);
  m.confusion.assign(C, std::vector<std::size_t>(C, 0));
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Video& v = labeled.videos[i];
    if (!v.labeled()) {
      throw Error(ErrorCode::kMissingLabels, "video " + v.id + " has no label");
    }
    if (predictions[i].video_id != v.id) {
      throw Error(ErrorCode::kMisalignedBundle,
                  "prediction " + predictions[i].video_id + " for video " + v.id);
    }
    const auto truth = static_cast<std::size_t>(v.label);
    const std::size_t pred = predictions[i].predicted_class;
    if (truth >= C || pred >= C) {
      throw Error(ErrorCode::kLabelOutOfRange, "class index out of range for " + v.id);
    }
    ++m.total;
    ++m.class_count[truth];
    ++m.confusion[truth][pred];
    if (truth == pred) {
      ++m.correct;
      ++m.class_correct[truth];
    }
  }
  return m;
}

Metrics evaluate(const EmbeddingDataset& labeled, const ClassPrototypes& protos,
                 const Adapter* adapter, std::vector<std::string> class_names) {
  for (const Video& v : labeled.videos) {
    if (!v.labeled()) {
      throw Error(ErrorCode::kMissingLabels, "video " + v.id + " has no label");
    }
  }
  const std::vector<VideoPrediction> preds = classify(labeled, protos, adapter);
  return evaluate_predictions(labeled, preds, std::move(class_names));
}

void write_metrics_csv(const Metrics& m, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "scope,class_index,class_name,count,correct,accuracy\n";
  for (std::size_t c = 0; c < m.class_names.size(); ++c) {
    os << "class," << c << ',' << detail::csv_field(m.class_names[c]) << ','
       << m.class_count[c] << ',' << m.class_correct[c] << ','
       << detail::format_double(m.class_accuracy(c)) << '\n';
  }
  os << "overall,,," << m.total << ',' << m.correct << ','
     << detail::format_double(m.accuracy()) << '\n';
  detail::write_file_atomic(path, os.str());
}

void write_confusion_csv(const Metrics& m, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "true_class";
  for (std::size_t c = 0; c < m.class_names.size(); ++c) os << ",pred_" << c;
  os << '\n';
  for (std::size_t t = 0; t < m.confusion.size(); ++t) {
    os << t;
    for (std::size_t p : m.confusion[t]) os << ',' << p;
    os << '\n';
  }
  detail::write_file_atomic(path, os.str());
}

void write_loss_trace_csv(const LossTrace& trace, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e) {
    os << e << ',' << detail::format_double(trace[e]) << '\n';
  }
  detail::write_file_atomic(path, os.str());
}

void write_predictions_csv(std::span<const VideoPrediction> predictions,
                           const std::filesystem::path& path) {
  std::ostringstream os;
  os << "video_id,predicted_class,confidence";
  const std::size_t C = predictions.empty() ? 0 : predictions.front().dist.size();
  for (std::size_t c = 0; c < C; ++c) os << ",p_" << c;
  os << '\n';
  for (const VideoPrediction& p : predictions) {
    os << detail::csv_field(p.video_id) << ',' << p.predicted_class << ','
       << detail::format_double(p.confidence);
    for (double v : p.dist.probs) os << ',' << detail::format_double(v);
    os << '\n';
  }
  detail::write_file_atomic(path, os.str());
}

PipelineReport run_pipeline(const PipelineInputs& in, const TrainConfig& cfg) {
  PipelineReport r;
  const std::vector<std::string>& names = in.teacher_bank.class_names;
  const EmbeddingDataset target_teacher = attach_labels(in.target_teacher, in.target_labels);
  const EmbeddingDataset target_student = attach_labels(in.target_student, in.target_labels);

  TrainResult source = train_source_adapter(in.source_teacher, in.teacher_bank, cfg);
  TargetResult target = adapt_target(in.target_teacher, in.teacher_bank, cfg);

  TeacherBundle bundle;
  bundle.prototypes = build_prototypes(in.teacher_bank, std::nullopt,
                                       resolve_tau_sim(cfg, in.teacher_bank));
  bundle.source_adapter = source.adapter;
  bundle.target_adapter = target.adapter;
  DistillResult student =
      distill(bundle, in.target_teacher, in.target_student, in.student_bank, cfg);

  const TeacherOutputs teachers = run_teachers(bundle, target_teacher);
  r.zero_shot_teacher = evaluate_predictions(target_teacher, teachers.heads.zero_shot, names);
  r.source_head = evaluate_predictions(target_teacher, teachers.heads.source_adapter, names);
  r.target_head = evaluate_predictions(target_teacher, teachers.heads.target_adapter, names);
  std::vector<VideoPrediction> fused;
  fused.reserve(teachers.ensemble.size());
  for (std::size_t i = 0; i < teachers.ensemble.size(); ++i) {
    fused.push_back(make_prediction(target_teacher.videos[i].id, teachers.ensemble[i]));
  }
  r.ensemble = evaluate_predictions(target_teacher, fused, names);

  const ClassPrototypes student_protos = build_prototypes(
      in.student_bank, std::nullopt, resolve_tau_sim(cfg, in.student_bank));
  r.zero_shot_student = evaluate(target_student, student_protos, nullptr, names);
  r.distilled_student = evaluate(target_student, student_protos, &student.student, names);

  r.source_adapter = std::move(source.adapter);
  r.target_adapter = std::move(target.adapter);
  r.student_adapter = std::move(student.student);
  r.pseudo_labels = std::move(target.pseudo_labels);
  return r;
}

}  // namespace dallv
