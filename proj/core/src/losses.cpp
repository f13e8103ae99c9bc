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

#include "dallv/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dallv/error.hpp"

namespace dallv {

namespace {

void check_lengths(const ProbDist& a, const ProbDist& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw Error(ErrorCode::kLengthMismatch,
                "distributions over " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " classes");
  }
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kNonPositiveTemperature,
                "distillation temperature must be positive, got " +
                    std::to_string(tau));
  }
}

// Given s_c = p_c * dL/dp_c, returns dL/dz for p = softmax(z).
DenseVector softmax_vjp(const ProbDist& p, const DenseVector& s) {
  double total = 0.0;
  for (double v : s) total += v;
  DenseVector g(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) g[c] = s[c] - p[c] * total;
  return g;
}

// s_c for L = KL(target || model), i.e. -target_c. This is the gradient of
// the unclamped loss: the clamp only guards the reported value, otherwise a
// confidently wrong prediction (model_c below the clamp) gets no gradient at
// all and training never recovers it.
DenseVector kl_scaled_grad(const ProbDist& target) {
  DenseVector s(target.size(), 0.0);
  for (std::size_t c = 0; c < target.size(); ++c) s[c] = -target[c];
  return s;
}

}  // namespace

ProbDist temper(const ProbDist& p, double tau) {
  check_tau(tau);
  if (p.size() == 0) throw Error(ErrorCode::kLengthMismatch, "empty distribution");
  const double top = p[argmax(p.view())];
  if (!(top > 0.0)) {
    throw Error(ErrorCode::kNonFiniteValue, "distribution has no positive mass");
  }
  const double log_top = std::log(top);
  std::vector<double> t(p.size());
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    t[c] = p[c] > 0.0 ? std::exp((std::log(p[c]) - log_top) / tau) : 0.0;
    total += t[c];
  }
  for (double& v : t) v /= total;
  return ProbDist(std::move(t));
}

LossValueAndGrad similarity_kl_loss(const ProbDist& video_dist,
                                    const TargetDist& target) {
  check_lengths(video_dist, target.q);
  LossValueAndGrad out;
  out.value = kl_div(target.q, video_dist);
  out.grad_logits = softmax_vjp(video_dist, kl_scaled_grad(target.q));
  return out;
}

LossValueAndGrad tempered_distill_kl(const ProbDist& student_dist,
                                     const ProbDist& ensemble_dist,
                                     double tau_distill,
                                     bool tau_sq_compensation) {
  check_tau(tau_distill);
  check_lengths(student_dist, ensemble_dist);
  const ProbDist t_student = temper(student_dist, tau_distill);
  const ProbDist t_ensemble = temper(ensemble_dist, tau_distill);

  LossValueAndGrad out;
  out.value = kl_div(t_ensemble, t_student);
  // Tempered student = softmax(z / tau): chain through the inner softmax,
  // then the 1/tau scaling of the logits.
  out.grad_logits =
      softmax_vjp(t_student, kl_scaled_grad(t_ensemble));
  const double scale =
      tau_sq_compensation ? tau_distill : 1.0 / tau_distill;
  for (double& g : out.grad_logits) g *= scale;
  return out;
}

LossValueAndGrad cross_entropy_loss(const ProbDist& dist, std::size_t label) {
  LossValueAndGrad out;
  out.value = cross_entropy(dist, label);
  DenseVector s(dist.size(), 0.0);
  s[label] = -1.0;
  out.grad_logits = softmax_vjp(dist, s);
  return out;
}

LossValueAndGrad blended_distill_loss(const ProbDist& student_dist,
                                      const ProbDist& ensemble_dist,
                                      std::size_t hard_label, double alpha,
                                      double tau_distill,
                                      bool tau_sq_compensation) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kAlphaOutOfRange,
                "alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  const LossValueAndGrad ce = cross_entropy_loss(student_dist, hard_label);
  const LossValueAndGrad kl = tempered_distill_kl(
      student_dist, ensemble_dist, tau_distill, tau_sq_compensation);
  LossValueAndGrad out;
  out.value = alpha * ce.value + (1.0 - alpha) * kl.value;
  out.grad_logits.resize(ce.grad_logits.size());
  for (std::size_t c = 0; c < out.grad_logits.size(); ++c) {
    out.grad_logits[c] =
        alpha * ce.grad_logits[c] + (1.0 - alpha) * kl.grad_logits[c];
  }
  return out;
}

}  // namespace dallv
