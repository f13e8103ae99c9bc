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

// Training objectives. Every loss takes a model distribution p and reports
// its gradient with respect to logits z such that p = softmax(z); any logit
// vector consistent with p (for example ln p) yields the same gradient, which
// lets callers backpropagate through distributions that are themselves
// averages of softmaxes.
//
// Gradients are those of the unclamped objectives; the log clamp only
// guards the reported values.

#ifndef DALLV_LOSSES_HPP_
#define DALLV_LOSSES_HPP_

#include <cstddef>

#include "dallv/tensor.hpp"

namespace dallv {

// Ground-truth (or pseudo) similarity scores over C classes.
struct TargetDist {
  ProbDist q;

  static TargetDist hard(std::size_t classes, std::size_t label) {
    return TargetDist{one_hot(classes, label)};
  }
};

struct LossValueAndGrad {
  double value = 0.0;
  DenseVector grad_logits;
};

// Renormalized power transform p^(1/tau) / Z, i.e. the softmax of the
// underlying logits divided by tau.
ProbDist temper(const ProbDist& p, double tau);

// KL(q || p): cross-entropy against q up to q's entropy.
LossValueAndGrad similarity_kl_loss(const ProbDist& video_dist,
                                    const TargetDist& target);

// KL(temper(ensemble) || temper(student)). With compensation on, the gradient
// (not the value) is multiplied by tau^2 so its scale does not shrink as the
// temperature grows.
LossValueAndGrad tempered_distill_kl(const ProbDist& student_dist,
                                     const ProbDist& ensemble_dist,
                                     double tau_distill,
                                     bool tau_sq_compensation = true);

// alpha * CE(student, hard_label) + (1 - alpha) * tempered KL.
LossValueAndGrad blended_distill_loss(const ProbDist& student_dist,
                                      const ProbDist& ensemble_dist,
                                      std::size_t hard_label, double alpha,
                                      double tau_distill,
                                      bool tau_sq_compensation = true);

// Cross-entropy with its logit gradient.
LossValueAndGrad cross_entropy_loss(const ProbDist& dist, std::size_t label);

}  // namespace dallv

#endif  // DALLV_LOSSES_HPP_
