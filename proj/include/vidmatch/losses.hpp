/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>
#include <vector>

#include "vidmatch/prob.hpp"
#include "vidmatch/threshold_state.hpp"

namespace vidmatch {

inline constexpr double kLossEps = 1e-8;

struct LossWeights {
  double omega_m = 1.0;
  double omega_f = 0.01;
  double omega_a = 1.0;
  /// Used unless rho_from_lambda is set, in which case rho = lambda_m each step.
  double rho = 1.0;
  bool rho_from_lambda = false;

  double resolved_rho(double lambda_m) const { return rho_from_lambda ? lambda_m : rho; }
};

void validate(const LossWeights& w);

struct LossBundle {
  double l_cs = 0, l_ps = 0, l_match = 0, l_fair = 0, l_align = 0, total = 0;
  double mask_rate = 0;

  friend bool operator==(const LossBundle&, const LossBundle&) = default;
};

/// Every loss returns its value and dL/dprobs for the inputs that carry gradient.
struct SupervisedResult {
  double l_cs = 0, l_ps = 0;
  ProbMatrix d_cls, d_head;
};

/// Mean cross-entropy of each head against integer labels.
SupervisedResult supervised_losses(const ProbMatrix& cls_probs, const ProbMatrix& head_probs,
                                   const std::vector<int>& labels);

struct ConsistencyResult {
  double l_match = 0;
  double mask_rate = 0;
  MaskResult mask;
  ProbMatrix d_strong;
};

/// (1/muB) sum over masked rows of CE(onehot(argmax q_b), Q_b). q is a constant target.
ConsistencyResult consistency_loss(const ProbMatrix& weak, const ProbMatrix& strong,
                                   const std::vector<double>& thresholds);

struct FairnessResult {
  double l_fair = 0;
  bool skipped = true;
  ProbMatrix d_strong;
  std::vector<double> a, b;  // SumNorm(p_local / h_tilde), SumNorm(p_bar / h_bar)
};

/// sum_n a_n ln b_n over the masked strong-view rows; zero and skipped when the mask is empty.
FairnessResult fairness_loss(const SatState& state, const ProbMatrix& strong, const MaskResult& mask);
/// Convenience form that derives the mask from weak-view probabilities and thresholds.
FairnessResult fairness_loss(const SatState& state, const ProbMatrix& weak, const ProbMatrix& strong,
                             const std::vector<double>& thresholds);

struct AlignResult {
  double l_align = 0;
  double l_class = 0;  // mean soft-label CE, before rho
  double l_disc = 0;   // mean binary CE, before lambda_m
  ProbMatrix d_cls;
  std::vector<double> d_disc;
};

/// mean_b [rho * H(soft_b, cls_b) + lambda_m * BCE(z_b, d_b)].
AlignResult align_loss(const ProbMatrix& cls_probs, const ProbMatrix& soft_labels, const std::vector<double>& disc_probs,
                       const std::vector<double>& targets, double rho, double lambda_m);

/// omega_m (L_ps + L_match) + omega_f L_fair + omega_a L_align + L_cs. Fills parts.total.
/// Throws NumericError naming the first non-finite term.
double total_loss(LossBundle& parts, const LossWeights& w);

}  // namespace vidmatch
