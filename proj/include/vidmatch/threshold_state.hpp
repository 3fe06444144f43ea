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

#include <cstdint>
#include <vector>

#include "vidmatch/prob.hpp"

namespace vidmatch {

/// EMA statistics behind the self-adaptive threshold and the fairness objective.
struct SatState {
  std::uint64_t step = 0;
  double tau_global = 0.0;
  std::vector<double> p_local;  // EMA of mean class probabilities
  std::vector<double> h_tilde;  // EMA of the pseudo-label histogram
  double lambda_de = 0.999;

  std::size_t num_classes() const { return p_local.size(); }
};

struct MaskResult {
  std::vector<bool> mask;
  std::vector<int> pseudo_classes;
  std::vector<double> confidences;

  std::size_t count() const;
  double rate() const;
};

SatState sat_init(std::size_t num_classes, double lambda_de);

/// One EMA step on weak-view probabilities [muB, N]. Rows must lie on the simplex within 1e-5.
/// An empty batch only advances the step counter.
SatState sat_update(const SatState& state, const ProbMatrix& q);

/// Per-class thresholds MaxNorm(p_local) * tau_global.
std::vector<double> class_thresholds(const SatState& state);

/// mask[b] = max(q_b) >= thresholds[argmax(q_b)], argmax ties to the lowest class.
MaskResult compute_mask(const ProbMatrix& q, const std::vector<double>& thresholds);

/// Constant vector for the fixed-threshold ablation; tau must lie in (1/N, 1).
std::vector<double> fixed_thresholds(double tau, std::size_t num_classes);

/// Throws ValidationError when the bounds or simplex invariants are broken.
void check_invariants(const SatState& state, double tol = 1e-9);

}  // namespace vidmatch
