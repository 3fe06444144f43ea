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
#include "vidmatch/losses.hpp"

#include <algorithm>
#include <cmath>

namespace vidmatch {

namespace {

double safe_log(double x) { return std::log(std::max(x, kLossEps)); }

// d/dp of -ln(max(p, eps)).
double neg_log_grad(double p) { return p > kLossEps ? -1.0 / p : 0.0; }

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss term ") + name);
}

}  // namespace

void validate(const LossWeights& w) {
  for (double v : {w.omega_m, w.omega_f, w.omega_a, w.rho})
    if (!std::isfinite(v) || v < 0) throw ConfigError("loss weights must be finite and >= 0");
}

SupervisedResult supervised_losses(const ProbMatrix& cls_probs, const ProbMatrix& head_probs,
                                   const std::vector<int>& labels) {
  if (cls_probs.rows != labels.size() || head_probs.rows != labels.size() || cls_probs.cols != head_probs.cols)
    throw ShapeError("supervised_losses: rows and labels differ");
  SupervisedResult r;
  r.d_cls = ProbMatrix(cls_probs.rows, cls_probs.cols);
  r.d_head = ProbMatrix(head_probs.rows, head_probs.cols);
  if (labels.empty()) return r;
  const double inv = 1.0 / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= cls_probs.cols)
      throw ValidationError("label " + std::to_string(labels[i]) + " out of range at row " + std::to_string(i));
    const auto y = static_cast<std::size_t>(labels[i]);
    r.l_cs -= safe_log(cls_probs(i, y)) * inv;
    r.l_ps -= safe_log(head_probs(i, y)) * inv;
    r.d_cls(i, y) = neg_log_grad(cls_probs(i, y)) * inv;
    r.d_head(i, y) = neg_log_grad(head_probs(i, y)) * inv;
  }
  return r;
}

ConsistencyResult consistency_loss(const ProbMatrix& weak, const ProbMatrix& strong,
                                   const std::vector<double>& thresholds) {
  if (weak.rows != strong.rows || weak.cols != strong.cols) throw ShapeError("consistency_loss: view shapes differ");
  ConsistencyResult r;
  r.mask = compute_mask(weak, thresholds);
  r.d_strong = ProbMatrix(strong.rows, strong.cols);
  if (weak.rows == 0) return r;
  const double inv = 1.0 / static_cast<double>(weak.rows);
  for (std::size_t b = 0; b < weak.rows; ++b) {
    if (!r.mask.mask[b]) continue;
    const auto k = static_cast<std::size_t>(r.mask.pseudo_classes[b]);
    r.l_match -= safe_log(strong(b, k)) * inv;
    r.d_strong(b, k) = neg_log_grad(strong(b, k)) * inv;
  }
  r.mask_rate = r.mask.rate();
  return r;
}

FairnessResult fairness_loss(const SatState& state, const ProbMatrix& strong, const MaskResult& mask) {
  const std::size_t n = state.num_classes();
  if (strong.cols != n || mask.mask.size() != strong.rows) throw ShapeError("fairness_loss: shape mismatch");
  FairnessResult r;
  r.d_strong = ProbMatrix(strong.rows, strong.cols);
  const std::size_t m = mask.count();
  if (m == 0) return r;
  r.skipped = false;

  std::vector<double> p_bar(n, 0.0), h_bar(n, 0.0);
  for (std::size_t b = 0; b < strong.rows; ++b) {
    if (!mask.mask[b]) continue;
    const auto row = strong.row(b);
    for (std::size_t j = 0; j < n; ++j) p_bar[j] += row[j];
    h_bar[argmax(row)] += 1;
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < n; ++j) {
    p_bar[j] = std::max(p_bar[j] * inv, kLossEps);
    h_bar[j] = std::max(h_bar[j] * inv, kLossEps);
  }

  auto sum_norm_ratio = [n](const std::vector<double>& num, const std::vector<double>& den) {
    std::vector<double> out(n);
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += out[j] = num[j] / std::max(den[j], kLossEps);
    for (auto& v : out) v /= sum;
    return out;
  };
  r.a = sum_norm_ratio(state.p_local, state.h_tilde);
  r.b = sum_norm_ratio(p_bar, h_bar);
  for (std::size_t j = 0; j < n; ++j) r.l_fair += r.a[j] * safe_log(r.b[j]);

  // With sum(a) = 1, dL/dp_bar_j = (a_j - b_j) / p_bar_j; h_bar is piecewise constant.
  std::vector<double> d_pbar(n);
  for (std::size_t j = 0; j < n; ++j) d_pbar[j] = (r.a[j] - r.b[j]) / p_bar[j];
  for (std::size_t b = 0; b < strong.rows; ++b) {
    if (!mask.mask[b]) continue;
    for (std::size_t j = 0; j < n; ++j) r.d_strong(b, j) = d_pbar[j] * inv;
  }
  return r;
}

FairnessResult fairness_loss(const SatState& state, const ProbMatrix& weak, const ProbMatrix& strong,
                             const std::vector<double>& thresholds) {
  return fairness_loss(state, strong, compute_mask(weak, thresholds));
}

AlignResult align_loss(const ProbMatrix& cls_probs, const ProbMatrix& soft_labels, const std::vector<double>& disc_probs,
                       const std::vector<double>& targets, double rho, double lambda_m) {
  if (cls_probs.rows != soft_labels.rows || cls_probs.cols != soft_labels.cols || disc_probs.size() != cls_probs.rows ||
      targets.size() != cls_probs.rows)
    throw ShapeError("align_loss: shape mismatch");
  AlignResult r;
  r.d_cls = ProbMatrix(cls_probs.rows, cls_probs.cols);
  r.d_disc.assign(disc_probs.size(), 0.0);
  if (cls_probs.rows == 0) return r;
  const double inv = 1.0 / static_cast<double>(cls_probs.rows);
  for (std::size_t b = 0; b < cls_probs.rows; ++b) {
    for (std::size_t j = 0; j < cls_probs.cols; ++j) {
      const double y = soft_labels(b, j);
      if (y == 0) continue;
      r.l_class -= y * safe_log(cls_probs(b, j)) * inv;
      r.d_cls(b, j) = rho * y * neg_log_grad(cls_probs(b, j)) * inv;
    }
    const double p = disc_probs[b], z = targets[b];
    r.l_disc -= (z * safe_log(p) + (1 - z) * safe_log(1 - p)) * inv;
    r.d_disc[b] = lambda_m * (z * neg_log_grad(p) - (1 - z) * neg_log_grad(1 - p)) * inv;
  }
  r.l_align = rho * r.l_class + lambda_m * r.l_disc;
  return r;
}

double total_loss(LossBundle& parts, const LossWeights& w) {
  check_finite(parts.l_cs, "L_cs");
  check_finite(parts.l_ps, "L_ps");
  check_finite(parts.l_match, "L_match");
  check_finite(parts.l_fair, "L_fair");
  check_finite(parts.l_align, "L_align");
  parts.total = w.omega_m * (parts.l_ps + parts.l_match) + w.omega_f * parts.l_fair + w.omega_a * parts.l_align + parts.l_cs;
  check_finite(parts.total, "total");
  return parts.total;
}

}  // namespace vidmatch
