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
#include "vidmatch/threshold_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vidmatch {

std::size_t MaskResult::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }

double MaskResult::rate() const { return mask.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(mask.size()); }

SatState sat_init(std::size_t num_classes, double lambda_de) {
  if (num_classes < 2) throw ConfigError("threshold state needs at least 2 classes");
  if (!(lambda_de > 0.0 && lambda_de < 1.0)) throw ConfigError("sat.lambda_de must lie in (0, 1)");
  const double u = 1.0 / static_cast<double>(num_classes);
  SatState s;
  s.tau_global = u;
  s.p_local.assign(num_classes, u);
  s.h_tilde.assign(num_classes, u);
  s.lambda_de = lambda_de;
  return s;
}

SatState sat_update(const SatState& state, const ProbMatrix& q) {
  SatState next = state;
  ++next.step;
  if (q.rows == 0) return next;
  const std::size_t n = state.num_classes();
  if (q.cols != n) throw ShapeError("sat_update: expected " + std::to_string(n) + " classes, got " + std::to_string(q.cols));
  check_simplex(q, 1e-5, "sat_update");

  double mean_max = 0;
  std::vector<double> mean_p(n, 0.0), hist(n, 0.0);
  for (std::size_t b = 0; b < q.rows; ++b) {
    const auto row = q.row(b);
    const std::size_t k = argmax(row);
    mean_max += row[k];
    hist[k] += 1;
    for (std::size_t j = 0; j < n; ++j) mean_p[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(q.rows);
  const double l = state.lambda_de;
  next.tau_global = l * state.tau_global + (1 - l) * (mean_max * inv);
  for (std::size_t j = 0; j < n; ++j) {
    next.p_local[j] = l * state.p_local[j] + (1 - l) * (mean_p[j] * inv);
    next.h_tilde[j] = l * state.h_tilde[j] + (1 - l) * (hist[j] * inv);
  }
  return next;
}

std::vector<double> class_thresholds(const SatState& state) {
  if (state.p_local.empty()) throw ValidationError("threshold state is not initialized");
  const double mx = *std::max_element(state.p_local.begin(), state.p_local.end());
  std::vector<double> t(state.p_local.size());
  // x / x is exactly 1, so the largest class gets tau_global exactly.
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = (state.p_local[j] / mx) * state.tau_global;
  return t;
}

MaskResult compute_mask(const ProbMatrix& q, const std::vector<double>& thresholds) {
  MaskResult r;
  if (q.rows == 0) return r;
  if (q.cols != thresholds.size()) throw ShapeError("compute_mask: threshold vector length differs from class count");
  r.mask.resize(q.rows);
  r.pseudo_classes.resize(q.rows);
  r.confidences.resize(q.rows);
  for (std::size_t b = 0; b < q.rows; ++b) {
    const auto row = q.row(b);
    const std::size_t k = argmax(row);
    r.pseudo_classes[b] = static_cast<int>(k);
    r.confidences[b] = row[k];
    r.mask[b] = row[k] >= thresholds[k];
  }
  return r;
}

std::vector<double> fixed_thresholds(double tau, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("fixed thresholds need at least 2 classes");
  const double lo = 1.0 / static_cast<double>(num_classes);
  if (!(tau > lo && tau < 1.0))
    throw ConfigError("threshold.fixed must lie in (" + std::to_string(lo) + ", 1), got " + std::to_string(tau));
  return std::vector<double>(num_classes, tau);
}

void check_invariants(const SatState& s, double tol) {
  const std::size_t n = s.num_classes();
  if (n < 2 || s.h_tilde.size() != n) throw ValidationError("threshold state has inconsistent class count");
  const double lo = 1.0 / static_cast<double>(n);
  if (s.tau_global < lo - tol || s.tau_global > 1 + tol)
    throw ValidationError("tau_global out of [1/N, 1]: " + std::to_string(s.tau_global));
  auto simplex = [&](const std::vector<double>& v, const char* name) {
    double sum = 0;
    for (double x : v) {
      if (x < 0) throw ValidationError(std::string(name) + " has a negative entry");
      sum += x;
    }
    if (std::abs(sum - 1) > tol) throw ValidationError(std::string(name) + " left the simplex");
  };
  simplex(s.p_local, "p_local");
  simplex(s.h_tilde, "h_tilde");
}

}  // namespace vidmatch
