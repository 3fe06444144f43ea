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
#include "vidmatch/prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vidmatch {

ProbMatrix::ProbMatrix(std::initializer_list<std::initializer_list<double>> init) : rows(init.size()) {
  for (const auto& r : init) {
    if (cols == 0) cols = r.size();
    if (r.size() != cols) throw ShapeError("ragged probability rows");
    v.insert(v.end(), r.begin(), r.end());
  }
}

ProbMatrix softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [rows, classes], got " + shape_string(logits.shape()));
  ProbMatrix p(logits.dim(0), logits.dim(1));
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto z = logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (std::size_t j = 0; j < p.cols; ++j) sum += p(i, j) = std::exp(static_cast<double>(z[j]) - mx);
    for (std::size_t j = 0; j < p.cols; ++j) p(i, j) /= sum;
  }
  return p;
}

ProbMatrix slice_rows(const ProbMatrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows) throw ShapeError("row slice out of range");
  ProbMatrix out(end - begin, m.cols);
  std::copy(m.v.begin() + static_cast<std::ptrdiff_t>(begin * m.cols),
            m.v.begin() + static_cast<std::ptrdiff_t>(end * m.cols), out.v.begin());
  return out;
}

ProbMatrix softmax_backward(const ProbMatrix& probs, const ProbMatrix& dprobs) {
  if (probs.rows != dprobs.rows || probs.cols != dprobs.cols) throw ShapeError("softmax_backward shape mismatch");
  ProbMatrix dz(probs.rows, probs.cols);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    double inner = 0;
    for (std::size_t j = 0; j < probs.cols; ++j) inner += probs(i, j) * dprobs(i, j);
    for (std::size_t j = 0; j < probs.cols; ++j) dz(i, j) = probs(i, j) * (dprobs(i, j) - inner);
  }
  return dz;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void check_simplex(const ProbMatrix& m, double tol, const char* what) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double sum = 0;
    for (double x : m.row(i)) {
      if (!(x >= -tol)) throw ValidationError(std::string(what) + ": negative or NaN probability in row " + std::to_string(i));
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol)
      throw ValidationError(std::string(what) + ": row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

}  // namespace vidmatch
