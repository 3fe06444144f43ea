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

#include <span>
#include <vector>

#include "vidmatch/tensor.hpp"

namespace vidmatch {

/// Row-major double matrix of class probabilities or their gradients, [rows, cols].
struct ProbMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  ProbMatrix() = default;
  ProbMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  ProbMatrix(std::initializer_list<std::initializer_list<double>> init);

  std::span<double> row(std::size_t i) { return {v.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {v.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  bool empty() const { return rows == 0; }
};

/// Row softmax of logits [rows, cols], computed in double.
ProbMatrix softmax(const Tensor& logits);
/// Rows [begin, end) of m.
ProbMatrix slice_rows(const ProbMatrix& m, std::size_t begin, std::size_t end);
/// dL/dlogits from dL/dprobs through the softmax Jacobian: p * (g - <p, g>).
ProbMatrix softmax_backward(const ProbMatrix& probs, const ProbMatrix& dprobs);

double sigmoid(double x);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

/// Throws ValidationError when a row leaves the simplex by more than tol.
void check_simplex(const ProbMatrix& m, double tol, const char* what);

}  // namespace vidmatch
