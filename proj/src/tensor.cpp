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
#include "vidmatch/tensor.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace vidmatch {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t shape_elements(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Tensor::Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_elements(shape_), fill) {}

void Tensor::reshape(Shape shape) {
  if (shape_elements(shape) != data_.size())
    throw ShapeError("reshape " + shape_string(shape_) + " -> " + shape_string(shape) + ": element count differs");
  shape_ = std::move(shape);
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace vidmatch
