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

// Minimal layer stack with hand-written backward passes.
//
// Backbone activations use channel-major layout [C, N, T, H, W] so that a
// convolution over the whole batch is a single GEMM against the im2col
// matrix. Dense activations (embeddings, logits) are [N, features].

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vidmatch/tensor.hpp"

namespace vidmatch::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor momentum;
};

/// Owns every trainable array. Addresses are stable for the registry's lifetime.
class ParamRegistry {
 public:
  Parameter& add(std::string name, Tensor::Shape shape);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::size_t count() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

using Triple = std::array<std::size_t, 3>;

struct Conv3dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Triple kernel{3, 3, 3};
  Triple stride{1, 1, 1};
  Triple padding{1, 1, 1};
};

/// Output spatial extent of a strided window over `extent`.
Triple window_output(const Triple& extent, const Triple& kernel, const Triple& stride, const Triple& pad);

class Conv3d {
 public:
  Conv3d(ParamRegistry& reg, const std::string& name, const Conv3dSpec& spec, Rng& init_rng);

  Tensor forward(const Tensor& x, bool keep);
  /// Accumulates the weight gradient; returns dx unless `need_dx` is false.
  Tensor backward(const Tensor& dy, bool need_dx);

 private:
  Conv3dSpec spec_;
  Parameter* weight_;
  Tensor col_;
  Tensor::Shape in_shape_;
};

class GroupNorm {
 public:
  GroupNorm(ParamRegistry& reg, const std::string& name, std::size_t channels, std::size_t groups);

  Tensor forward(const Tensor& x, bool keep);
  Tensor backward(const Tensor& dy);

  Parameter& gamma() { return *gamma_; }

 private:
  std::size_t channels_;
  std::size_t groups_;
  Parameter* gamma_;
  Parameter* beta_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

/// In-place friendly rectifier; remembers the active set for backward.
class Relu {
 public:
  Tensor forward(Tensor x, bool keep);
  Tensor backward(Tensor dy) const;

 private:
  std::vector<bool> active_;
};

class MaxPool3d {
 public:
  MaxPool3d(Triple kernel, Triple stride, Triple padding) : kernel_(kernel), stride_(stride), pad_(padding) {}

  Tensor forward(const Tensor& x, bool keep);
  Tensor backward(const Tensor& dy) const;

 private:
  Triple kernel_, stride_, pad_;
  std::vector<std::size_t> argmax_;
  Tensor::Shape in_shape_;
};

/// [C, N, T, H, W] -> [N, C]
class GlobalAvgPool {
 public:
  Tensor forward(const Tensor& x, bool keep);
  Tensor backward(const Tensor& dy) const;

 private:
  Tensor::Shape in_shape_;
};

/// y[N, out] = x[N, in] W^T + b
class Linear {
 public:
  Linear(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out, Rng& init_rng);

  Tensor forward(const Tensor& x, bool keep);
  Tensor backward(const Tensor& dy, bool need_dx = true);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_, out_;
  Parameter* weight_;
  Parameter* bias_;
  Tensor x_;
};

/// [N, C, T, H, W] clip batch -> [C, N, T, H, W] backbone layout.
Tensor to_channel_major(const Tensor& clips);

/// Standard normal via Box-Muller, independent of the standard library's distributions.
double normal01(Rng& rng);

}  // namespace vidmatch::nn
