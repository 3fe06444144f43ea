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

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vidmatch/nn.hpp"

namespace vidmatch {

enum class AdversarialMode { gradient_reversal, joint_min };

AdversarialMode parse_adversarial_mode(const std::string& s);
std::string to_string(AdversarialMode m);

struct ClipGeometry {
  std::size_t channels = 3;
  std::size_t frames = 8;
  std::size_t height = 32;
  std::size_t width = 32;

  friend bool operator==(const ClipGeometry&, const ClipGeometry&) = default;
};

std::string to_string(const ClipGeometry& g);

struct ModelSpec {
  std::string preset = "residual3d_10";
  ClipGeometry geometry;
  std::size_t num_classes = 2;
  std::size_t embed_dim = 64;
  std::array<std::size_t, 4> widths{16, 32, 64, 128};
  std::size_t disc_hidden = 64;
  std::size_t norm_groups = 16;
  std::uint64_t init_seed = 0;
  AdversarialMode adversarial = AdversarialMode::gradient_reversal;
  double grl_coefficient = 1.0;
};

/// Residual blocks per stage for a named preset; residual3d_10 -> {1,1,1,1}, residual3d_18 -> {2,2,2,2}.
std::array<std::size_t, 4> preset_blocks(const std::string& preset);

/// Spatial and temporal downsampling of the backbone; inputs must be multiples of these.
inline constexpr std::size_t kSpatialStride = 32;
inline constexpr std::size_t kTemporalStride = 8;

struct ForwardOutput {
  Tensor embedding;    // [N, d]
  Tensor cls_logits;   // [N, classes]
  Tensor head_logits;  // [N, classes]
  Tensor disc_logits;  // [N]
};

/// Loss gradients with respect to each output. Empty tensors mean "no gradient".
struct OutputGradients {
  Tensor cls_logits;
  Tensor head_logits;
  Tensor disc_logits;
};

/// Identity on the forward path.
inline const Tensor& adversarial_boundary(const Tensor& embedding) { return embedding; }
/// Backward path of the boundary: -coefficient * grad under gradient reversal, grad under joint_min.
Tensor adversarial_boundary_backward(const Tensor& grad, AdversarialMode mode, double coefficient);

class Backbone;

/// Shared feature extractor f with classifier, prediction head and discriminator.
/// Parameter names are prefixed "f.", "cls.", "head." and "disc." respectively.
class ModelBundle {
 public:
  explicit ModelBundle(const ModelSpec& spec);
  ~ModelBundle();
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  /// clips: [N, C, T, H, W]. With keep=true the activations needed by backward() are retained.
  ForwardOutput forward(const Tensor& clips, bool keep = false);
  /// Accumulates parameter gradients for the most recent forward(keep=true).
  void backward(const OutputGradients& grads);

  nn::ParamRegistry& params() { return params_; }
  const nn::ParamRegistry& params() const { return params_; }
  std::size_t parameter_count() const { return params_.count(); }
  const ModelSpec& spec() const { return spec_; }

  /// "f", "cls", "head" or "disc".
  static std::string component_of(const std::string& param_name);

 private:
  ModelSpec spec_;
  nn::ParamRegistry params_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<nn::Linear> cls_;
  std::unique_ptr<nn::Linear> head_;
  std::unique_ptr<nn::Linear> disc_hidden_;
  nn::Relu disc_relu_;
  std::unique_ptr<nn::Linear> disc_out_;
  std::size_t batch_ = 0;
};

/// Throws ConfigError naming the required multiple when the geometry does not divide evenly.
void validate(const ModelSpec& spec);

/// Validates geometry and builds the bundle (build_backbone).
std::unique_ptr<ModelBundle> build_backbone(const ModelSpec& spec);

}  // namespace vidmatch
