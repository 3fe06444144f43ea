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
#include <string>
#include <utility>
#include <vector>

#include "vidmatch/video_data.hpp"

namespace vidmatch {

enum class WeakMode { flip_only, random_crop_flip, sharpen, smooth };

enum class StrongOp {
  brightness,
  contrast,
  color,
  posterize,
  solarize,
  sharpness,
  equalize,
  rotate,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
};

WeakMode parse_weak_mode(const std::string& s);
std::string to_string(WeakMode m);
StrongOp parse_strong_op(const std::string& s);
std::string to_string(StrongOp op);
/// Every strong op, in declaration order.
std::vector<StrongOp> all_strong_ops();
/// True when magnitude 0 leaves a frame bitwise unchanged.
bool identity_at_zero(StrongOp op);

struct AugmentPolicy {
  WeakMode weak_mode = WeakMode::flip_only;
  std::vector<StrongOp> strong_ops = all_strong_ops();
  std::size_t strong_n = 2;
  double magnitude_max = 1.0;
  bool cutout_enabled = true;
  /// Largest cutout side as a fraction of the frame side.
  double cutout_max_fraction = 0.5;
};

void validate(const AugmentPolicy& policy);

struct WeakParams {
  bool flip = false;
  int shift_x = 0;
  int shift_y = 0;
};

WeakParams sample_weak(WeakMode mode, const ClipGeometry& g, Rng& rng);
VideoClip apply_weak(const VideoClip& clip, WeakMode mode, const WeakParams& params);
VideoClip weak_augment(const VideoClip& clip, WeakMode mode, Rng& rng);

struct StrongStep {
  StrongOp op;
  double magnitude;  // in [0, magnitude_max]
  bool negate;       // sign for signed ops
};

struct Cutout {
  std::size_t x0 = 0, y0 = 0, w = 0, h = 0;
};

/// Drawn once per clip and applied identically to every frame.
struct StrongParams {
  std::vector<StrongStep> steps;
  bool cutout = false;
  Cutout box;
};

StrongParams sample_strong(const AugmentPolicy& policy, const ClipGeometry& g, Rng& rng);
VideoClip apply_strong(const VideoClip& clip, const StrongParams& params);
VideoClip strong_augment(const VideoClip& clip, const AugmentPolicy& policy, Rng& rng);

/// Weak and strong views of a clip batch [N, C, T, H, W]. sample_seeds[i] drives sample i
/// only, so permuting the batch together with its seeds permutes the outputs.
std::pair<Tensor, Tensor> paired_views(const Tensor& batch, const AugmentPolicy& policy,
                                       const std::vector<std::uint64_t>& sample_seeds);

/// Weak view only, same seeding contract as paired_views.
Tensor weak_views(const Tensor& batch, WeakMode mode, const std::vector<std::uint64_t>& sample_seeds);

}  // namespace vidmatch
