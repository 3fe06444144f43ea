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

#include <vector>

#include "vidmatch/augment.hpp"
#include "vidmatch/prob.hpp"

namespace vidmatch {

enum class MixingMode { vcsa, videomix, off };

MixingMode parse_mixing_mode(const std::string& s);
std::string to_string(MixingMode m);

/// Marsaglia-Tsang gamma draw with unit scale; shape > 0.
double sample_gamma(double shape, Rng& rng);
/// Beta(a, b) through two gamma draws.
double sample_beta(double a, double b, Rng& rng);
/// One Beta(alpha, alpha) mixing coefficient. alpha <= 0 is a ConfigError.
double sample_lambda(double alpha, Rng& rng);

struct MixedBatch {
  Tensor clips;                      // [B, C, T, H, W]
  ProbMatrix soft_labels;            // [B, N]
  std::vector<double> disc_targets;  // [B]
  double lambda_m = 0.0;
};

/// Frame-aligned interpolation lambda * x + (1 - lambda) * u of paired clips, soft labels
/// lambda * onehot(y) + (1 - lambda) * onehot(y'), discriminator targets 1 - lambda.
MixedBatch vcsa(const Tensor& labeled, const std::vector<int>& labels, const Tensor& unlabeled,
                const std::vector<int>& pseudo_labels, double lambda_m, std::size_t num_classes);

struct VideoMixResult {
  VideoClip clip;
  double area_fraction = 0.0;
};

/// Pastes box of the labeled clip into the unlabeled clip in every frame.
VideoMixResult videomix_box(const VideoClip& labeled, const VideoClip& unlabeled, const Cutout& box);
/// Random non-empty rectangle.
VideoMixResult videomix(const VideoClip& labeled, const VideoClip& unlabeled, Rng& rng);

/// Batch form of videomix: row b uses its own rectangle and area fraction a_b as the label
/// weight; lambda_m is the mean area fraction.
MixedBatch videomix_batch(const Tensor& labeled, const std::vector<int>& labels, const Tensor& unlabeled,
                          const std::vector<int>& pseudo_labels, std::size_t num_classes, Rng& rng);

/// A random size-count subset of [0, total) in random order.
std::vector<std::size_t> pairing_subset(std::size_t total, std::size_t count, Rng& rng);

}  // namespace vidmatch
