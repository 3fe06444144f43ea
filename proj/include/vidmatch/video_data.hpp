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
#include <filesystem>
#include <string>
#include <vector>

#include "vidmatch/model.hpp"
#include "vidmatch/tensor.hpp"

namespace vidmatch {

/// One video clip. pixels is [C, T, H, W] with width contiguous, values in [0, 1].
struct VideoClip {
  Tensor pixels;
  std::string source_id;
  double fps = 0.0;

  ClipGeometry geometry() const;
  Real at(std::size_t c, std::size_t t, std::size_t y, std::size_t x) const;
  Real& at(std::size_t c, std::size_t t, std::size_t y, std::size_t x);
};

VideoClip make_clip(const ClipGeometry& g, std::string source_id = {});
/// Throws ShapeError/ValidationError when the clip breaks the geometry or range invariants.
void validate_clip(const VideoClip& clip, const ClipGeometry& expected);

struct LabeledEntry {
  std::string path;
  int label = 0;
};

struct DatasetIndex {
  std::vector<LabeledEntry> labeled;
  std::vector<std::string> unlabeled;
  std::vector<std::string> class_names;
};

/// Scans <root>/labeled/<class>/*.{mp4,avi} and <root>/unlabeled/*.{mp4,avi}.
/// Class ids follow sorted class-name order. num_classes = 0 skips the count check.
DatasetIndex scan_dataset(const std::filesystem::path& root, std::size_t num_classes);

/// Test-set layout: <dir>/<class>/*.{mp4,avi}.
std::vector<LabeledEntry> scan_labeled_dir(const std::filesystem::path& dir, std::vector<std::string>* class_names);

/// Uniform striding floor(j*F/T), j = 0..T-1. Repeats frames when F < T.
std::vector<std::size_t> frame_indices(std::size_t available, std::size_t wanted);

/// Decodes a video file, samples geometry.frames frames and resizes bilinearly.
VideoClip load_clip(const std::filesystem::path& path, const ClipGeometry& geometry);

/// Writes a clip losslessly (FFV1 in AVI, 8-bit BGR). Values are quantized to 1/255.
void write_clip(const std::filesystem::path& path, const VideoClip& clip, double fps = 30.0);

/// In-memory training data. unlabeled_truth holds -1 where ground truth is unknown.
struct ClipSet {
  ClipGeometry geometry;
  std::vector<std::string> class_names;
  std::vector<VideoClip> labeled;
  std::vector<int> labels;
  std::vector<VideoClip> unlabeled;
  std::vector<int> unlabeled_truth;
};

struct TestSet {
  std::vector<VideoClip> clips;
  std::vector<int> labels;
  std::vector<std::string> class_names;
};

/// Loads every clip referenced by the index.
ClipSet load_clip_set(const DatasetIndex& index, const ClipGeometry& geometry);
TestSet load_test_set(const std::filesystem::path& dir, const ClipGeometry& geometry);

struct SynthSpec {
  std::size_t n_labeled_per_class = 10;
  std::size_t n_unlabeled = 180;
  std::size_t n_test = 40;
  std::size_t frames = 8;
  std::size_t height = 32;
  std::size_t width = 32;
  double noise_std = 0.25;
  double confuser_fraction = 0.5;
  /// Probability that a clip's blob takes its color from the other class's palette.
  double color_swap = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

struct SynthDataset {
  ClipSet train;
  TestSet test;
};

/// Class 0 ("fire"): warm blob with radius growing every frame. Class 1 ("nonfire"):
/// constant-size cool blob moving in a straight line, static warm confuser patches in
/// a fraction of clips. Fully determined by spec.seed.
SynthDataset synth_generate(const SynthSpec& spec);

/// Writes the synthetic set as labeled/<class>/, unlabeled/ and test/<class>/ video files.
void export_synth(const SynthDataset& data, const std::filesystem::path& root);

struct BatchPair {
  Tensor labeled_clips;    // [B, C, T, H, W]
  std::vector<int> labels; // [B]
  Tensor unlabeled_clips;  // [muB, C, T, H, W]
  std::vector<std::size_t> labeled_ids;
  std::vector<std::size_t> unlabeled_ids;
};

struct BatchPlan {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
};

/// One epoch of index plans. Unlabeled items are shuffled and grouped by mu*B with the
/// remainder dropped; labeled items are reshuffled each time the list is exhausted.
/// With supervised_fallback and fewer than mu*B unlabeled clips, the epoch has
/// floor(|labeled| / B) steps with empty unlabeled groups.
std::vector<BatchPlan> make_batches(std::size_t labeled_count, std::size_t unlabeled_count, std::size_t batch,
                                    std::size_t mu, std::uint64_t epoch_seed, bool supervised_fallback = false);

BatchPair assemble_batch(const ClipSet& set, const BatchPlan& plan);

/// Stacks clips into [N, C, T, H, W].
Tensor stack_clips(const std::vector<const VideoClip*>& clips);

/// Fisher-Yates shuffle driven by uniform_index; stable across standard libraries.
void shuffle_indices(std::vector<std::size_t>& v, Rng& rng);

}  // namespace vidmatch
