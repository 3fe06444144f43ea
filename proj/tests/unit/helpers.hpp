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

#include <filesystem>
#include <random>
#include <string>

#include "vidmatch/trainer.hpp"

namespace vidmatch::testing {

inline VideoClip random_clip(const ClipGeometry& g, std::uint64_t seed) {
  Rng rng(seed);
  VideoClip c = make_clip(g, "r" + std::to_string(seed));
  for (auto& v : c.pixels.span()) v = static_cast<Real>(uniform01(rng));
  return c;
}

inline Tensor random_batch(std::size_t n, const ClipGeometry& g, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, g.channels, g.frames, g.height, g.width});
  for (auto& v : t.span()) v = static_cast<Real>(uniform01(rng));
  return t;
}

/// Random simplex rows from normalized exponentials.
inline ProbMatrix random_simplex(std::size_t rows, std::size_t cols, Rng& rng, double sharpness = 1.0) {
  ProbMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += m(i, j) = std::exp(sharpness * 3.0 * nn::normal01(rng));
    for (std::size_t j = 0; j < cols; ++j) m(i, j) /= s;
  }
  return m;
}

/// Narrow network and small data so a step takes milliseconds.
inline RunConfig tiny_config() {
  RunConfig c;
  c.model.widths = {4, 4, 8, 8};
  c.model.embed_dim = 8;
  c.model.disc_hidden = 8;
  c.model.norm_groups = 2;
  c.batch = 2;
  c.mu = 2;
  c.synth.n_labeled_per_class = 2;
  c.synth.n_unlabeled = 8;
  c.synth.n_test = 4;
  c.epochs = 2;
  return c;
}

inline SynthDataset tiny_data(const RunConfig& c) {
  SynthSpec s = c.synth;
  s.frames = c.model.geometry.frames;
  s.height = c.model.geometry.height;
  s.width = c.model.geometry.width;
  return synth_generate(s);
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("vidmatch_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace vidmatch::testing
