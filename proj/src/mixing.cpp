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
#include "vidmatch/mixing.hpp"

#include <algorithm>
#include <cmath>

#include "vidmatch/kernels.hpp"
#include "vidmatch/nn.hpp"

namespace vidmatch {

namespace {

void check_pair(const Tensor& labeled, const std::vector<int>& labels, const Tensor& unlabeled,
                const std::vector<int>& pseudo_labels, std::size_t num_classes) {
  if (labeled.shape() != unlabeled.shape())
    throw ShapeError("mixing geometry mismatch: " + shape_string(labeled.shape()) + " vs " +
                     shape_string(unlabeled.shape()));
  if (labeled.rank() != 5) throw ShapeError("mixing expects clip batches [B, C, T, H, W]");
  const std::size_t b = labeled.dim(0);
  if (labels.size() != b || pseudo_labels.size() != b)
    throw ShapeError("mixing pairing error: " + std::to_string(b) + " clips, " + std::to_string(labels.size()) +
                     " labels, " + std::to_string(pseudo_labels.size()) + " pseudo-labels");
  for (std::size_t i = 0; i < b; ++i)
    if (labels[i] < 0 || pseudo_labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes ||
        static_cast<std::size_t>(pseudo_labels[i]) >= num_classes)
      throw ValidationError("mixing label out of range at row " + std::to_string(i));
}

void soft_row(ProbMatrix& m, std::size_t row, int y, int y_prime, double lambda) {
  m(row, static_cast<std::size_t>(y)) += lambda;
  m(row, static_cast<std::size_t>(y_prime)) += 1 - lambda;
}

}  // namespace

MixingMode parse_mixing_mode(const std::string& s) {
  if (s == "vcsa") return MixingMode::vcsa;
  if (s == "videomix") return MixingMode::videomix;
  if (s == "off") return MixingMode::off;
  throw ConfigError("unknown mixing mode: " + s);
}

std::string to_string(MixingMode m) {
  switch (m) {
    case MixingMode::vcsa: return "vcsa";
    case MixingMode::videomix: return "videomix";
    case MixingMode::off: return "off";
  }
  return "?";
}

double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0)) throw ConfigError("gamma shape must be > 0");
  if (shape < 1) {
    // Boost to shape + 1 and scale by U^(1/shape).
    const double u = uniform01(rng);
    return sample_gamma(shape + 1, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = nn::normal01(rng);
      v = 1 + c * x;
    } while (v <= 0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0 && std::log(u) < 0.5 * x * x + d * (1 - v + std::log(v))) return d * v;
  }
}

double sample_beta(double a, double b, Rng& rng) {
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  if (x + y == 0) return 0.5;
  return x / (x + y);
}

double sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0)) throw ConfigError("mixing.alpha must be > 0");
  return std::clamp(sample_beta(alpha, alpha, rng), 0.0, 1.0);
}

MixedBatch vcsa(const Tensor& labeled, const std::vector<int>& labels, const Tensor& unlabeled,
                const std::vector<int>& pseudo_labels, double lambda_m, std::size_t num_classes) {
  check_pair(labeled, labels, unlabeled, pseudo_labels, num_classes);
  if (!(lambda_m >= 0 && lambda_m <= 1)) throw ValidationError("lambda_m must lie in [0, 1]");
  MixedBatch out;
  out.lambda_m = lambda_m;
  out.clips = Tensor(labeled.shape());
  kernels::active().lerp(labeled.size(), static_cast<Real>(lambda_m), labeled.data(), unlabeled.data(),
                         out.clips.data());
  const std::size_t b = labeled.dim(0);
  out.soft_labels = ProbMatrix(b, num_classes);
  for (std::size_t i = 0; i < b; ++i) soft_row(out.soft_labels, i, labels[i], pseudo_labels[i], lambda_m);
  out.disc_targets.assign(b, 1 - lambda_m);
  return out;
}

VideoMixResult videomix_box(const VideoClip& labeled, const VideoClip& unlabeled, const Cutout& box) {
  const ClipGeometry g = labeled.geometry();
  if (!(g == unlabeled.geometry())) throw ShapeError("videomix geometry mismatch");
  if (box.w == 0 || box.h == 0 || box.x0 + box.w > g.width || box.y0 + box.h > g.height)
    throw ValidationError("videomix rectangle is empty or leaves the frame");
  VideoMixResult r{unlabeled, 0.0};
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t t = 0; t < g.frames; ++t)
      for (std::size_t y = box.y0; y < box.y0 + box.h; ++y)
        for (std::size_t x = box.x0; x < box.x0 + box.w; ++x) r.clip.at(c, t, y, x) = labeled.at(c, t, y, x);
  r.area_fraction = static_cast<double>(box.w * box.h) / static_cast<double>(g.width * g.height);
  return r;
}

VideoMixResult videomix(const VideoClip& labeled, const VideoClip& unlabeled, Rng& rng) {
  const ClipGeometry g = labeled.geometry();
  // Cut-area convention: side ratio sqrt(1 - lambda) at a uniform center, clipped to the frame.
  for (;;) {
    const double cut = std::sqrt(uniform01(rng));
    const auto cw = static_cast<long>(std::lround(cut * static_cast<double>(g.width)));
    const auto ch = static_cast<long>(std::lround(cut * static_cast<double>(g.height)));
    const auto cx = static_cast<long>(uniform_index(rng, g.width));
    const auto cy = static_cast<long>(uniform_index(rng, g.height));
    const long x0 = std::max(0L, cx - cw / 2), x1 = std::min(static_cast<long>(g.width), cx + cw - cw / 2);
    const long y0 = std::max(0L, cy - ch / 2), y1 = std::min(static_cast<long>(g.height), cy + ch - ch / 2);
    if (x1 <= x0 || y1 <= y0) continue;
    return videomix_box(labeled, unlabeled,
                        {static_cast<std::size_t>(x0), static_cast<std::size_t>(y0), static_cast<std::size_t>(x1 - x0),
                         static_cast<std::size_t>(y1 - y0)});
  }
}

MixedBatch videomix_batch(const Tensor& labeled, const std::vector<int>& labels, const Tensor& unlabeled,
                          const std::vector<int>& pseudo_labels, std::size_t num_classes, Rng& rng) {
  check_pair(labeled, labels, unlabeled, pseudo_labels, num_classes);
  const std::size_t b = labeled.dim(0);
  const ClipGeometry g{labeled.dim(1), labeled.dim(2), labeled.dim(3), labeled.dim(4)};
  MixedBatch out;
  out.clips = Tensor(labeled.shape());
  out.soft_labels = ProbMatrix(b, num_classes);
  out.disc_targets.resize(b);
  double sum = 0;
  for (std::size_t i = 0; i < b; ++i) {
    VideoClip x = make_clip(g), u = make_clip(g);
    std::copy(labeled.row(i).begin(), labeled.row(i).end(), x.pixels.data());
    std::copy(unlabeled.row(i).begin(), unlabeled.row(i).end(), u.pixels.data());
    const VideoMixResult r = videomix(x, u, rng);
    std::copy(r.clip.pixels.span().begin(), r.clip.pixels.span().end(), out.clips.row(i).begin());
    soft_row(out.soft_labels, i, labels[i], pseudo_labels[i], r.area_fraction);
    out.disc_targets[i] = 1 - r.area_fraction;
    sum += r.area_fraction;
  }
  out.lambda_m = b ? sum / static_cast<double>(b) : 0.0;
  return out;
}

std::vector<std::size_t> pairing_subset(std::size_t total, std::size_t count, Rng& rng) {
  if (count > total) throw ShapeError("pairing subset larger than the unlabeled batch");
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  shuffle_indices(idx, rng);
  idx.resize(count);
  return idx;
}

}  // namespace vidmatch
