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
#include "vidmatch/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace vidmatch {

namespace {

constexpr std::array<std::pair<StrongOp, const char*>, 12> kOpNames{{
    {StrongOp::brightness, "brightness"},
    {StrongOp::contrast, "contrast"},
    {StrongOp::color, "color"},
    {StrongOp::posterize, "posterize"},
    {StrongOp::solarize, "solarize"},
    {StrongOp::sharpness, "sharpness"},
    {StrongOp::equalize, "equalize"},
    {StrongOp::rotate, "rotate"},
    {StrongOp::shear_x, "shear_x"},
    {StrongOp::shear_y, "shear_y"},
    {StrongOp::translate_x, "translate_x"},
    {StrongOp::translate_y, "translate_y"},
}};

constexpr Real kFill = Real(0.5);

ClipGeometry geometry_of_batch(const Tensor& batch) {
  if (batch.rank() != 5) throw ShapeError("augmentation batch must be [N, C, T, H, W]");
  return {batch.dim(1), batch.dim(2), batch.dim(3), batch.dim(4)};
}

VideoClip slice(const Tensor& batch, std::size_t i) {
  VideoClip clip = make_clip(geometry_of_batch(batch));
  const auto row = batch.row(i);
  std::copy(row.begin(), row.end(), clip.pixels.data());
  return clip;
}

void put(Tensor& batch, std::size_t i, const VideoClip& clip) {
  std::copy(clip.pixels.data(), clip.pixels.data() + clip.pixels.size(), batch.row(i).data());
}

void clamp01(VideoClip& clip) {
  for (auto& v : clip.pixels.span()) v = std::clamp(v, Real(0), Real(1));
}

// 3x3 filter on every frame and channel with replicated borders.
VideoClip filter3x3(const VideoClip& in, const std::array<double, 9>& k) {
  const ClipGeometry g = in.geometry();
  VideoClip out = in;
  auto clampi = [](long v, std::size_t n) { return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1)); };
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t t = 0; t < g.frames; ++t)
      for (std::size_t y = 0; y < g.height; ++y)
        for (std::size_t x = 0; x < g.width; ++x) {
          double acc = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
              acc += k[(dy + 1) * 3 + (dx + 1)] *
                     in.at(c, t, clampi(static_cast<long>(y) + dy, g.height), clampi(static_cast<long>(x) + dx, g.width));
          out.at(c, t, y, x) = static_cast<Real>(acc);
        }
  clamp01(out);
  return out;
}

// Rec. 601 luma; single-channel clips are their own luma.
double luma(const VideoClip& clip, std::size_t t, std::size_t y, std::size_t x) {
  if (clip.geometry().channels < 3) return clip.at(0, t, y, x);
  return 0.299 * clip.at(0, t, y, x) + 0.587 * clip.at(1, t, y, x) + 0.114 * clip.at(2, t, y, x);
}

// out = base + factor * (in - base), the PIL ImageEnhance blend.
void enhance(VideoClip& clip, const VideoClip& base, double factor) {
  for (std::size_t i = 0; i < clip.pixels.size(); ++i)
    clip.pixels[i] = static_cast<Real>(base.pixels[i] + factor * (clip.pixels[i] - base.pixels[i]));
  clamp01(clip);
}

// Output (x, y) samples input at M * (p - c) + c + shift, bilinear, constant fill outside.
VideoClip affine(const VideoClip& in, const std::array<double, 4>& m, double shift_x, double shift_y) {
  const ClipGeometry g = in.geometry();
  VideoClip out = in;
  const double cx = (static_cast<double>(g.width) - 1) / 2, cy = (static_cast<double>(g.height) - 1) / 2;
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x) {
      const double px = x - cx, py = y - cy;
      const double sx = m[0] * px + m[1] * py + cx + shift_x;
      const double sy = m[2] * px + m[3] * py + cy + shift_y;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t t = 0; t < g.frames; ++t) {
          auto sample = [&](long yy, long xx) -> double {
            if (xx < 0 || yy < 0 || xx >= static_cast<long>(g.width) || yy >= static_cast<long>(g.height)) return kFill;
            return in.at(c, t, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          };
          double v = sample(y0, x0) * (1 - ax) * (1 - ay);
          if (ax != 0) v += sample(y0, x0 + 1) * ax * (1 - ay);
          if (ay != 0) v += sample(y0 + 1, x0) * (1 - ax) * ay;
          if (ax != 0 && ay != 0) v += sample(y0 + 1, x0 + 1) * ax * ay;
          out.at(c, t, y, x) = static_cast<Real>(v);
        }
    }
  clamp01(out);
  return out;
}

void apply_step(VideoClip& clip, const StrongStep& step) {
  const ClipGeometry g = clip.geometry();
  const double m = step.magnitude;
  const double sign = step.negate ? -1.0 : 1.0;
  const double factor = 1.0 + sign * 0.9 * m;
  switch (step.op) {
    case StrongOp::brightness: {
      if (m == 0) return;
      for (auto& v : clip.pixels.span()) v = static_cast<Real>(v * factor);
      clamp01(clip);
      return;
    }
    case StrongOp::contrast: {
      if (m == 0) return;
      // The mean is taken over the whole clip so the transform is identical on every frame.
      double mean = 0;
      for (std::size_t t = 0; t < g.frames; ++t)
        for (std::size_t y = 0; y < g.height; ++y)
          for (std::size_t x = 0; x < g.width; ++x) mean += luma(clip, t, y, x);
      mean /= static_cast<double>(g.frames * g.height * g.width);
      VideoClip base = clip;
      base.pixels.fill(static_cast<Real>(mean));
      enhance(clip, base, factor);
      return;
    }
    case StrongOp::color: {
      if (m == 0 || g.channels < 3) return;
      VideoClip base = clip;
      for (std::size_t t = 0; t < g.frames; ++t)
        for (std::size_t y = 0; y < g.height; ++y)
          for (std::size_t x = 0; x < g.width; ++x) {
            const Real l = static_cast<Real>(luma(clip, t, y, x));
            for (std::size_t c = 0; c < g.channels; ++c) base.at(c, t, y, x) = l;
          }
      enhance(clip, base, factor);
      return;
    }
    case StrongOp::sharpness: {
      if (m == 0) return;
      const VideoClip blurred = filter3x3(clip, {1 / 13.0, 1 / 13.0, 1 / 13.0, 1 / 13.0, 5 / 13.0, 1 / 13.0, 1 / 13.0,
                                                 1 / 13.0, 1 / 13.0});
      enhance(clip, blurred, factor);
      return;
    }
    case StrongOp::posterize: {
      const int bits = 8 - static_cast<int>(std::lround(4 * std::min(m, 1.0)));
      const double step_size = std::ldexp(1.0, 8 - bits);
      for (auto& v : clip.pixels.span()) {
        const double level = std::floor(std::min(v * 255.0, 255.0) / step_size) * step_size;
        v = static_cast<Real>(level / 255.0);
      }
      return;
    }
    case StrongOp::solarize: {
      const double threshold = 1.0 - std::min(m, 1.0);
      for (auto& v : clip.pixels.span())
        if (v > threshold) v = Real(1) - v;
      return;
    }
    case StrongOp::equalize: {
      // One lookup table per channel from the histogram of the whole clip.
      const std::size_t plane = g.frames * g.height * g.width;
      for (std::size_t c = 0; c < g.channels; ++c) {
        Real* data = clip.pixels.data() + c * plane;
        std::array<std::size_t, 256> hist{};
        for (std::size_t i = 0; i < plane; ++i) ++hist[static_cast<std::size_t>(std::lround(data[i] * 255.0))];
        std::array<double, 256> lut{};
        std::size_t cum = 0;
        const std::size_t first = *std::find_if(hist.begin(), hist.end(), [](std::size_t h) { return h > 0; });
        const double denom = plane > first ? static_cast<double>(plane - first) : 1.0;
        for (std::size_t b = 0; b < 256; ++b) {
          cum += hist[b];
          lut[b] = plane > first ? std::clamp((static_cast<double>(cum) - first) / denom, 0.0, 1.0) : b / 255.0;
        }
        for (std::size_t i = 0; i < plane; ++i)
          data[i] = static_cast<Real>(lut[static_cast<std::size_t>(std::lround(data[i] * 255.0))]);
      }
      return;
    }
    case StrongOp::rotate: {
      if (m == 0) return;
      const double a = sign * 30.0 * m * std::numbers::pi / 180.0;
      clip = affine(clip, {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)}, 0, 0);
      return;
    }
    case StrongOp::shear_x:
      if (m == 0) return;
      clip = affine(clip, {1, sign * 0.3 * m, 0, 1}, 0, 0);
      return;
    case StrongOp::shear_y:
      if (m == 0) return;
      clip = affine(clip, {1, 0, sign * 0.3 * m, 1}, 0, 0);
      return;
    case StrongOp::translate_x:
      if (m == 0) return;
      clip = affine(clip, {1, 0, 0, 1}, sign * 0.3 * m * static_cast<double>(g.width), 0);
      return;
    case StrongOp::translate_y:
      if (m == 0) return;
      clip = affine(clip, {1, 0, 0, 1}, 0, sign * 0.3 * m * static_cast<double>(g.height));
      return;
  }
}

}  // namespace

WeakMode parse_weak_mode(const std::string& s) {
  if (s == "flip_only") return WeakMode::flip_only;
  if (s == "random_crop_flip") return WeakMode::random_crop_flip;
  if (s == "sharpen") return WeakMode::sharpen;
  if (s == "smooth") return WeakMode::smooth;
  throw ConfigError("unknown weak augmentation mode: " + s);
}

std::string to_string(WeakMode m) {
  switch (m) {
    case WeakMode::flip_only: return "flip_only";
    case WeakMode::random_crop_flip: return "random_crop_flip";
    case WeakMode::sharpen: return "sharpen";
    case WeakMode::smooth: return "smooth";
  }
  return "?";
}

StrongOp parse_strong_op(const std::string& s) {
  for (const auto& [op, name] : kOpNames)
    if (s == name) return op;
  throw ConfigError("unknown strong augmentation op: " + s);
}

std::string to_string(StrongOp op) {
  for (const auto& [o, name] : kOpNames)
    if (o == op) return name;
  return "?";
}

std::vector<StrongOp> all_strong_ops() {
  std::vector<StrongOp> ops;
  for (const auto& entry : kOpNames) ops.push_back(entry.first);
  return ops;
}

bool identity_at_zero(StrongOp op) { return op != StrongOp::posterize && op != StrongOp::equalize; }

void validate(const AugmentPolicy& p) {
  if (p.strong_ops.empty()) throw ConfigError("augment.strong_ops must not be empty");
  if (p.strong_n < 1) throw ConfigError("augment.strong_n must be >= 1");
  if (!(p.magnitude_max > 0)) throw ConfigError("augment.magnitude_max must be > 0");
  if (!(p.cutout_max_fraction > 0 && p.cutout_max_fraction <= 1))
    throw ConfigError("augment.cutout_max_fraction must be in (0,1]");
}

WeakParams sample_weak(WeakMode mode, const ClipGeometry& g, Rng& rng) {
  WeakParams p;
  switch (mode) {
    case WeakMode::flip_only:
      p.flip = uniform01(rng) < 0.5;
      break;
    case WeakMode::random_crop_flip: {
      // Reflect-pad by 1/8 of the side and crop back: a per-clip shift in [-pad, pad].
      const long px = static_cast<long>(g.width / 8), py = static_cast<long>(g.height / 8);
      p.shift_x = static_cast<int>(static_cast<long>(uniform_index(rng, static_cast<std::size_t>(2 * px + 1))) - px);
      p.shift_y = static_cast<int>(static_cast<long>(uniform_index(rng, static_cast<std::size_t>(2 * py + 1))) - py);
      p.flip = uniform01(rng) < 0.5;
      break;
    }
    case WeakMode::sharpen:
    case WeakMode::smooth:
      break;
  }
  return p;
}

VideoClip apply_weak(const VideoClip& clip, WeakMode mode, const WeakParams& p) {
  const ClipGeometry g = clip.geometry();
  switch (mode) {
    case WeakMode::sharpen:
      return filter3x3(clip, {0, -1, 0, -1, 5, -1, 0, -1, 0});
    case WeakMode::smooth:
      return filter3x3(clip, {1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0, 1 / 9.0});
    case WeakMode::flip_only:
    case WeakMode::random_crop_flip:
      break;
  }
  if (!p.flip && p.shift_x == 0 && p.shift_y == 0) return clip;
  auto reflect = [](long v, long n) {
    if (n == 1) return 0L;
    while (v < 0 || v >= n) v = v < 0 ? -v : 2 * (n - 1) - v;
    return v;
  };
  VideoClip out = clip;
  const long W = static_cast<long>(g.width), H = static_cast<long>(g.height);
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t t = 0; t < g.frames; ++t)
      for (long y = 0; y < H; ++y)
        for (long x = 0; x < W; ++x) {
          long sx = reflect(x + p.shift_x, W);
          const long sy = reflect(y + p.shift_y, H);
          if (p.flip) sx = W - 1 - sx;
          out.at(c, t, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
              clip.at(c, t, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
  return out;
}

VideoClip weak_augment(const VideoClip& clip, WeakMode mode, Rng& rng) {
  return apply_weak(clip, mode, sample_weak(mode, clip.geometry(), rng));
}

StrongParams sample_strong(const AugmentPolicy& policy, const ClipGeometry& g, Rng& rng) {
  validate(policy);
  StrongParams p;
  for (std::size_t i = 0; i < policy.strong_n; ++i) {
    StrongStep s;
    s.op = policy.strong_ops[uniform_index(rng, policy.strong_ops.size())];
    s.magnitude = policy.magnitude_max * uniform01(rng);
    s.negate = uniform01(rng) < 0.5;
    p.steps.push_back(s);
  }
  if (policy.cutout_enabled) {
    p.cutout = true;
    const double frac = policy.cutout_max_fraction * uniform01(rng);
    p.box.w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * static_cast<double>(g.width))));
    p.box.h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * static_cast<double>(g.height))));
    p.box.x0 = uniform_index(rng, g.width - p.box.w + 1);
    p.box.y0 = uniform_index(rng, g.height - p.box.h + 1);
  }
  return p;
}

VideoClip apply_strong(const VideoClip& clip, const StrongParams& params) {
  VideoClip out = clip;
  for (const auto& step : params.steps) apply_step(out, step);
  if (params.cutout) {
    const ClipGeometry g = out.geometry();
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t t = 0; t < g.frames; ++t)
        for (std::size_t y = params.box.y0; y < std::min(g.height, params.box.y0 + params.box.h); ++y)
          for (std::size_t x = params.box.x0; x < std::min(g.width, params.box.x0 + params.box.w); ++x)
            out.at(c, t, y, x) = kFill;
  }
  return out;
}

VideoClip strong_augment(const VideoClip& clip, const AugmentPolicy& policy, Rng& rng) {
  return apply_strong(clip, sample_strong(policy, clip.geometry(), rng));
}

std::pair<Tensor, Tensor> paired_views(const Tensor& batch, const AugmentPolicy& policy,
                                       const std::vector<std::uint64_t>& sample_seeds) {
  validate(policy);
  if (batch.empty()) return {Tensor(), Tensor()};
  if (sample_seeds.size() != batch.dim(0)) throw ShapeError("paired_views needs one seed per sample");
  Tensor weak(batch.shape()), strong(batch.shape());
  for (std::size_t i = 0; i < batch.dim(0); ++i) {
    const VideoClip src = slice(batch, i);
    Rng weak_rng(mix_seed(sample_seeds[i], 0x7765616b));
    Rng strong_rng(mix_seed(sample_seeds[i], 0x7374726f6e67));
    put(weak, i, weak_augment(src, policy.weak_mode, weak_rng));
    put(strong, i, strong_augment(src, policy, strong_rng));
  }
  return {std::move(weak), std::move(strong)};
}

Tensor weak_views(const Tensor& batch, WeakMode mode, const std::vector<std::uint64_t>& sample_seeds) {
  if (batch.empty()) return Tensor();
  if (sample_seeds.size() != batch.dim(0)) throw ShapeError("weak_views needs one seed per sample");
  Tensor out(batch.shape());
  for (std::size_t i = 0; i < batch.dim(0); ++i) {
    Rng rng(mix_seed(sample_seeds[i], 0x7765616b));
    put(out, i, weak_augment(slice(batch, i), mode, rng));
  }
  return out;
}

}  // namespace vidmatch
