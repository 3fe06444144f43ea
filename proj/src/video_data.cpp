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
#include "vidmatch/video_data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

namespace vidmatch {

namespace fs = std::filesystem;

ClipGeometry VideoClip::geometry() const {
  if (pixels.rank() != 4) return {};
  return {pixels.dim(0), pixels.dim(1), pixels.dim(2), pixels.dim(3)};
}

Real VideoClip::at(std::size_t c, std::size_t t, std::size_t y, std::size_t x) const {
  return pixels[((c * pixels.dim(1) + t) * pixels.dim(2) + y) * pixels.dim(3) + x];
}

Real& VideoClip::at(std::size_t c, std::size_t t, std::size_t y, std::size_t x) {
  return pixels[((c * pixels.dim(1) + t) * pixels.dim(2) + y) * pixels.dim(3) + x];
}

VideoClip make_clip(const ClipGeometry& g, std::string source_id) {
  return {Tensor({g.channels, g.frames, g.height, g.width}), std::move(source_id), 0.0};
}

void validate_clip(const VideoClip& clip, const ClipGeometry& expected) {
  if (clip.pixels.rank() != 4 || !(clip.geometry() == expected))
    throw ShapeError("clip " + clip.source_id + " has shape " + shape_string(clip.pixels.shape()) + ", expected " +
                     to_string(expected));
  for (Real v : clip.pixels.span())
    if (!(v >= Real(0) && v <= Real(1))) throw ValidationError("clip " + clip.source_id + " has pixels outside [0,1]");
}

namespace {

bool is_video_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".mp4" || ext == ".avi";
}

std::vector<fs::path> list_videos(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_video_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> list_class_dirs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

std::vector<LabeledEntry> scan_labeled_dir(const fs::path& dir, std::vector<std::string>* class_names) {
  if (!fs::is_directory(dir)) throw StructuralError("missing directory: " + dir.string());
  const auto names = list_class_dirs(dir);
  std::vector<LabeledEntry> out;
  for (std::size_t c = 0; c < names.size(); ++c)
    for (const auto& p : list_videos(dir / names[c])) out.push_back({p.string(), static_cast<int>(c)});
  if (class_names != nullptr) *class_names = names;
  return out;
}

DatasetIndex scan_dataset(const fs::path& root, std::size_t num_classes) {
  const fs::path labeled = root / "labeled";
  const fs::path unlabeled = root / "unlabeled";
  if (!fs::is_directory(labeled)) throw StructuralError("dataset root lacks labeled/: " + root.string());
  if (!fs::is_directory(unlabeled)) throw StructuralError("dataset root lacks unlabeled/: " + root.string());
  DatasetIndex index;
  index.labeled = scan_labeled_dir(labeled, &index.class_names);
  if (num_classes != 0 && index.class_names.size() != num_classes)
    throw ConfigError("dataset has " + std::to_string(index.class_names.size()) + " class directories, config expects " +
                      std::to_string(num_classes));
  for (const auto& p : list_videos(unlabeled)) index.unlabeled.push_back(p.string());

  // The disjointness check is by file name: the same recording must not be both labeled and unlabeled.
  std::set<std::string> labeled_names;
  for (const auto& e : index.labeled) labeled_names.insert(fs::path(e.path).filename().string());
  for (const auto& u : index.unlabeled)
    if (labeled_names.count(fs::path(u).filename().string()))
      throw StructuralError("file appears in both labeled and unlabeled sets: " + fs::path(u).filename().string());
  return index;
}

std::vector<std::size_t> frame_indices(std::size_t available, std::size_t wanted) {
  if (available == 0) throw DecodeError("video has no frames");
  std::vector<std::size_t> idx(wanted);
  for (std::size_t j = 0; j < wanted; ++j) idx[j] = j * available / wanted;
  return idx;
}

VideoClip load_clip(const fs::path& path, const ClipGeometry& g) {
  if (g.channels != 1 && g.channels != 3) throw ConfigError("video ingestion supports 1 or 3 channels");
  cv::VideoCapture cap(path.string(), cv::CAP_FFMPEG);
  if (!cap.isOpened()) throw DecodeError("cannot decode video: " + path.string());
  std::vector<cv::Mat> frames;
  cv::Mat frame;
  while (cap.read(frame)) {
    if (frame.empty()) break;
    frames.push_back(frame.clone());
  }
  const double fps = cap.get(cv::CAP_PROP_FPS);
  if (frames.empty()) throw DecodeError("video has no decodable frames: " + path.string());

  VideoClip clip = make_clip(g, path.string());
  clip.fps = fps;
  const auto idx = frame_indices(frames.size(), g.frames);
  for (std::size_t t = 0; t < g.frames; ++t) {
    cv::Mat src = frames[idx[t]];
    cv::Mat conv;
    if (g.channels == 3) {
      if (src.channels() == 1) cv::cvtColor(src, conv, cv::COLOR_GRAY2RGB);
      else cv::cvtColor(src, conv, cv::COLOR_BGR2RGB);
    } else {
      if (src.channels() == 3) cv::cvtColor(src, conv, cv::COLOR_BGR2GRAY);
      else conv = src;
    }
    cv::Mat sized;
    if (conv.cols != static_cast<int>(g.width) || conv.rows != static_cast<int>(g.height))
      cv::resize(conv, sized, cv::Size(static_cast<int>(g.width), static_cast<int>(g.height)), 0, 0, cv::INTER_LINEAR);
    else
      sized = conv;
    for (std::size_t y = 0; y < g.height; ++y) {
      const unsigned char* row = sized.ptr<unsigned char>(static_cast<int>(y));
      for (std::size_t x = 0; x < g.width; ++x)
        for (std::size_t c = 0; c < g.channels; ++c)
          clip.at(c, t, y, x) = static_cast<Real>(row[x * g.channels + c] / 255.0);
    }
  }
  return clip;
}

void write_clip(const fs::path& path, const VideoClip& clip, double fps) {
  const ClipGeometry g = clip.geometry();
  if (g.channels != 1 && g.channels != 3) throw ConfigError("video export supports 1 or 3 channels");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::VideoWriter writer(path.string(), cv::CAP_FFMPEG, cv::VideoWriter::fourcc('F', 'F', 'V', '1'), fps,
                         cv::Size(static_cast<int>(g.width), static_cast<int>(g.height)), true);
  if (!writer.isOpened()) throw IoError("cannot open video writer: " + path.string());
  cv::Mat frame(static_cast<int>(g.height), static_cast<int>(g.width), CV_8UC3);
  for (std::size_t t = 0; t < g.frames; ++t) {
    for (std::size_t y = 0; y < g.height; ++y) {
      unsigned char* row = frame.ptr<unsigned char>(static_cast<int>(y));
      for (std::size_t x = 0; x < g.width; ++x)
        for (std::size_t c = 0; c < 3; ++c) {
          const std::size_t src_c = g.channels == 3 ? 2 - c : 0;  // RGB -> BGR
          const double v = std::clamp<double>(clip.at(src_c, t, y, x), 0.0, 1.0);
          row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    }
    writer.write(frame);
  }
}

ClipSet load_clip_set(const DatasetIndex& index, const ClipGeometry& geometry) {
  ClipSet set;
  set.geometry = geometry;
  set.class_names = index.class_names;
  for (const auto& e : index.labeled) {
    set.labeled.push_back(load_clip(e.path, geometry));
    set.labels.push_back(e.label);
  }
  for (const auto& u : index.unlabeled) {
    set.unlabeled.push_back(load_clip(u, geometry));
    set.unlabeled_truth.push_back(-1);
  }
  return set;
}

TestSet load_test_set(const fs::path& dir, const ClipGeometry& geometry) {
  TestSet test;
  for (const auto& e : scan_labeled_dir(dir, &test.class_names)) {
    test.clips.push_back(load_clip(e.path, geometry));
    test.labels.push_back(e.label);
  }
  return test;
}

void validate(const SynthSpec& s) {
  if (s.frames == 0 || s.height == 0 || s.width == 0) throw ConfigError("synthetic clip geometry must be positive");
  if (s.height < 16 || s.width < 16) throw ConfigError("synthetic frames must be at least 16x16");
  if (!(s.noise_std >= 0)) throw ConfigError("synth.noise_std must be >= 0");
  if (!(s.confuser_fraction >= 0 && s.confuser_fraction <= 1)) throw ConfigError("synth.confuser_fraction must be in [0,1]");
  if (!(s.color_swap >= 0 && s.color_swap <= 1)) throw ConfigError("synth.color_swap must be in [0,1]");
}

namespace {

struct Rgb {
  double r, g, b;
};

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Rgb warm_color(Rng& rng) { return {1.0, uniform(rng, 0.35, 0.75), uniform(rng, 0.0, 0.2)}; }
Rgb cool_color(Rng& rng) { return {uniform(rng, 0.0, 0.25), uniform(rng, 0.3, 0.7), 1.0}; }

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Coverage of a soft-edged disc; non-increasing in distance, non-decreasing in radius.
double disc_alpha(double dist, double radius) { return std::clamp(radius - dist + 0.5, 0.0, 1.0); }

void blend(VideoClip& clip, std::size_t t, std::size_t y, std::size_t x, const Rgb& c, double alpha) {
  if (alpha <= 0) return;
  const double col[3] = {c.r, c.g, c.b};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    Real& px = clip.at(ch, t, y, x);
    px = static_cast<Real>(alpha * col[ch] + (1.0 - alpha) * px);
  }
}

VideoClip render_clip(const SynthSpec& s, int label, std::uint64_t clip_seed, std::string id) {
  Rng rng(clip_seed);
  const ClipGeometry g{3, s.frames, s.height, s.width};
  VideoClip clip = make_clip(g, std::move(id));
  clip.fps = 30.0;
  const double W = static_cast<double>(s.width), H = static_cast<double>(s.height);

  // Static background: dim base color with a gentle linear gradient, kept below 0.6.
  const Rgb base{uniform(rng, 0.1, 0.4), uniform(rng, 0.1, 0.4), uniform(rng, 0.1, 0.4)};
  const double gx = uniform(rng, -0.1, 0.1), gy = uniform(rng, -0.1, 0.1);
  for (std::size_t t = 0; t < s.frames; ++t)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x) {
        const double shade = gx * (x / W - 0.5) + gy * (y / H - 0.5);
        clip.at(0, t, y, x) = static_cast<Real>(base.r + shade);
        clip.at(1, t, y, x) = static_cast<Real>(base.g + shade);
        clip.at(2, t, y, x) = static_cast<Real>(base.b + shade);
      }

  const bool swap = uniform01(rng) < s.color_swap;
  const bool warm = (label == 0) != swap;
  const Rgb color = warm ? warm_color(rng) : cool_color(rng);
  const double denom = s.frames > 1 ? static_cast<double>(s.frames - 1) : 1.0;

  if (label == 0) {
    const double r0 = uniform(rng, 1.0, 2.5);
    const double r1 = r0 + uniform(rng, 3.0, 6.0);
    const double cx = uniform(rng, r1 + 1, W - r1 - 1), cy = uniform(rng, r1 + 1, H - r1 - 1);
    for (std::size_t t = 0; t < s.frames; ++t) {
      const double r = r0 + (r1 - r0) * static_cast<double>(t) / denom;
      for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x)
          blend(clip, t, y, x, color, disc_alpha(std::hypot(x - cx, y - cy), r));
    }
  } else {
    if (uniform01(rng) < s.confuser_fraction) {
      const Rgb pc = warm_color(rng);
      const std::size_t side = 3 + uniform_index(rng, 4);
      const std::size_t px = uniform_index(rng, s.width - side), py = uniform_index(rng, s.height - side);
      for (std::size_t t = 0; t < s.frames; ++t)
        for (std::size_t y = py; y < py + side; ++y)
          for (std::size_t x = px; x < px + side; ++x) blend(clip, t, y, x, pc, 1.0);
    }
    const double r = uniform(rng, 2.0, 5.0);
    double x0, y0, x1, y1;
    for (;;) {
      x0 = uniform(rng, r + 1, W - r - 1), y0 = uniform(rng, r + 1, H - r - 1);
      x1 = uniform(rng, r + 1, W - r - 1), y1 = uniform(rng, r + 1, H - r - 1);
      const double travel = std::hypot(x1 - x0, y1 - y0);
      if (travel >= 5.0 && travel <= 11.0) break;
    }
    for (std::size_t t = 0; t < s.frames; ++t) {
      const double f = static_cast<double>(t) / denom;
      const double cx = x0 + (x1 - x0) * f, cy = y0 + (y1 - y0) * f;
      for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) blend(clip, t, y, x, color, disc_alpha(std::hypot(x - cx, y - cy), r));
    }
  }

  if (s.noise_std > 0) {
    for (auto& v : clip.pixels.span()) v = static_cast<Real>(v + s.noise_std * standard_normal(rng));
  }
  for (auto& v : clip.pixels.span()) v = std::clamp(v, Real(0), Real(1));
  return clip;
}

std::string padded(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

}  // namespace

SynthDataset synth_generate(const SynthSpec& s) {
  validate(s);
  SynthDataset d;
  d.train.geometry = {3, s.frames, s.height, s.width};
  d.train.class_names = {"fire", "nonfire"};
  d.test.class_names = d.train.class_names;
  // Each split draws from its own stream so changing one count leaves the others unchanged.
  const std::uint64_t labeled_stream = mix_seed(s.seed, 1), unlabeled_stream = mix_seed(s.seed, 2),
                      test_stream = mix_seed(s.seed, 3);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < s.n_labeled_per_class; ++i) {
      const std::size_t k = static_cast<std::size_t>(c) * s.n_labeled_per_class + i;
      d.train.labeled.push_back(render_clip(s, c, mix_seed(labeled_stream, k), "synth/labeled/" + padded(k)));
      d.train.labels.push_back(c);
    }
  for (std::size_t i = 0; i < s.n_unlabeled; ++i) {
    const int c = static_cast<int>(i % 2);
    d.train.unlabeled.push_back(render_clip(s, c, mix_seed(unlabeled_stream, i), "synth/unlabeled/" + padded(i)));
    d.train.unlabeled_truth.push_back(c);
  }
  for (std::size_t i = 0; i < s.n_test; ++i) {
    const int c = static_cast<int>(i % 2);
    d.test.clips.push_back(render_clip(s, c, mix_seed(test_stream, i), "synth/test/" + padded(i)));
    d.test.labels.push_back(c);
  }
  return d;
}

void export_synth(const SynthDataset& data, const fs::path& root) {
  const auto& names = data.train.class_names;
  for (std::size_t i = 0; i < data.train.labeled.size(); ++i)
    write_clip(root / "labeled" / names[data.train.labels[i]] / ("l" + padded(i) + ".avi"), data.train.labeled[i]);
  fs::create_directories(root / "unlabeled");
  for (std::size_t i = 0; i < data.train.unlabeled.size(); ++i)
    write_clip(root / "unlabeled" / ("u" + padded(i) + ".avi"), data.train.unlabeled[i]);
  for (std::size_t i = 0; i < data.test.clips.size(); ++i)
    write_clip(root / "test" / names[data.test.labels[i]] / ("t" + padded(i) + ".avi"), data.test.clips[i]);
}

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<BatchPlan> make_batches(std::size_t labeled_count, std::size_t unlabeled_count, std::size_t batch,
                                    std::size_t mu, std::uint64_t epoch_seed, bool supervised_fallback) {
  if (batch == 0 || mu == 0) throw ConfigError("batch size and mu must be positive");
  if (labeled_count == 0) throw ConfigError("labeled set is empty");
  const std::size_t group = mu * batch;
  const bool fallback = supervised_fallback && unlabeled_count < group;
  const std::size_t steps = fallback ? labeled_count / batch : unlabeled_count / group;

  std::vector<std::size_t> unl(unlabeled_count);
  for (std::size_t i = 0; i < unl.size(); ++i) unl[i] = i;
  Rng urng(mix_seed(epoch_seed, 0x756e6c));
  shuffle_indices(unl, urng);

  std::vector<std::size_t> lab;
  std::size_t cursor = 0, cycle = 0;
  auto refill = [&] {
    lab.resize(labeled_count);
    for (std::size_t i = 0; i < lab.size(); ++i) lab[i] = i;
    Rng lrng(mix_seed(epoch_seed, 0x6c6162 + cycle++));
    shuffle_indices(lab, lrng);
    cursor = 0;
  };
  refill();

  std::vector<BatchPlan> plans(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == lab.size()) refill();
      plans[s].labeled.push_back(lab[cursor++]);
    }
    if (!fallback) plans[s].unlabeled.assign(unl.begin() + s * group, unl.begin() + (s + 1) * group);
  }
  return plans;
}

Tensor stack_clips(const std::vector<const VideoClip*>& clips) {
  if (clips.empty()) return Tensor();
  const ClipGeometry g = clips.front()->geometry();
  Tensor out({clips.size(), g.channels, g.frames, g.height, g.width});
  const std::size_t per = clips.front()->pixels.size();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (!(clips[i]->geometry() == g)) throw ShapeError("clips in one batch must share geometry");
    std::copy_n(clips[i]->pixels.data(), per, out.data() + i * per);
  }
  return out;
}

BatchPair assemble_batch(const ClipSet& set, const BatchPlan& plan) {
  BatchPair bp;
  std::vector<const VideoClip*> lab, unl;
  for (auto i : plan.labeled) {
    lab.push_back(&set.labeled.at(i));
    bp.labels.push_back(set.labels.at(i));
  }
  for (auto i : plan.unlabeled) unl.push_back(&set.unlabeled.at(i));
  bp.labeled_clips = stack_clips(lab);
  bp.unlabeled_clips = stack_clips(unl);
  bp.labeled_ids = plan.labeled;
  bp.unlabeled_ids = plan.unlabeled;
  return bp;
}

}  // namespace vidmatch
