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
#include "vidmatch/model.hpp"

#include <cmath>

namespace vidmatch {

AdversarialMode parse_adversarial_mode(const std::string& s) {
  if (s == "gradient_reversal" || s == "grl") return AdversarialMode::gradient_reversal;
  if (s == "joint_min") return AdversarialMode::joint_min;
  throw ConfigError("unknown adversarial mode: " + s);
}

std::string to_string(AdversarialMode m) {
  return m == AdversarialMode::gradient_reversal ? "gradient_reversal" : "joint_min";
}

std::string to_string(const ClipGeometry& g) {
  return std::to_string(g.channels) + "x" + std::to_string(g.frames) + "x" + std::to_string(g.height) + "x" +
         std::to_string(g.width);
}

std::array<std::size_t, 4> preset_blocks(const std::string& preset) {
  if (preset == "residual3d_10") return {1, 1, 1, 1};
  if (preset == "residual3d_18") return {2, 2, 2, 2};
  throw ConfigError("unknown backbone preset: " + preset + " (expected residual3d_10 or residual3d_18)");
}

Tensor adversarial_boundary_backward(const Tensor& grad, AdversarialMode mode, double coefficient) {
  if (coefficient < 0) throw ConfigError("gradient reversal coefficient must be >= 0");
  if (mode == AdversarialMode::joint_min) return grad;
  Tensor out = grad;
  const Real scale = static_cast<Real>(-coefficient);
  for (auto& v : out.span()) v *= scale;
  return out;
}

namespace {

class BasicBlock {
 public:
  BasicBlock(nn::ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out, nn::Triple stride,
             std::size_t groups, Rng& rng)
      : conv1_(reg, name + ".conv1", {in, out, {3, 3, 3}, stride, {1, 1, 1}}, rng),
        gn1_(reg, name + ".gn1", out, groups),
        conv2_(reg, name + ".conv2", {out, out, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}}, rng),
        gn2_(reg, name + ".gn2", out, groups) {
    if (in != out || stride != nn::Triple{1, 1, 1}) {
      proj_ = std::make_unique<nn::Conv3d>(reg, name + ".down", nn::Conv3dSpec{in, out, {1, 1, 1}, stride, {0, 0, 0}},
                                           rng);
      proj_gn_ = std::make_unique<nn::GroupNorm>(reg, name + ".down_gn", out, groups);
    }
  }

  Tensor forward(const Tensor& x, bool keep) {
    Tensor h = relu1_.forward(gn1_.forward(conv1_.forward(x, keep), keep), keep);
    h = gn2_.forward(conv2_.forward(h, keep), keep);
    if (proj_) {
      const Tensor s = proj_gn_->forward(proj_->forward(x, keep), keep);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += s[i];
    } else {
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += x[i];
    }
    return relu_out_.forward(std::move(h), keep);
  }

  Tensor backward(const Tensor& dy) {
    const Tensor d = relu_out_.backward(dy);
    Tensor dx = conv1_.backward(gn1_.backward(relu1_.backward(conv2_.backward(gn2_.backward(d), true))), true);
    if (proj_) {
      const Tensor ds = proj_->backward(proj_gn_->backward(d), true);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += ds[i];
    } else {
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d[i];
    }
    return dx;
  }

 private:
  nn::Conv3d conv1_;
  nn::GroupNorm gn1_;
  nn::Relu relu1_;
  nn::Conv3d conv2_;
  nn::GroupNorm gn2_;
  std::unique_ptr<nn::Conv3d> proj_;
  std::unique_ptr<nn::GroupNorm> proj_gn_;
  nn::Relu relu_out_;
};

}  // namespace

// stem (1,2,2) -> maxpool 2 -> stage1 -> stage2 s2 -> stage3 s2 -> stage4 s(1,2,2) -> avgpool -> projection
class Backbone {
 public:
  Backbone(nn::ParamRegistry& reg, const ModelSpec& spec, Rng& rng)
      : stem_(reg, "f.stem.conv", {spec.geometry.channels, spec.widths[0], {3, 3, 3}, {1, 2, 2}, {1, 1, 1}}, rng),
        stem_gn_(reg, "f.stem.gn", spec.widths[0], spec.norm_groups),
        pool_({3, 3, 3}, {2, 2, 2}, {1, 1, 1}) {
    const auto blocks = preset_blocks(spec.preset);
    static constexpr nn::Triple kStageStride[4] = {{1, 1, 1}, {2, 2, 2}, {2, 2, 2}, {1, 2, 2}};
    std::size_t in = spec.widths[0];
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t b = 0; b < blocks[s]; ++b) {
        const std::string name = "f.layer" + std::to_string(s + 1) + "." + std::to_string(b);
        blocks_.emplace_back(reg, name, in, spec.widths[s], b == 0 ? kStageStride[s] : nn::Triple{1, 1, 1},
                             spec.norm_groups, rng);
        in = spec.widths[s];
      }
    }
    proj_ = std::make_unique<nn::Linear>(reg, "f.proj", in, spec.embed_dim, rng);
  }

  Tensor forward(const Tensor& clips, bool keep) {
    Tensor h = nn::to_channel_major(clips);
    h = stem_relu_.forward(stem_gn_.forward(stem_.forward(h, keep), keep), keep);
    h = pool_.forward(h, keep);
    for (auto& b : blocks_) h = b.forward(h, keep);
    return proj_->forward(avg_.forward(h, keep), keep);
  }

  void backward(const Tensor& d_embedding) {
    Tensor d = avg_.backward(proj_->backward(d_embedding));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) d = it->backward(d);
    d = stem_gn_.backward(stem_relu_.backward(pool_.backward(d)));
    stem_.backward(d, false);
  }

 private:
  nn::Conv3d stem_;
  nn::GroupNorm stem_gn_;
  nn::Relu stem_relu_;
  nn::MaxPool3d pool_;
  std::vector<BasicBlock> blocks_;
  nn::GlobalAvgPool avg_;
  std::unique_ptr<nn::Linear> proj_;
};

ModelBundle::ModelBundle(const ModelSpec& spec) : spec_(spec) {
  Rng rng(mix_seed(spec.init_seed, 0x6d6f64656cULL));
  backbone_ = std::make_unique<Backbone>(params_, spec, rng);
  cls_ = std::make_unique<nn::Linear>(params_, "cls.fc", spec.embed_dim, spec.num_classes, rng);
  head_ = std::make_unique<nn::Linear>(params_, "head.fc", spec.embed_dim, spec.num_classes, rng);
  disc_hidden_ = std::make_unique<nn::Linear>(params_, "disc.fc1", spec.embed_dim, spec.disc_hidden, rng);
  disc_out_ = std::make_unique<nn::Linear>(params_, "disc.fc2", spec.disc_hidden, 1, rng);
}

ModelBundle::~ModelBundle() = default;

ForwardOutput ModelBundle::forward(const Tensor& clips, bool keep) {
  const auto& g = spec_.geometry;
  if (clips.rank() != 5 || clips.dim(1) != g.channels || clips.dim(2) != g.frames || clips.dim(3) != g.height ||
      clips.dim(4) != g.width) {
    throw ShapeError("clip batch " + shape_string(clips.shape()) + " does not match model geometry " + to_string(g));
  }
  ForwardOutput out;
  out.embedding = backbone_->forward(clips, keep);
  for (Real v : out.embedding.span())
    if (!std::isfinite(v)) throw NumericError("non-finite embedding activation");
  out.cls_logits = cls_->forward(out.embedding, keep);
  out.head_logits = head_->forward(out.embedding, keep);
  const Tensor& boundary = adversarial_boundary(out.embedding);
  Tensor d = disc_out_->forward(disc_relu_.forward(disc_hidden_->forward(boundary, keep), keep), keep);
  d.reshape({clips.dim(0)});
  out.disc_logits = std::move(d);
  batch_ = clips.dim(0);
  return out;
}

void ModelBundle::backward(const OutputGradients& grads) {
  const std::size_t n = batch_;
  Tensor d_emb({n, spec_.embed_dim});
  auto add = [&](const Tensor& g) {
    for (std::size_t i = 0; i < g.size(); ++i) d_emb[i] += g[i];
  };
  if (!grads.cls_logits.empty()) add(cls_->backward(grads.cls_logits));
  if (!grads.head_logits.empty()) add(head_->backward(grads.head_logits));
  if (!grads.disc_logits.empty()) {
    Tensor g = grads.disc_logits;
    g.reshape({n, 1});
    const Tensor through = disc_hidden_->backward(disc_relu_.backward(disc_out_->backward(g)));
    add(adversarial_boundary_backward(through, spec_.adversarial, spec_.grl_coefficient));
  }
  backbone_->backward(d_emb);
}

std::string ModelBundle::component_of(const std::string& param_name) {
  return param_name.substr(0, param_name.find('.'));
}

void validate(const ModelSpec& spec) {
  const auto& g = spec.geometry;
  if (g.channels == 0 || g.frames == 0 || g.height == 0 || g.width == 0) throw ConfigError("clip geometry must be positive");
  if (g.height % kSpatialStride != 0 || g.width % kSpatialStride != 0)
    throw ConfigError("clip height and width must be multiples of " + std::to_string(kSpatialStride) + ", got " +
                      to_string(g));
  if (g.frames % kTemporalStride != 0)
    throw ConfigError("clip frame count must be a multiple of " + std::to_string(kTemporalStride) + ", got " +
                      std::to_string(g.frames));
  if (spec.num_classes < 2) throw ConfigError("at least two classes are required");
  if (spec.embed_dim == 0 || spec.disc_hidden == 0) throw ConfigError("embedding and discriminator widths must be positive");
  for (auto w : spec.widths)
    if (w == 0) throw ConfigError("stage widths must be positive");
  if (spec.grl_coefficient < 0) throw ConfigError("gradient reversal coefficient must be >= 0");
  preset_blocks(spec.preset);
}

std::unique_ptr<ModelBundle> build_backbone(const ModelSpec& spec) {
  validate(spec);
  return std::make_unique<ModelBundle>(spec);
}

}  // namespace vidmatch
