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
#include "vidmatch/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vidmatch/kernels.hpp"

namespace vidmatch::nn {

double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Parameter& ParamRegistry::add(std::string name, Tensor::Shape shape) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  p->momentum = Tensor(shape);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamRegistry::find(std::string_view name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamRegistry::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::size_t ParamRegistry::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& p : params_) p->grad.fill(Real(0));
}

Triple window_output(const Triple& extent, const Triple& kernel, const Triple& stride, const Triple& pad) {
  Triple out{};
  for (int d = 0; d < 3; ++d) {
    if (extent[d] + 2 * pad[d] < kernel[d]) throw ShapeError("window larger than padded input");
    out[d] = (extent[d] + 2 * pad[d] - kernel[d]) / stride[d] + 1;
  }
  return out;
}

namespace {

struct Geometry5 {
  std::size_t c, n, t, h, w;
  explicit Geometry5(const Tensor::Shape& s) {
    if (s.size() != 5) throw ShapeError("expected a 5-d activation, got " + shape_string(s));
    c = s[0], n = s[1], t = s[2], h = s[3], w = s[4];
  }
  std::size_t plane() const { return t * h * w; }
};

// col[(ci, kt, kh, kw), (n, to, ho, wo)] <- x[ci, n, ti, hi, wi]
void im2col(const Tensor& x, const Conv3dSpec& s, const Triple& out, Tensor& col) {
  const Geometry5 g(x.shape());
  const std::size_t opos = out[0] * out[1] * out[2];
  const std::size_t ncols = g.n * opos;
  const std::size_t rows = g.c * s.kernel[0] * s.kernel[1] * s.kernel[2];
  if (col.shape() != Tensor::Shape{rows, ncols}) col = Tensor({rows, ncols});
  const Real* xd = x.data();
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t a = 0; a < s.kernel[0]; ++a)
      for (std::size_t b = 0; b < s.kernel[1]; ++b)
        for (std::size_t e = 0; e < s.kernel[2]; ++e, ++r) {
          Real* dst = col.data() + r * ncols;
          for (std::size_t n = 0; n < g.n; ++n) {
            const Real* src = xd + (c * g.n + n) * g.plane();
            for (std::size_t to = 0; to < out[0]; ++to) {
              const long ti = static_cast<long>(to * s.stride[0] + a) - static_cast<long>(s.padding[0]);
              for (std::size_t ho = 0; ho < out[1]; ++ho, dst += out[2]) {
                const long hi = static_cast<long>(ho * s.stride[1] + b) - static_cast<long>(s.padding[1]);
                if (ti < 0 || ti >= static_cast<long>(g.t) || hi < 0 || hi >= static_cast<long>(g.h)) {
                  std::fill(dst, dst + out[2], Real(0));
                  continue;
                }
                const Real* line = src + (static_cast<std::size_t>(ti) * g.h + static_cast<std::size_t>(hi)) * g.w;
                for (std::size_t wo = 0; wo < out[2]; ++wo) {
                  const long wi = static_cast<long>(wo * s.stride[2] + e) - static_cast<long>(s.padding[2]);
                  dst[wo] = (wi < 0 || wi >= static_cast<long>(g.w)) ? Real(0) : line[wi];
                }
              }
            }
          }
        }
}

// Adjoint of im2col: scatter-add columns back into dx.
void col2im(const Tensor& col, const Conv3dSpec& s, const Triple& out, Tensor& dx) {
  const Geometry5 g(dx.shape());
  const std::size_t ncols = col.dim(1);
  Real* xd = dx.data();
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t a = 0; a < s.kernel[0]; ++a)
      for (std::size_t b = 0; b < s.kernel[1]; ++b)
        for (std::size_t e = 0; e < s.kernel[2]; ++e, ++r) {
          const Real* src = col.data() + r * ncols;
          for (std::size_t n = 0; n < g.n; ++n) {
            Real* dst = xd + (c * g.n + n) * g.plane();
            for (std::size_t to = 0; to < out[0]; ++to) {
              const long ti = static_cast<long>(to * s.stride[0] + a) - static_cast<long>(s.padding[0]);
              for (std::size_t ho = 0; ho < out[1]; ++ho, src += out[2]) {
                const long hi = static_cast<long>(ho * s.stride[1] + b) - static_cast<long>(s.padding[1]);
                if (ti < 0 || ti >= static_cast<long>(g.t) || hi < 0 || hi >= static_cast<long>(g.h)) continue;
                Real* line = dst + (static_cast<std::size_t>(ti) * g.h + static_cast<std::size_t>(hi)) * g.w;
                for (std::size_t wo = 0; wo < out[2]; ++wo) {
                  const long wi = static_cast<long>(wo * s.stride[2] + e) - static_cast<long>(s.padding[2]);
                  if (wi >= 0 && wi < static_cast<long>(g.w)) line[wi] += src[wo];
                }
              }
            }
          }
        }
}

}  // namespace

Conv3d::Conv3d(ParamRegistry& reg, const std::string& name, const Conv3dSpec& spec, Rng& init_rng) : spec_(spec) {
  const std::size_t kvol = spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
  weight_ = &reg.add(name + ".weight", {spec.out_channels, spec.in_channels * kvol});
  // Kaiming normal, fan-out mode.
  const double stddev = std::sqrt(2.0 / static_cast<double>(spec.out_channels * kvol));
  for (auto& v : weight_->value.span()) v = static_cast<Real>(stddev * normal01(init_rng));
}

Tensor Conv3d::forward(const Tensor& x, bool keep) {
  const Geometry5 g(x.shape());
  if (g.c != spec_.in_channels)
    throw ShapeError("conv input has " + std::to_string(g.c) + " channels, expected " +
                     std::to_string(spec_.in_channels));
  const Triple out = window_output({g.t, g.h, g.w}, spec_.kernel, spec_.stride, spec_.padding);
  Tensor col;
  im2col(x, spec_, out, col);
  Tensor y({spec_.out_channels, g.n, out[0], out[1], out[2]});
  const std::size_t rows = col.dim(0), ncols = col.dim(1);
  kernels::active().gemm_nn(spec_.out_channels, ncols, rows, weight_->value.data(), rows, col.data(), ncols,
                            Real(0), y.data(), ncols);
  if (keep) {
    col_ = std::move(col);
    in_shape_ = x.shape();
  }
  return y;
}

Tensor Conv3d::backward(const Tensor& dy, bool need_dx) {
  const std::size_t rows = col_.dim(0), ncols = col_.dim(1);
  if (dy.size() != spec_.out_channels * ncols) throw ShapeError("conv backward: gradient shape mismatch");
  const auto& k = kernels::active();
  k.gemm_nt(spec_.out_channels, rows, ncols, dy.data(), ncols, col_.data(), ncols, Real(1), weight_->grad.data(),
            rows);
  if (!need_dx) return {};
  Tensor wt({rows, spec_.out_channels});
  const Real* w = weight_->value.data();
  for (std::size_t o = 0; o < spec_.out_channels; ++o)
    for (std::size_t r = 0; r < rows; ++r) wt[r * spec_.out_channels + o] = w[o * rows + r];
  Tensor dcol({rows, ncols});
  k.gemm_nn(rows, ncols, spec_.out_channels, wt.data(), spec_.out_channels, dy.data(), ncols, Real(0), dcol.data(),
            ncols);
  Tensor dx(in_shape_);
  const Geometry5 g(in_shape_);
  const Triple out = window_output({g.t, g.h, g.w}, spec_.kernel, spec_.stride, spec_.padding);
  col2im(dcol, spec_, out, dx);
  return dx;
}

GroupNorm::GroupNorm(ParamRegistry& reg, const std::string& name, std::size_t channels, std::size_t groups)
    : channels_(channels), groups_(std::min(groups, channels)) {
  while (channels_ % groups_ != 0) --groups_;
  gamma_ = &reg.add(name + ".gamma", {channels});
  beta_ = &reg.add(name + ".beta", {channels});
  gamma_->value.fill(Real(1));
}

Tensor GroupNorm::forward(const Tensor& x, bool keep) {
  const Geometry5 g(x.shape());
  if (g.c != channels_) throw ShapeError("group norm channel mismatch");
  const std::size_t per_group = channels_ / groups_;
  const std::size_t plane = g.plane();
  const double count = static_cast<double>(per_group * plane);
  Tensor xhat(x.shape());
  std::vector<double> inv_std(g.n * groups_);
  Tensor y(x.shape());
  constexpr double kEps = 1e-5;
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t gi = 0; gi < groups_; ++gi) {
      double sum = 0, sq = 0;
      for (std::size_t c = gi * per_group; c < (gi + 1) * per_group; ++c) {
        const Real* src = x.data() + (c * g.n + n) * plane;
        for (std::size_t p = 0; p < plane; ++p) sum += src[p];
      }
      const double mean = sum / count;
      for (std::size_t c = gi * per_group; c < (gi + 1) * per_group; ++c) {
        const Real* src = x.data() + (c * g.n + n) * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          const double d = src[p] - mean;
          sq += d * d;
        }
      }
      const double istd = 1.0 / std::sqrt(sq / count + kEps);
      inv_std[n * groups_ + gi] = istd;
      for (std::size_t c = gi * per_group; c < (gi + 1) * per_group; ++c) {
        const std::size_t off = (c * g.n + n) * plane;
        const Real gm = gamma_->value[c], bt = beta_->value[c];
        for (std::size_t p = 0; p < plane; ++p) {
          const Real xh = static_cast<Real>((x[off + p] - mean) * istd);
          xhat[off + p] = xh;
          y[off + p] = gm * xh + bt;
        }
      }
    }
  }
  if (keep) {
    xhat_ = std::move(xhat);
    inv_std_ = std::move(inv_std);
  }
  return y;
}

Tensor GroupNorm::backward(const Tensor& dy) {
  const Geometry5 g(xhat_.shape());
  const std::size_t per_group = channels_ / groups_;
  const std::size_t plane = g.plane();
  const double count = static_cast<double>(per_group * plane);
  Tensor dx(xhat_.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double dg = 0, db = 0;
    for (std::size_t n = 0; n < g.n; ++n) {
      const std::size_t off = (c * g.n + n) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        dg += static_cast<double>(dy[off + p]) * xhat_[off + p];
        db += dy[off + p];
      }
    }
    gamma_->grad[c] += static_cast<Real>(dg);
    beta_->grad[c] += static_cast<Real>(db);
  }
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t gi = 0; gi < groups_; ++gi) {
      double s1 = 0, s2 = 0;
      for (std::size_t c = gi * per_group; c < (gi + 1) * per_group; ++c) {
        const std::size_t off = (c * g.n + n) * plane;
        const double gm = gamma_->value[c];
        for (std::size_t p = 0; p < plane; ++p) {
          const double dxh = dy[off + p] * gm;
          s1 += dxh;
          s2 += dxh * xhat_[off + p];
        }
      }
      const double istd = inv_std_[n * groups_ + gi];
      for (std::size_t c = gi * per_group; c < (gi + 1) * per_group; ++c) {
        const std::size_t off = (c * g.n + n) * plane;
        const double gm = gamma_->value[c];
        for (std::size_t p = 0; p < plane; ++p) {
          const double dxh = dy[off + p] * gm;
          dx[off + p] = static_cast<Real>(istd / count * (count * dxh - s1 - xhat_[off + p] * s2));
        }
      }
    }
  }
  return dx;
}

Tensor Relu::forward(Tensor x, bool keep) {
  if (keep) active_.assign(x.size(), false);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > Real(0)) {
      if (keep) active_[i] = true;
    } else {
      x[i] = Real(0);
    }
  }
  return x;
}

Tensor Relu::backward(Tensor dy) const {
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (!active_[i]) dy[i] = Real(0);
  return dy;
}

Tensor MaxPool3d::forward(const Tensor& x, bool keep) {
  const Geometry5 g(x.shape());
  const Triple out = window_output({g.t, g.h, g.w}, kernel_, stride_, pad_);
  Tensor y({g.c, g.n, out[0], out[1], out[2]});
  std::vector<std::size_t> arg(y.size());
  std::size_t o = 0;
  for (std::size_t cn = 0; cn < g.c * g.n; ++cn) {
    const std::size_t base = cn * g.plane();
    for (std::size_t to = 0; to < out[0]; ++to)
      for (std::size_t ho = 0; ho < out[1]; ++ho)
        for (std::size_t wo = 0; wo < out[2]; ++wo, ++o) {
          Real best = -std::numeric_limits<Real>::infinity();
          std::size_t best_i = base;
          for (std::size_t a = 0; a < kernel_[0]; ++a) {
            const long ti = static_cast<long>(to * stride_[0] + a) - static_cast<long>(pad_[0]);
            if (ti < 0 || ti >= static_cast<long>(g.t)) continue;
            for (std::size_t b = 0; b < kernel_[1]; ++b) {
              const long hi = static_cast<long>(ho * stride_[1] + b) - static_cast<long>(pad_[1]);
              if (hi < 0 || hi >= static_cast<long>(g.h)) continue;
              for (std::size_t e = 0; e < kernel_[2]; ++e) {
                const long wi = static_cast<long>(wo * stride_[2] + e) - static_cast<long>(pad_[2]);
                if (wi < 0 || wi >= static_cast<long>(g.w)) continue;
                const std::size_t idx = base + (static_cast<std::size_t>(ti) * g.h + static_cast<std::size_t>(hi)) * g.w +
                                        static_cast<std::size_t>(wi);
                if (x[idx] > best) {
                  best = x[idx];
                  best_i = idx;
                }
              }
            }
          }
          y[o] = best;
          arg[o] = best_i;
        }
  }
  if (keep) {
    argmax_ = std::move(arg);
    in_shape_ = x.shape();
  }
  return y;
}

Tensor MaxPool3d::backward(const Tensor& dy) const {
  Tensor dx(in_shape_);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool keep) {
  const Geometry5 g(x.shape());
  Tensor y({g.n, g.c});
  const std::size_t plane = g.plane();
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t n = 0; n < g.n; ++n) {
      const Real* src = x.data() + (c * g.n + n) * plane;
      double s = 0;
      for (std::size_t p = 0; p < plane; ++p) s += src[p];
      y[n * g.c + c] = static_cast<Real>(s / static_cast<double>(plane));
    }
  if (keep) in_shape_ = x.shape();
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) const {
  const Geometry5 g(in_shape_);
  Tensor dx(in_shape_);
  const std::size_t plane = g.plane();
  const Real scale = Real(1) / static_cast<Real>(plane);
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t n = 0; n < g.n; ++n) {
      Real* dst = dx.data() + (c * g.n + n) * plane;
      std::fill(dst, dst + plane, dy[n * g.c + c] * scale);
    }
  return dx;
}

Linear::Linear(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out, Rng& init_rng)
    : in_(in), out_(out) {
  weight_ = &reg.add(name + ".weight", {out, in});
  bias_ = &reg.add(name + ".bias", {out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : weight_->value.span()) v = static_cast<Real>((2.0 * uniform01(init_rng) - 1.0) * bound);
  for (auto& v : bias_->value.span()) v = static_cast<Real>((2.0 * uniform01(init_rng) - 1.0) * bound);
}

Tensor Linear::forward(const Tensor& x, bool keep) {
  if (x.rank() != 2 || x.dim(1) != in_)
    throw ShapeError("linear expects [N, " + std::to_string(in_) + "], got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0);
  Tensor y({n, out_});
  for (std::size_t i = 0; i < n; ++i) std::copy(bias_->value.data(), bias_->value.data() + out_, y.data() + i * out_);
  if (n > 0) kernels::active().gemm_nt(n, out_, in_, x.data(), in_, weight_->value.data(), in_, Real(1), y.data(), out_);
  if (keep) x_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& dy, bool need_dx) {
  const std::size_t n = x_.dim(0);
  if (dy.rank() != 2 || dy.dim(0) != n || dy.dim(1) != out_) throw ShapeError("linear backward: gradient shape mismatch");
  Tensor dyt({out_, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out_; ++o) {
      dyt[o * n + i] = dy[i * out_ + o];
      bias_->grad[o] += dy[i * out_ + o];
    }
  const auto& k = kernels::active();
  k.gemm_nn(out_, in_, n, dyt.data(), n, x_.data(), in_, Real(1), weight_->grad.data(), in_);
  if (!need_dx) return {};
  Tensor dx({n, in_});
  k.gemm_nn(n, in_, out_, dy.data(), out_, weight_->value.data(), in_, Real(0), dx.data(), in_);
  return dx;
}

Tensor to_channel_major(const Tensor& clips) {
  if (clips.rank() != 5) throw ShapeError("clip batch must be [N, C, T, H, W], got " + shape_string(clips.shape()));
  const std::size_t n = clips.dim(0), c = clips.dim(1);
  const std::size_t plane = clips.dim(2) * clips.dim(3) * clips.dim(4);
  Tensor out({c, n, clips.dim(2), clips.dim(3), clips.dim(4)});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(clips.data() + (i * c + ch) * plane, plane, out.data() + (ch * n + i) * plane);
  return out;
}

}  // namespace vidmatch::nn
