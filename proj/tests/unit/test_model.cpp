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
#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "vidmatch/model.hpp"

using namespace vidmatch;
using vidmatch::testing::random_batch;

namespace {

ModelSpec small_spec() {
  ModelSpec s;
  s.widths = {4, 4, 8, 8};
  s.embed_dim = 8;
  s.disc_hidden = 8;
  s.norm_groups = 2;
  return s;
}

bool all_finite(const Tensor& t) {
  for (Real v : t.span())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward output shapes") {
    ModelSpec s;
    s.embed_dim = 128;
    s.widths = {4, 4, 8, 8};
    s.norm_groups = 2;
    auto m = build_backbone(s);
    const auto out = m->forward(random_batch(6, s.geometry, 1));
    CHECK(out.embedding.shape() == Tensor::Shape{6, 128});
    CHECK(out.cls_logits.shape() == Tensor::Shape{6, 2});
    CHECK(out.head_logits.shape() == Tensor::Shape{6, 2});
    CHECK(out.disc_logits.shape() == Tensor::Shape{6});
  }

  TEST_CASE("duplicated rows give duplicated outputs") {
    auto m = build_backbone(small_spec());
    const ClipGeometry g;
    Tensor one = random_batch(1, g, 3);
    Tensor two({2, g.channels, g.frames, g.height, g.width});
    for (std::size_t r = 0; r < 2; ++r)
      std::copy(one.span().begin(), one.span().end(), two.row(r).begin());
    const auto out = m->forward(two);
    for (const Tensor* t : {&out.embedding, &out.cls_logits, &out.head_logits}) {
      const auto a = t->row(0), b = t->row(1);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    CHECK(out.disc_logits[0] == out.disc_logits[1]);
  }

  TEST_CASE("all-zero clip gives finite outputs") {
    auto m = build_backbone(small_spec());
    const ClipGeometry g;
    const auto out = m->forward(Tensor({2, g.channels, g.frames, g.height, g.width}));
    CHECK(all_finite(out.embedding));
    CHECK(all_finite(out.cls_logits));
    CHECK(all_finite(out.head_logits));
    CHECK(all_finite(out.disc_logits));
  }

  TEST_CASE("evaluation forward is pure") {
    auto m = build_backbone(small_spec());
    const Tensor x = random_batch(3, ClipGeometry{}, 4);
    const auto a = m->forward(x);
    m->forward(random_batch(2, ClipGeometry{}, 5), true);
    const auto b = m->forward(x);
    CHECK(a.embedding == b.embedding);
    CHECK(a.cls_logits == b.cls_logits);
    CHECK(a.disc_logits == b.disc_logits);
  }

  TEST_CASE("geometry mismatch is a shape error") {
    auto m = build_backbone(small_spec());
    ClipGeometry g;
    g.height = 64;
    CHECK_THROWS_AS(m->forward(random_batch(1, g, 1)), ShapeError);
  }

  TEST_CASE("indivisible geometry is a configuration error naming the multiple") {
    ModelSpec s = small_spec();
    s.geometry.width = 40;
    try {
      build_backbone(s);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("32") != std::string::npos);
    }
    s = small_spec();
    s.geometry.frames = 6;
    CHECK_THROWS_AS(build_backbone(s), ConfigError);
    s = small_spec();
    s.preset = "residual3d_50";
    CHECK_THROWS_AS(build_backbone(s), ConfigError);
  }

  TEST_CASE("same init seed gives identical parameters; different seed differs") {
    auto a = build_backbone(small_spec());
    auto b = build_backbone(small_spec());
    ModelSpec s = small_spec();
    s.init_seed = 9;
    auto c = build_backbone(s);
    bool any_diff = false;
    for (std::size_t i = 0; i < a->params().all().size(); ++i) {
      CHECK(a->params().all()[i]->value == b->params().all()[i]->value);
      any_diff |= !(a->params().all()[i]->value == c->params().all()[i]->value);
    }
    CHECK(any_diff);
  }

  TEST_CASE("reported parameter count equals the registry contents") {
    for (const char* preset : {"residual3d_10", "residual3d_18"}) {
      ModelSpec s = small_spec();
      s.preset = preset;
      auto m = build_backbone(s);
      std::size_t n = 0;
      for (const auto& p : m->params().all()) n += p->value.size();
      CHECK(m->parameter_count() == n);
    }
  }

  TEST_CASE("presets differ only in block counts") {
    CHECK(preset_blocks("residual3d_10") == std::array<std::size_t, 4>{1, 1, 1, 1});
    CHECK(preset_blocks("residual3d_18") == std::array<std::size_t, 4>{2, 2, 2, 2});
    ModelSpec s10 = small_spec(), s18 = small_spec();
    s18.preset = "residual3d_18";
    auto a = build_backbone(s10);
    auto b = build_backbone(s18);
    std::set<std::string> names18;
    for (const auto& p : b->params().all()) names18.insert(p->name);
    // Every residual3d_10 parameter exists with the same shape in residual3d_18.
    for (const auto& p : a->params().all()) {
      const auto* q = b->params().find(p->name);
      REQUIRE(q != nullptr);
      CHECK(q->value.shape() == p->value.shape());
    }
    for (const auto& n : names18)
      if (!a->params().find(n)) CHECK(n.find(".1.") != std::string::npos);
  }

  TEST_CASE("components have disjoint prefixes and the documented head widths") {
    auto m = build_backbone(small_spec());
    std::set<std::string> comps;
    for (const auto& p : m->params().all()) comps.insert(ModelBundle::component_of(p->name));
    CHECK(comps == std::set<std::string>{"f", "cls", "head", "disc"});
    CHECK(m->params().find("cls.fc.weight")->value.shape() == Tensor::Shape{2, 8});
    CHECK(m->params().find("head.fc.weight")->value.shape() == Tensor::Shape{2, 8});
    CHECK(m->params().find("disc.fc2.weight")->value.shape() == Tensor::Shape{1, 8});
  }

  TEST_CASE("adversarial boundary") {
    Tensor g({2, 3});
    for (std::size_t i = 0; i < 6; ++i) g[i] = static_cast<Real>(i) - 2;
    CHECK(&adversarial_boundary(g) == &g);
    const Tensor rev = adversarial_boundary_backward(g, AdversarialMode::gradient_reversal, 1.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(rev[i] == -g[i]);
    const Tensor zero = adversarial_boundary_backward(g, AdversarialMode::gradient_reversal, 0.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(zero[i] == 0);
    CHECK(adversarial_boundary_backward(g, AdversarialMode::joint_min, 3.0) == g);
    CHECK_THROWS_AS(adversarial_boundary_backward(g, AdversarialMode::gradient_reversal, -1.0), ConfigError);
    CHECK(parse_adversarial_mode("joint_min") == AdversarialMode::joint_min);
    CHECK_THROWS_AS(parse_adversarial_mode("minimax"), ConfigError);
  }

  TEST_CASE("coefficient zero leaves f untouched by the discriminator") {
    ModelSpec s = small_spec();
    s.grl_coefficient = 0.0;
    auto m = build_backbone(s);
    const Tensor x = random_batch(2, s.geometry, 6);
    m->forward(x, true);
    m->params().zero_grad();
    OutputGradients og;
    og.disc_logits = Tensor({2}, 1);
    m->backward(og);
    bool disc_touched = false;
    for (const auto& p : m->params().all()) {
      double mag = 0;
      for (Real v : p->grad.span()) mag += std::abs(v);
      const auto comp = ModelBundle::component_of(p->name);
      if (comp == "disc") disc_touched |= mag > 0;
      else CHECK_MESSAGE(mag == 0, p->name);
    }
    CHECK(disc_touched);
  }
}
