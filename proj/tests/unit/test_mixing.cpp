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

#include "helpers.hpp"
#include "vidmatch/mixing.hpp"

#include <set>

using namespace vidmatch;
using vidmatch::testing::random_batch;
using vidmatch::testing::random_clip;

namespace {

const ClipGeometry kGeom{3, 4, 8, 8};

}  // namespace

TEST_SUITE("mixing") {
  TEST_CASE("Beta(1,1) draws are uniform") {
    Rng rng(1);
    double s = 0;
    int low = 0;
    for (int i = 0; i < 10000; ++i) {
      const double l = sample_lambda(1.0, rng);
      s += l;
      low += l < 0.25;
    }
    CHECK(s / 10000 >= 0.48);
    CHECK(s / 10000 <= 0.52);
    CHECK(low > 2300);
    CHECK(low < 2700);
  }

  TEST_CASE("Beta draws stay in [0,1] and match the mean and variance") {
    for (double a : {0.2, 0.75, 2.0, 8.0}) {
      Rng rng(static_cast<std::uint64_t>(a * 100));
      double s = 0, s2 = 0;
      const int n = 20000;
      for (int i = 0; i < n; ++i) {
        const double l = sample_lambda(a, rng);
        REQUIRE(l >= 0);
        REQUIRE(l <= 1);
        s += l;
        s2 += l * l;
      }
      const double var = s2 / n - (s / n) * (s / n);
      CHECK(std::abs(s / n - 0.5) < 0.015);
      // Var Beta(a, a) = 1 / (4 (2a + 1)).
      CHECK(var == doctest::Approx(1.0 / (4 * (2 * a + 1))).epsilon(0.06));
    }
    Rng rng(2);
    CHECK(sample_beta(2.0, 6.0, rng) < 1.0);
    CHECK_THROWS_AS(sample_lambda(0.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_lambda(-1.0, rng), ConfigError);
  }

  TEST_CASE("fixed seed gives identical draws") {
    Rng a(5), b(5);
    for (int i = 0; i < 20; ++i) CHECK(sample_lambda(0.75, a) == sample_lambda(0.75, b));
  }

  TEST_CASE("vcsa endpoints are exact") {
    const Tensor x = random_batch(3, kGeom, 1), u = random_batch(3, kGeom, 2);
    const std::vector<int> y{0, 1, 0}, yp{1, 1, 0};
    const MixedBatch one = vcsa(x, y, u, yp, 1.0, 2);
    CHECK(one.clips == x);
    CHECK(one.soft_labels.v == std::vector<double>{1, 0, 0, 1, 1, 0});
    CHECK(one.disc_targets == std::vector<double>{0, 0, 0});
    const MixedBatch zero = vcsa(x, y, u, yp, 0.0, 2);
    CHECK(zero.clips == u);
    CHECK(zero.soft_labels.v == std::vector<double>{0, 1, 0, 1, 1, 0});
    CHECK(zero.disc_targets == std::vector<double>{1, 1, 1});
  }

  TEST_CASE("vcsa half mix example") {
    Tensor x({1, 1, 1, 1, 1}, Real(0.2)), u({1, 1, 1, 1, 1}, Real(0.6));
    const MixedBatch m = vcsa(x, {0}, u, {1}, 0.5, 2);
    CHECK(m.clips[0] == doctest::Approx(0.4));
    CHECK(m.soft_labels(0, 0) == 0.5);
    CHECK(m.soft_labels(0, 1) == 0.5);
    CHECK(m.disc_targets[0] == 0.5);
    CHECK(m.lambda_m == 0.5);
  }

  TEST_CASE("vcsa convexity, symmetry and label sums") {
    Rng rng(3);
    const Tensor x = random_batch(4, kGeom, 4), u = random_batch(4, kGeom, 5);
    const std::vector<int> y{0, 1, 2, 1}, yp{2, 2, 0, 1};
    for (int trial = 0; trial < 20; ++trial) {
      const double l = uniform01(rng);
      const MixedBatch m = vcsa(x, y, u, yp, l, 3);
      const MixedBatch r = vcsa(u, yp, x, y, 1 - l, 3);
      for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(m.clips[i] >= std::min(x[i], u[i]));
        CHECK(m.clips[i] <= std::max(x[i], u[i]));
        CHECK(std::abs(static_cast<double>(m.clips[i]) - r.clips[i]) < 1e-6);
      }
      for (std::size_t b = 0; b < 4; ++b) {
        double s = 0;
        for (double v : m.soft_labels.row(b)) s += v;
        CHECK(s == doctest::Approx(1.0));
        CHECK(m.disc_targets[b] == doctest::Approx(1 - l));
      }
    }
  }

  TEST_CASE("vcsa keeps temporally constant clips constant") {
    auto constant = [](std::uint64_t seed) {
      const VideoClip f = random_clip({3, 1, 8, 8}, seed);
      Tensor t({1, 3, 4, 8, 8});
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t tt = 0; tt < 4; ++tt)
          for (std::size_t i = 0; i < 64; ++i) t[(c * 4 + tt) * 64 + i] = f.pixels[c * 64 + i];
      return t;
    };
    const MixedBatch m = vcsa(constant(1), {0}, constant(2), {1}, 0.37, 2);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t tt = 1; tt < 4; ++tt)
        for (std::size_t i = 0; i < 64; ++i) CHECK(m.clips[(c * 4 + tt) * 64 + i] == m.clips[c * 4 * 64 + i]);
  }

  TEST_CASE("vcsa errors") {
    const Tensor x = random_batch(2, kGeom, 1), u3 = random_batch(3, kGeom, 2);
    CHECK_THROWS_AS(vcsa(x, {0, 1}, u3, {0, 0, 1}, 0.5, 2), ShapeError);
    const Tensor other = random_batch(2, {3, 4, 8, 16}, 3);
    CHECK_THROWS_AS(vcsa(x, {0, 1}, other, {0, 1}, 0.5, 2), ShapeError);
    CHECK_THROWS_AS(vcsa(x, {0, 2}, x, {0, 1}, 0.5, 2), ValidationError);
  }

  TEST_CASE("videomix box semantics") {
    const VideoClip a = random_clip(kGeom, 6), b = random_clip(kGeom, 7);
    const auto full = videomix_box(a, b, Cutout{0, 0, 8, 8});
    CHECK(full.clip.pixels == a.pixels);
    CHECK(full.area_fraction == 1.0);
    const auto q = videomix_box(a, b, Cutout{2, 4, 4, 4});
    CHECK(q.area_fraction == 0.25);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t x = 0; x < 8; ++x) {
            const bool inside = x >= 2 && x < 6 && y >= 4;
            CHECK(q.clip.at(c, t, y, x) == (inside ? a : b).at(c, t, y, x));
          }
  }

  TEST_CASE("random videomix never returns an empty rectangle") {
    const VideoClip a = random_clip(kGeom, 8), b = random_clip(kGeom, 9);
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
      const auto r = videomix(a, b, rng);
      CHECK(r.area_fraction > 0);
      CHECK(r.area_fraction <= 1);
      std::size_t from_a = 0;
      for (std::size_t k = 0; k < a.pixels.size(); ++k) from_a += r.clip.pixels[k] == a.pixels[k];
      CHECK(std::abs(static_cast<double>(from_a) / a.pixels.size() - r.area_fraction) < 1e-9);
    }
  }

  TEST_CASE("videomix batch labels follow area fractions") {
    Rng rng(11);
    const Tensor x = random_batch(3, kGeom, 12), u = random_batch(3, kGeom, 13);
    const MixedBatch m = videomix_batch(x, {0, 1, 0}, u, {1, 1, 1}, 2, rng);
    double mean = 0;
    for (std::size_t b = 0; b < 3; ++b) {
      const double s = m.soft_labels(b, 0) + m.soft_labels(b, 1);
      CHECK(s == doctest::Approx(1.0));
      if (b != 1) CHECK(m.disc_targets[b] == doctest::Approx(1 - m.soft_labels(b, 0)));
      mean += 1 - m.disc_targets[b];
    }
    CHECK(m.lambda_m == doctest::Approx(mean / 3));
  }

  TEST_CASE("pairing_subset draws distinct indices") {
    Rng rng(14);
    const auto p = pairing_subset(24, 6, rng);
    CHECK(p.size() == 6);
    for (auto i : p) CHECK(i < 24);
    CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 6);
    CHECK_THROWS(pairing_subset(3, 6, rng));
  }

  TEST_CASE("mode names") {
    for (auto m : {MixingMode::vcsa, MixingMode::videomix, MixingMode::off}) CHECK(parse_mixing_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_mixing_mode("cutmix"), ConfigError);
  }
}
