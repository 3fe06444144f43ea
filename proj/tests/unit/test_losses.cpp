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
#include <functional>
#include <set>

#include "helpers.hpp"
#include "vidmatch/losses.hpp"

using namespace vidmatch;
using vidmatch::testing::random_simplex;

namespace {

// Central differences of f with respect to every entry of m, compared to the analytic gradient.
void check_grad(const char* what, ProbMatrix m, const ProbMatrix& analytic, const std::function<double(const ProbMatrix&)>& f) {
  INFO(std::string(what));
  REQUIRE(analytic.v.size() == m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    const double keep = m.v[i];
    // Step relative to the entry: CE terms have curvature 1/p^2 near small probabilities.
    const double h = 1e-5 * std::max(std::abs(keep), 1e-6);
    m.v[i] = keep + h;
    const double up = f(m);
    m.v[i] = keep - h;
    const double down = f(m);
    m.v[i] = keep;
    const double num = (up - down) / (2 * h);
    CAPTURE(i);
    CAPTURE(num);
    CHECK(std::abs(num - analytic.v[i]) <= 1e-5 * std::max({1.0, std::abs(num), std::abs(analytic.v[i])}));
  }
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("supervised examples") {
    auto r = supervised_losses(ProbMatrix{{1, 0}, {0, 1}}, ProbMatrix{{1, 0}, {0, 1}}, {0, 1});
    CHECK(r.l_cs == doctest::Approx(0).scale(1));
    CHECK(r.l_ps == doctest::Approx(0).scale(1));
    r = supervised_losses(ProbMatrix{{0.5, 0.5}}, ProbMatrix{{0.5, 0.5}}, {1});
    CHECK(r.l_cs == doctest::Approx(std::log(2.0)));
    CHECK(r.l_ps == doctest::Approx(0.6931).epsilon(1e-4));
    r = supervised_losses(ProbMatrix{{0.8, 0.2}}, ProbMatrix{{0.5, 0.5}}, {0});
    CHECK(r.l_cs == doctest::Approx(-std::log(0.8)));
    CHECK(r.l_cs == doctest::Approx(0.22314).epsilon(1e-5));
    CHECK_THROWS_AS(supervised_losses(ProbMatrix{{0.5, 0.5}}, ProbMatrix{{0.5, 0.5}}, {2}), ValidationError);
    CHECK_THROWS_AS(supervised_losses(ProbMatrix{{0.5, 0.5}}, ProbMatrix{{0.5, 0.5}}, {-1}), ValidationError);
  }

  TEST_CASE("consistency examples") {
    auto r = consistency_loss(ProbMatrix{{0.6, 0.4}}, ProbMatrix{{0.5, 0.5}}, {0.95, 0.95});
    CHECK(r.l_match == 0);
    CHECK(r.mask_rate == 0);
    r = consistency_loss(ProbMatrix{{0.97, 0.03}}, ProbMatrix{{0.8, 0.2}}, {0.95, 0.95});
    CHECK(r.l_match == doctest::Approx(0.22314).epsilon(1e-5));
    CHECK(r.mask_rate == 1);
    r = consistency_loss(ProbMatrix{{0.97, 0.03}, {0.6, 0.4}}, ProbMatrix{{0.8, 0.2}, {0.1, 0.9}}, {0.95, 0.95});
    CHECK(r.l_match == doctest::Approx(-std::log(0.8) / 2));
    CHECK(r.mask_rate == 0.5);
    // Pseudo-label is the weak argmax, not the strong one.
    r = consistency_loss(ProbMatrix{{0.02, 0.98}}, ProbMatrix{{0.9, 0.1}}, {0.5, 0.5});
    CHECK(r.l_match == doctest::Approx(-std::log(0.1)));
  }

  TEST_CASE("fairness examples") {
    SatState s = sat_init(2, 0.9);
    // One masked row per class gives p_bar = [0.5, 0.5] and h_bar = [0.5, 0.5].
    const ProbMatrix weak{{0.99, 0.01}, {0.01, 0.99}};
    const ProbMatrix strong{{0.6, 0.4}, {0.4, 0.6}};
    auto r = fairness_loss(s, weak, strong, {0.9, 0.9});
    CHECK_FALSE(r.skipped);
    CHECK(r.l_fair == doctest::Approx(std::log(0.5)));
    CHECK(r.l_fair == doctest::Approx(-0.6931).epsilon(1e-4));
    r = fairness_loss(s, ProbMatrix{{0.6, 0.4}}, ProbMatrix{{0.6, 0.4}}, {0.9, 0.9});
    CHECK(r.skipped);
    CHECK(r.l_fair == 0);
  }

  TEST_CASE("fairness follows the literal formula") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      SatState s = sat_init(3, 0.9);
      for (int k = 0; k < 5; ++k) s = sat_update(s, random_simplex(6, 3, rng));
      const ProbMatrix strong = random_simplex(6, 3, rng);
      MaskResult mask;
      for (std::size_t b = 0; b < 6; ++b) {
        mask.mask.push_back(uniform01(rng) < 0.7);
        mask.pseudo_classes.push_back(0);
        mask.confidences.push_back(1);
      }
      if (mask.count() == 0) mask.mask[0] = true;
      const auto r = fairness_loss(s, strong, mask);
      // Oracle.
      double pbar[3] = {0, 0, 0}, hbar[3] = {0, 0, 0}, a[3], b[3], sa = 0, sb = 0;
      const double m = static_cast<double>(mask.count());
      for (std::size_t i = 0; i < 6; ++i) {
        if (!mask.mask[i]) continue;
        std::size_t best = 0;
        for (std::size_t c = 0; c < 3; ++c) {
          pbar[c] += strong(i, c) / m;
          if (strong(i, c) > strong(i, best)) best = c;
        }
        hbar[best] += 1 / m;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        a[c] = s.p_local[c] / s.h_tilde[c];
        b[c] = pbar[c] / std::max(hbar[c], 1e-8);
        sa += a[c];
        sb += b[c];
      }
      double want = 0;
      for (std::size_t c = 0; c < 3; ++c) want += a[c] / sa * std::log(b[c] / sb);
      CHECK(r.l_fair == doctest::Approx(want).epsilon(1e-9));
    }
  }

  TEST_CASE("fairness is invariant to scaling p_bar") {
    // Scaling every masked strong row scales p_bar by the same factor.
    SatState s = sat_init(2, 0.9);
    s.p_local = {0.6, 0.4};
    MaskResult mask{{true, true, true}, {0, 1, 0}, {1, 1, 1}};
    ProbMatrix strong{{0.7, 0.3}, {0.2, 0.8}, {0.9, 0.1}};
    const double base = fairness_loss(s, strong, mask).l_fair;
    for (double k : {0.5, 3.0}) {
      ProbMatrix scaled = strong;
      for (auto& v : scaled.v) v *= k;
      CHECK(fairness_loss(s, scaled, mask).l_fair == doctest::Approx(base).epsilon(1e-12));
    }
  }

  TEST_CASE("align examples") {
    auto r = align_loss(ProbMatrix{{0.5, 0.5}}, ProbMatrix{{0.5, 0.5}}, {0.5}, {0.5}, 1.0, 0.5);
    CHECK(r.l_align == doctest::Approx(1.0397).epsilon(1e-4));
    CHECK(r.l_align == doctest::Approx(std::log(2.0) * 1.5));
    r = align_loss(ProbMatrix{{0.7, 0.3}}, ProbMatrix{{1, 0}}, {0.2}, {0.0}, 1.0, 1.0);
    CHECK(r.l_class == doctest::Approx(-std::log(0.7)));
    CHECK(r.l_disc == doctest::Approx(-std::log(0.8)));
    r = align_loss(ProbMatrix{{0.7, 0.3}}, ProbMatrix{{0.4, 0.6}}, {0.2}, {0.3}, 0.0, 0.0);
    CHECK(r.l_align == 0);
  }

  TEST_CASE("total loss identity and examples") {
    LossBundle b{1, 1, 1, 1, 1, 0, 0};
    CHECK(total_loss(b, LossWeights{}) == doctest::Approx(4.01).epsilon(1e-12));
    CHECK(b.total == doctest::Approx(4.01).epsilon(1e-12));
    LossBundle z{0.3, 2, 3, -4, 5, 0, 0};
    LossWeights w0;
    w0.omega_m = w0.omega_f = w0.omega_a = 0;
    CHECK(total_loss(z, w0) == 0.3);
    LossWeights cr_sat;
    cr_sat.omega_f = cr_sat.omega_a = 0;
    CHECK(total_loss(z, cr_sat) == doctest::Approx(0.3 + 5).epsilon(1e-12));
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
      LossBundle p{uniform01(rng), uniform01(rng), uniform01(rng), -uniform01(rng), uniform01(rng), 0, 0};
      LossWeights w;
      w.omega_m = uniform01(rng), w.omega_f = uniform01(rng), w.omega_a = uniform01(rng);
      const double want = w.omega_m * (p.l_ps + p.l_match) + w.omega_f * p.l_fair + w.omega_a * p.l_align + p.l_cs;
      CHECK(std::abs(total_loss(p, w) - want) < 1e-12);
    }
  }

  TEST_CASE("total loss names the non-finite term") {
    LossBundle b{1, 1, std::nan(""), 1, 1, 0, 0};
    try {
      total_loss(b, LossWeights{});
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("L_match") != std::string::npos);
    }
  }

  TEST_CASE("CE parts are non-negative on random inputs") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const ProbMatrix a = random_simplex(4, 3, rng), b = random_simplex(4, 3, rng);
      const auto s = supervised_losses(a, b, {0, 1, 2, 1});
      CHECK(s.l_cs >= 0);
      CHECK(s.l_ps >= 0);
      CHECK(consistency_loss(a, b, {0.4, 0.4, 0.4}).l_match >= 0);
      const auto al = align_loss(a, b, {0.3, 0.6, 0.9, 0.1}, {0.2, 0.5, 0.5, 1.0}, 1.0, uniform01(rng));
      CHECK(al.l_align >= 0);
    }
  }

  TEST_CASE("probability-space gradients match finite differences") {
    Rng rng(4);
    const ProbMatrix cls = random_simplex(3, 3, rng), head = random_simplex(3, 3, rng);
    const std::vector<int> y{2, 0, 1};
    const auto sup = supervised_losses(cls, head, y);
    check_grad("cls", cls, sup.d_cls, [&](const ProbMatrix& p) { return supervised_losses(p, head, y).l_cs; });
    check_grad("head", head, sup.d_head, [&](const ProbMatrix& p) { return supervised_losses(cls, p, y).l_ps; });

    const ProbMatrix weak = random_simplex(5, 3, rng, 0.3), strong = random_simplex(5, 3, rng);
    const std::vector<double> t{0.34, 0.34, 0.34};
    const auto cons = consistency_loss(weak, strong, t);
    check_grad("match", strong, cons.d_strong, [&](const ProbMatrix& p) { return consistency_loss(weak, p, t).l_match; });

    // Fairness with every class present among the masked strong argmaxes, so no floor is active.
    SatState s = sat_update(sat_init(3, 0.9), weak);
    ProbMatrix fs;
    for (;;) {
      fs = random_simplex(5, 3, rng);
      std::set<std::size_t> seen;
      for (std::size_t b = 0; b < 5; ++b)
        if (cons.mask.mask[b]) seen.insert(argmax(fs.row(b)));
      if (seen.size() == 3) break;
    }
    const auto fair = fairness_loss(s, fs, cons.mask);
    REQUIRE_FALSE(fair.skipped);
    check_grad("fair", fs, fair.d_strong, [&](const ProbMatrix& p) { return fairness_loss(s, p, cons.mask).l_fair; });

    const ProbMatrix soft = random_simplex(3, 3, rng);
    const std::vector<double> dp{0.3, 0.7, 0.5}, z{0.25, 0.25, 0.25};
    const auto al = align_loss(cls, soft, dp, z, 0.8, 0.75);
    check_grad("align", cls, al.d_cls, [&](const ProbMatrix& p) { return align_loss(p, soft, dp, z, 0.8, 0.75).l_align; });
    ProbMatrix dpm(3, 1), ddm(3, 1);
    for (std::size_t i = 0; i < 3; ++i) dpm.v[i] = dp[i], ddm.v[i] = al.d_disc[i];
    check_grad("disc", dpm, ddm, [&](const ProbMatrix& p) { return align_loss(cls, soft, p.v, z, 0.8, 0.75).l_align; });
  }

  TEST_CASE("no gradient flows to the weak view") {
    Rng rng(5);
    const ProbMatrix weak = random_simplex(6, 2, rng, 2.0), strong = random_simplex(6, 2, rng);
    const std::vector<double> t{0.6, 0.6};
    const double base = consistency_loss(weak, strong, t).l_match;
    // Small perturbations that keep every argmax and mask decision leave L_match bitwise equal.
    for (int trial = 0; trial < 50; ++trial) {
      ProbMatrix w = weak;
      for (std::size_t b = 0; b < 6; ++b) {
        const double d = 1e-4 * (2 * uniform01(rng) - 1);
        w(b, 0) += d;
        w(b, 1) -= d;
      }
      if (compute_mask(w, t).mask != compute_mask(weak, t).mask) continue;
      CHECK(consistency_loss(w, strong, t).l_match == base);
    }
  }

  TEST_CASE("rho resolution") {
    LossWeights w;
    CHECK(w.resolved_rho(0.3) == 1.0);
    w.rho_from_lambda = true;
    CHECK(w.resolved_rho(0.3) == 0.3);
    w.omega_f = -1;
    CHECK_THROWS_AS(validate(w), ConfigError);
  }
}
