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
// Finite-difference checks in double precision.
#include <doctest.h>

#include "checks.hpp"

using namespace vidmatch;

TEST_SUITE("gradcheck") {
  TEST_CASE("total-loss gradient matches central differences for every parameter") {
    const auto rep = checks::total_loss_fd(1e-3);
    MESSAGE("checked " << rep.checked << " parameters, worst relative error " << rep.worst << " at " << rep.worst_at);
    // Every term is live: the unlabeled row passes the mask and the cross-set loss is non-zero.
    CHECK(rep.mask_rate == 1.0);
    CHECK(rep.l_align > 0);
    CHECK(rep.checked == init_state(checks::fd_config()).model->parameter_count());
    CHECK(rep.failed == 0);
  }

  TEST_CASE("gradient reversal negates and scales the extractor gradient") {
    for (double coef : {1.0, 0.5, 2.0}) {
      CAPTURE(coef);
      const auto r = checks::reversal_check(coef);
      CHECK(r.f_norm > 0);
      CHECK(r.worst_f <= 1e-6);
      // Discriminator parameters sit before the boundary and see the plain gradient.
      CHECK(r.worst_disc <= 1e-12);
    }
  }

  TEST_CASE("discriminator path gradient matches central differences") {
    const RunConfig c = checks::fd_config();
    const auto clips = testing::random_batch(2, c.model.geometry, 8);
    auto m = build_backbone(c.model);
    const double wts[] = {0.7, -1.3};
    auto objective = [&] {
      const ForwardOutput o = m->forward(clips, false);
      return wts[0] * o.disc_logits[0] + wts[1] * o.disc_logits[1];
    };
    m->forward(clips, true);
    m->params().zero_grad();
    OutputGradients og;
    og.disc_logits = Tensor({2});
    og.disc_logits[0] = wts[0];
    og.disc_logits[1] = wts[1];
    m->backward(og);
    double worst = 0;
    for (auto& p : m->params().all()) {
      auto vals = p->value.span();
      const auto grad = p->grad.span();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double x = vals[i], h = 1e-6 * std::max(1.0, std::abs(x));
        vals[i] = x + h;
        const double fp = objective();
        vals[i] = x - h;
        const double fm = objective();
        vals[i] = x;
        worst = std::max(worst, checks::rel_err(grad[i], (fp - fm) / (2 * h), 1e-4));
      }
    }
    MESSAGE("worst relative error " << worst);
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("weak views carry no gradient") {
    const auto r = checks::weak_view_check();
    CHECK(r.compared > r.trials / 2);
    CHECK(r.unequal == 0);
    CHECK(r.step_grads_equal);
  }

  TEST_CASE("each output gradient reaches only its own head and f") {
    const RunConfig c = checks::fd_config();
    const auto clips = testing::random_batch(2, c.model.geometry, 9);
    auto m = build_backbone(c.model);
    Tensor g({2, 2});
    g[0] = 1;
    g[3] = -1;
    Tensor gd({2});
    gd[0] = 1;
    const std::pair<std::string, OutputGradients> cases[] = {
        {"cls", {g, {}, {}}}, {"head", {{}, g, {}}}, {"disc", {{}, {}, gd}}};
    for (const auto& [owner, og] : cases) {
      CAPTURE(owner);
      m->forward(clips, true);
      m->params().zero_grad();
      m->backward(og);
      std::map<std::string, double> norm;
      for (auto& p : m->params().all())
        for (double v : p->grad.span()) norm[ModelBundle::component_of(p->name)] += v * v;
      CHECK(norm["f"] > 0);
      CHECK(norm[owner] > 0);
      for (const char* other : {"cls", "head", "disc"})
        if (owner != other) CHECK(norm[other] == 0);
    }
  }
}
