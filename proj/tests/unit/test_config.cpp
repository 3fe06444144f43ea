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

#include <fstream>

#include "helpers.hpp"
#include "vidmatch/config.hpp"

using namespace vidmatch;

namespace {

RunConfig reparse(const RunConfig& c) {
  RunConfig r;
  apply_key_values(r, parse_config_text(serialize(c)));
  return r;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults match the documented values") {
    const RunConfig c;
    CHECK(c.batch == 6);
    CHECK(c.mu == 4);
    CHECK(c.lr == 0.01);
    CHECK(c.momentum == 0.9);
    CHECK(c.weight_decay == 0.0005);
    CHECK(c.alpha == 0.75);
    CHECK(c.weights.omega_m == 1.0);
    CHECK(c.weights.omega_f == 0.01);
    CHECK(c.weights.omega_a == 1.0);
    CHECK(c.weights.rho == 1.0);
    CHECK(c.tau_fixed == 0.95);
    CHECK(c.model.preset == "residual3d_10");
    CHECK(c.model.embed_dim == 64);
    CHECK(c.model.widths == std::array<std::size_t, 4>{16, 32, 64, 128});
    CHECK(c.model.geometry == ClipGeometry{3, 8, 32, 32});
    CHECK(c.model.adversarial == AdversarialMode::gradient_reversal);
    CHECK(c.model.grl_coefficient == 1.0);
    CHECK(c.augment.strong_n == 2);
    CHECK(c.augment.cutout_enabled);
  }

  TEST_CASE("serialize then parse is the identity") {
    RunConfig c;
    c.seed = 77;
    c.lr = 0.0123456789012345;
    c.augment.strong_ops = {StrongOp::rotate, StrongOp::solarize};
    c.model.widths = {2, 4, 6, 8};
    c.weights.rho_from_lambda = true;
    c.mixing = MixingMode::videomix;
    const RunConfig r = reparse(c);
    CHECK(serialize(r) == serialize(c));
    CHECK(config_hash(r) == config_hash(c));
    CHECK(r.lr == c.lr);
    CHECK(r.augment.strong_ops == c.augment.strong_ops);
    CHECK(r.weights.rho_from_lambda);
  }

  TEST_CASE("hash changes with any key") {
    const RunConfig c;
    for (const auto& [k, v] : to_key_values(c)) {
      if (k == "preset") continue;
      RunConfig d = c;
      std::string nv = v == "true" ? "false" : v == "false" ? "true" : v;
      if (nv == v) continue;
      apply_key_values(d, {{k, nv}});
      CHECK_MESSAGE(config_hash(d) != config_hash(c), k);
    }
    RunConfig d = c;
    d.seed = 1;
    CHECK(config_hash(d) != config_hash(c));
    CHECK(config_hash(c).size() == 16);
  }

  TEST_CASE("unknown keys and bad values name the key") {
    RunConfig c;
    try {
      apply_key_values(c, {{"train.lr_typo", "1"}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.lr_typo") != std::string::npos);
    }
    try {
      apply_key_values(c, {{"train.batch", "six"}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.batch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("no equals sign here"), ConfigError);
    CHECK_THROWS_AS(parse_override("=3"), ConfigError);
    CHECK(parse_override(" sat.lambda_de = 0.9 ") == std::pair<std::string, std::string>{"sat.lambda_de", "0.9"});
  }

  TEST_CASE("duplicate keys: last wins") {
    const auto kv = parse_config_text("# comment\ntrain.seed = 1\n\ntrain.seed = 5\n");
    CHECK(kv.at("train.seed") == "5");
    const RunConfig c = resolve_config({}, "", {{"train.seed", "2"}, {"train.seed", "9"}});
    CHECK(c.seed == 9);
  }

  TEST_CASE("layering: defaults, preset, file, overrides") {
    const RunConfig a = resolve_config({{"preset", "cr_sat"}, {"loss.omega_m", "0.5"}}, "", {{"loss.omega_m", "0.25"}});
    CHECK(a.preset == "cr_sat");
    CHECK(a.weights.omega_m == 0.25);
    CHECK(a.mixing == MixingMode::off);
    const RunConfig b = resolve_config({{"preset", "cr_sat"}}, "firematch_full", {});
    CHECK(b.preset == "firematch_full");
    CHECK(b.mixing == MixingMode::vcsa);
    const RunConfig ft = resolve_config({}, "cr_ft", {{"threshold.fixed", "0.9"}});
    CHECK(ft.threshold_mode == ThresholdMode::fixed);
    CHECK(ft.tau_fixed == 0.9);
    const RunConfig sat = resolve_config({}, "", {{"threshold.fixed", "0.9"}});
    CHECK(sat.threshold_mode == ThresholdMode::fixed);
    CHECK_THROWS_AS(resolve_config({}, "", {{"preset", "cr_ft"}}), ConfigError);
  }

  TEST_CASE("read_config_file") {
    vidmatch::testing::TempDir d("cfg");
    std::ofstream(d.path() / "run.cfg") << "preset = cr_ft\ntrain.epochs = 3\n";
    const auto kv = read_config_file(d.path() / "run.cfg");
    CHECK(kv.at("train.epochs") == "3");
    CHECK_THROWS_AS(read_config_file(d.path() / "missing.cfg"), ConfigError);
  }

  TEST_CASE("presets encode the ablation rows") {
    CHECK(preset_names() ==
          std::vector<std::string>{"cr_ft", "cr_sat", "cr_sat_ada_vm", "cr_sat_ada_vcsa", "firematch_full", "supervised_only"});
    auto make = [](const std::string& n) {
      RunConfig c;
      apply_preset(c, n);
      return c;
    };
    CHECK(serialize(make("firematch_full")) == serialize(RunConfig{}));
    const RunConfig ft = make("cr_ft");
    CHECK(ft.threshold_mode == ThresholdMode::fixed);
    CHECK(ft.mixing == MixingMode::off);
    CHECK(ft.weights.omega_f == 0);
    CHECK(ft.weights.omega_a == 0);
    const RunConfig sat = make("cr_sat");
    CHECK(sat.threshold_mode == ThresholdMode::sat);
    CHECK(sat.weights.omega_a == 0);
    CHECK(make("cr_sat_ada_vm").mixing == MixingMode::videomix);
    CHECK(make("cr_sat_ada_vm").weights.omega_a == 1.0);
    CHECK(make("cr_sat_ada_vcsa").mixing == MixingMode::vcsa);
    CHECK(make("cr_sat_ada_vcsa").weights.omega_f == 0);
    const RunConfig sup = make("supervised_only");
    CHECK(sup.weights.omega_m == 0);
    CHECK(sup.weights.omega_f == 0);
    CHECK(sup.weights.omega_a == 0);
    CHECK(sup.ignore_unlabeled);
    RunConfig c;
    CHECK_THROWS_AS(apply_preset(c, "fixmatch"), ConfigError);
  }

  TEST_CASE("preset purity") {
    RunConfig base;
    base.seed = 3;
    base.alpha = 0.4;
    base.weights.omega_m = 0.7;
    for (const auto& name : preset_names()) {
      RunConfig a = base;
      apply_preset(a, name);
      RunConfig b = reparse(base);
      apply_preset(b, name);
      CHECK_MESSAGE(serialize(a) == serialize(b), name);
      RunConfig twice = a;
      apply_preset(twice, name);
      CHECK_MESSAGE(serialize(twice) == serialize(a), name);
      // Presets switch between each other without residue.
      RunConfig via = base;
      apply_preset(via, "supervised_only");
      apply_preset(via, name);
      RunConfig direct = base;
      apply_preset(direct, name);
      direct.ignore_unlabeled = via.ignore_unlabeled;
      CHECK_MESSAGE(serialize(via) == serialize(direct), name);
    }
  }

  TEST_CASE("validate rejects out-of-domain values") {
    auto bad = [](void (*mutate)(RunConfig&)) {
      RunConfig c;
      mutate(c);
      CHECK_THROWS_AS(validate(c), ConfigError);
    };
    bad([](RunConfig& c) { c.batch = 0; });
    bad([](RunConfig& c) { c.mu = 0; });
    bad([](RunConfig& c) { c.lr = 0; });
    bad([](RunConfig& c) { c.lambda_de = 1.0; });
    bad([](RunConfig& c) { c.alpha = 0; });
    bad([](RunConfig& c) {
      c.threshold_mode = ThresholdMode::fixed;
      c.tau_fixed = 0.4;
    });
    bad([](RunConfig& c) { c.model.geometry.height = 20; });
    bad([](RunConfig& c) { c.weights.omega_a = -1; });
    CHECK_NOTHROW(validate(RunConfig{}));
  }
}
