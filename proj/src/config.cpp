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
#include "vidmatch/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace vidmatch {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

#define VM_SIZE(expr)                                                                        \
  Field {                                                                                    \
    [](const RunConfig& c) { return fmt(static_cast<std::size_t>(c.expr)); },                \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = to_u64(k, v); } \
  }
#define VM_REAL(expr)                                                                          \
  Field {                                                                                      \
    [](const RunConfig& c) { return fmt(static_cast<double>(c.expr)); },                       \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = to_double(k, v); } \
  }
#define VM_BOOL(expr)                                                                        \
  Field {                                                                                    \
    [](const RunConfig& c) { return fmt(static_cast<bool>(c.expr)); },                       \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = to_bool(k, v); } \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["preset"] = {[](const RunConfig& c) { return c.preset; },
                   [](RunConfig& c, const std::string&, const std::string& v) { c.preset = v; }};
    t["train.batch"] = VM_SIZE(batch);
    t["train.mu"] = VM_SIZE(mu);
    t["train.lr"] = VM_REAL(lr);
    t["train.steps"] = VM_SIZE(steps);
    t["train.epochs"] = VM_SIZE(epochs);
    t["train.momentum"] = VM_REAL(momentum);
    t["train.weight_decay"] = VM_REAL(weight_decay);
    t["train.eval_interval"] = VM_SIZE(eval_interval);
    t["train.eval_batch"] = VM_SIZE(eval_batch);
    t["train.seed"] = VM_SIZE(seed);
    t["train.ignore_unlabeled"] = VM_BOOL(ignore_unlabeled);
    t["data.channels"] = VM_SIZE(model.geometry.channels);
    t["data.frames"] = VM_SIZE(model.geometry.frames);
    t["data.height"] = VM_SIZE(model.geometry.height);
    t["data.width"] = VM_SIZE(model.geometry.width);
    t["data.num_classes"] = VM_SIZE(model.num_classes);
    t["model.preset"] = {[](const RunConfig& c) { return c.model.preset; },
                         [](RunConfig& c, const std::string&, const std::string& v) { c.model.preset = v; }};
    t["model.embed_dim"] = VM_SIZE(model.embed_dim);
    t["model.disc_hidden"] = VM_SIZE(model.disc_hidden);
    t["model.norm_groups"] = VM_SIZE(model.norm_groups);
    t["model.init_seed"] = VM_SIZE(model.init_seed);
    t["model.widths"] = {[](const RunConfig& c) {
                           std::string s;
                           for (std::size_t i = 0; i < 4; ++i) s += (i ? "," : "") + fmt(c.model.widths[i]);
                           return s;
                         },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           const auto items = split_list(v);
                           if (items.size() != 4) throw ConfigError(k + ": expected four comma-separated widths");
                           for (std::size_t i = 0; i < 4; ++i) c.model.widths[i] = to_u64(k, items[i]);
                         }};
    t["adversarial.mode"] = {
        [](const RunConfig& c) { return to_string(c.model.adversarial); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.model.adversarial = parse_adversarial_mode(v); }};
    t["adversarial.grl_coefficient"] = VM_REAL(model.grl_coefficient);
    t["sat.lambda_de"] = VM_REAL(lambda_de);
    t["threshold.mode"] = {
        [](const RunConfig& c) { return to_string(c.threshold_mode); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.threshold_mode = parse_threshold_mode(v); }};
    // Setting a fixed value selects the fixed mode.
    t["threshold.fixed"] = {[](const RunConfig& c) { return fmt(c.tau_fixed); },
                            [](RunConfig& c, const std::string& k, const std::string& v) {
                              c.tau_fixed = to_double(k, v);
                              c.threshold_mode = ThresholdMode::fixed;
                            }};
    t["mixing.mode"] = {[](const RunConfig& c) { return to_string(c.mixing); },
                        [](RunConfig& c, const std::string&, const std::string& v) { c.mixing = parse_mixing_mode(v); }};
    t["mixing.alpha"] = VM_REAL(alpha);
    t["augment.weak_mode"] = {
        [](const RunConfig& c) { return to_string(c.augment.weak_mode); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.augment.weak_mode = parse_weak_mode(v); }};
    t["augment.strong_ops"] = {[](const RunConfig& c) {
                                 std::string s;
                                 for (std::size_t i = 0; i < c.augment.strong_ops.size(); ++i)
                                   s += (i ? "," : "") + to_string(c.augment.strong_ops[i]);
                                 return s;
                               },
                               [](RunConfig& c, const std::string&, const std::string& v) {
                                 c.augment.strong_ops.clear();
                                 for (const auto& item : split_list(v)) c.augment.strong_ops.push_back(parse_strong_op(item));
                               }};
    t["augment.strong_n"] = VM_SIZE(augment.strong_n);
    t["augment.magnitude_max"] = VM_REAL(augment.magnitude_max);
    t["augment.cutout"] = VM_BOOL(augment.cutout_enabled);
    t["augment.cutout_max_fraction"] = VM_REAL(augment.cutout_max_fraction);
    t["loss.omega_m"] = VM_REAL(weights.omega_m);
    t["loss.omega_f"] = VM_REAL(weights.omega_f);
    t["loss.omega_a"] = VM_REAL(weights.omega_a);
    t["loss.rho"] = {[](const RunConfig& c) { return c.weights.rho_from_lambda ? std::string("lambda_m") : fmt(c.weights.rho); },
                     [](RunConfig& c, const std::string& k, const std::string& v) {
                       c.weights.rho_from_lambda = v == "lambda_m";
                       if (!c.weights.rho_from_lambda) c.weights.rho = to_double(k, v);
                     }};
    t["synth.n_labeled_per_class"] = VM_SIZE(synth.n_labeled_per_class);
    t["synth.n_unlabeled"] = VM_SIZE(synth.n_unlabeled);
    t["synth.n_test"] = VM_SIZE(synth.n_test);
    t["synth.noise_std"] = VM_REAL(synth.noise_std);
    t["synth.confuser_fraction"] = VM_REAL(synth.confuser_fraction);
    t["synth.color_swap"] = VM_REAL(synth.color_swap);
    t["synth.seed"] = VM_SIZE(synth.seed);
    return t;
  }();
  return table;
}

#undef VM_SIZE
#undef VM_REAL
#undef VM_BOOL

}  // namespace

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "sat") return ThresholdMode::sat;
  if (s == "fixed") return ThresholdMode::fixed;
  throw ConfigError("unknown threshold mode: " + s);
}

std::string to_string(ThresholdMode m) { return m == ThresholdMode::sat ? "sat" : "fixed"; }

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv;
  for (const auto& [key, f] : fields()) kv[key] = f.get(c);
  return kv;
}

void apply_key_values(RunConfig& c, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key: " + key);
    try {
      it->second.set(c, key, value);
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      throw ConfigError(what.rfind(key, 0) == 0 ? what : key + ": " + what);
    }
  }
}

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) std::cerr << "notice: " << origin << ": key '" << key << "' set more than once, last value wins\n";
    kv[key] = value;
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string serialize(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_key_values(c)) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a(serialize(c))); }

void validate(const RunConfig& c) {
  if (c.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (c.mu < 1) throw ConfigError("train.mu must be >= 1");
  if (!(c.lr > 0)) throw ConfigError("train.lr must be > 0");
  if (c.momentum < 0 || c.momentum >= 1) throw ConfigError("train.momentum must lie in [0, 1)");
  if (c.weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
  if (c.eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
  if (c.eval_batch < 1) throw ConfigError("train.eval_batch must be >= 1");
  if (!(c.lambda_de > 0 && c.lambda_de < 1)) throw ConfigError("sat.lambda_de must lie in (0, 1)");
  if (c.threshold_mode == ThresholdMode::fixed) fixed_thresholds(c.tau_fixed, c.model.num_classes);
  if (!(c.alpha > 0)) throw ConfigError("mixing.alpha must be > 0");
  validate(c.augment);
  validate(c.weights);
  validate(c.synth);
  validate(c.model);
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"cr_ft", "cr_sat", "cr_sat_ada_vm", "cr_sat_ada_vcsa", "firematch_full",
                                              "supervised_only"};
  return names;
}

void apply_preset(RunConfig& c, const std::string& name) {
  const RunConfig d;
  c.threshold_mode = ThresholdMode::sat;
  c.tau_fixed = d.tau_fixed;
  c.mixing = MixingMode::vcsa;
  c.weights.omega_m = d.weights.omega_m;
  c.weights.omega_f = d.weights.omega_f;
  c.weights.omega_a = d.weights.omega_a;
  c.ignore_unlabeled = false;
  if (name == "firematch_full") {
  } else if (name == "cr_ft") {
    c.threshold_mode = ThresholdMode::fixed;
    c.mixing = MixingMode::off;
    c.weights.omega_f = 0;
    c.weights.omega_a = 0;
  } else if (name == "cr_sat") {
    c.mixing = MixingMode::off;
    c.weights.omega_f = 0;
    c.weights.omega_a = 0;
  } else if (name == "cr_sat_ada_vm") {
    c.mixing = MixingMode::videomix;
    c.weights.omega_f = 0;
  } else if (name == "cr_sat_ada_vcsa") {
    c.weights.omega_f = 0;
  } else if (name == "supervised_only") {
    c.mixing = MixingMode::off;
    c.weights.omega_m = 0;
    c.weights.omega_f = 0;
    c.weights.omega_a = 0;
    c.ignore_unlabeled = true;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
  }
  c.preset = name;
}

RunConfig resolve_config(const KeyValues& file, const std::string& preset,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig c;
  std::string name = preset;
  if (name.empty()) {
    const auto it = file.find("preset");
    name = it == file.end() ? c.preset : it->second;
  }
  apply_preset(c, name);
  KeyValues rest = file;
  rest.erase("preset");
  apply_key_values(c, rest);
  KeyValues seen;
  for (const auto& [k, v] : overrides) {
    if (k == "preset") throw ConfigError("use --preset to select a preset");
    if (seen.count(k) && seen[k] != v) std::cerr << "notice: override '" << k << "' given more than once, last value wins\n";
    seen[k] = v;
    apply_key_values(c, {{k, v}});
  }
  return c;
}

std::pair<std::string, std::string> parse_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value, got '" + s + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

}  // namespace vidmatch
