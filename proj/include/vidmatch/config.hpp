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
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vidmatch/augment.hpp"
#include "vidmatch/losses.hpp"
#include "vidmatch/mixing.hpp"
#include "vidmatch/model.hpp"
#include "vidmatch/video_data.hpp"

namespace vidmatch {

enum class ThresholdMode { sat, fixed };

ThresholdMode parse_threshold_mode(const std::string& s);
std::string to_string(ThresholdMode m);

struct RunConfig {
  std::string preset = "firematch_full";
  std::size_t batch = 6;
  std::size_t mu = 4;
  ModelSpec model;
  /// 0.03 plateaus or collapses at B = 6 over a few hundred steps; 0.01 trains reliably.
  double lr = 0.01;
  /// Optimizer steps K. 0 means epochs * steps per epoch.
  std::size_t steps = 0;
  std::size_t epochs = 40;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  /// Evaluate and checkpoint every this many epochs.
  std::size_t eval_interval = 1;
  std::size_t eval_batch = 20;
  double lambda_de = 0.99;
  ThresholdMode threshold_mode = ThresholdMode::sat;
  double tau_fixed = 0.95;
  MixingMode mixing = MixingMode::vcsa;
  double alpha = 0.75;
  AugmentPolicy augment;
  LossWeights weights;
  /// Train on labeled data only while keeping the same step schedule.
  bool ignore_unlabeled = false;
  std::uint64_t seed = 0;
  SynthSpec synth;
};

/// Flat key/value form, keys sorted.
using KeyValues = std::map<std::string, std::string>;

/// Every key with its current value.
KeyValues to_key_values(const RunConfig& c);
/// Applies keys onto c. Unknown keys and unparseable values throw ConfigError naming the key.
void apply_key_values(RunConfig& c, const KeyValues& kv);

/// "key = value" lines, '#' comments. Later duplicates win with a notice on stderr.
KeyValues parse_config_text(const std::string& text, const std::string& origin = "config");
KeyValues read_config_file(const std::filesystem::path& path);
/// Canonical text: one "key = value" per line in key order.
std::string serialize(const RunConfig& c);
/// FNV-1a of serialize(c), as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Throws ConfigError when a value is outside its domain.
void validate(const RunConfig& c);

const std::vector<std::string>& preset_names();
/// Sets the fields a preset controls and records its name. Unknown names throw ConfigError.
void apply_preset(RunConfig& c, const std::string& name);

/// Defaults, then the preset (explicit argument, else the "preset" key of the file), then the
/// file keys, then the overrides in order.
RunConfig resolve_config(const KeyValues& file, const std::string& preset,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

/// Parses "key=value".
std::pair<std::string, std::string> parse_override(const std::string& s);

}  // namespace vidmatch
