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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vidmatch {

/// One (preset, seed) cell of an ablation sweep.
struct AblationCell {
  std::string preset;
  std::uint64_t seed = 0;
  bool ok = false;
  double accuracy = 0;
  double mean_mask_rate = 0;
  std::string error;
};

struct AblationRow {
  std::string preset;
  std::size_t n_seeds = 0;  // successful runs
  double mean_acc = 0, std_acc = 0, mean_mask_rate = 0;
};

/// Drops repeated presets, keeping first occurrences, and reports each drop on stderr.
std::vector<std::string> dedupe_presets(const std::vector<std::string>& presets);

/// Aggregates cells per preset in first-seen order. std_acc is the sample deviation (0 for one seed).
std::vector<AblationRow> aggregate(const std::vector<AblationCell>& cells);
/// preset,n_seeds,mean_acc,std_acc,mean_mask_rate
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Parsed metrics.csv columns used by reports.
struct MetricsSeries {
  std::string name;
  std::vector<double> step, l_match, total, tau_global, mask_rate;
  std::vector<std::vector<double>> tau_class;
  std::vector<std::string> header;
};

/// Reads a metrics.csv. Returns nullopt and reports on stderr when malformed.
std::optional<MetricsSeries> read_metrics(const std::filesystem::path& csv, const std::string& name);

/// Writes report_<names>.svg (panels: L_match, total, tau_global, mask_rate) and
/// report_<names>.csv for the run directories that hold usable metrics. Returns the files written.
std::vector<std::filesystem::path> write_report(const std::vector<std::filesystem::path>& run_dirs,
                                                const std::filesystem::path& out_dir);

}  // namespace vidmatch
