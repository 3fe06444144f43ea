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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vidmatch/checkpoint.hpp"
#include "vidmatch/config.hpp"
#include "vidmatch/threshold_state.hpp"

namespace vidmatch {

/// lr = eta * cos(7 pi k / (16 K)). k > K is clamped to K with a warning.
double cosine_lr(std::uint64_t k, std::uint64_t total, double eta);

struct StepRecord {
  std::uint64_t step = 0;  // 1-based count of completed optimizer steps
  double lr = 0;
  LossBundle losses;
  double tau_global = 0;
  std::vector<double> tau_class;
  double lambda_m = 0;
  double mask_rate = 0;
  std::optional<double> pl_precision;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Everything that changes during training.
struct TrainState {
  std::unique_ptr<ModelBundle> model;
  SatState sat;
  std::uint64_t step = 0;
};

TrainState init_state(const RunConfig& config);

/// Steps per epoch for a dataset of the given size.
std::size_t steps_per_epoch(const RunConfig& config, std::size_t labeled, std::size_t unlabeled);
/// K for the run: config.steps, or epochs * steps per epoch.
std::uint64_t total_steps(const RunConfig& config, std::size_t labeled, std::size_t unlabeled);

/// Seed of the per-step random stream; depends only on (run seed, step).
std::uint64_t step_seed(const RunConfig& config, std::uint64_t step);

/// Optional per-step hooks used by tests to observe gradient routing.
struct StepProbe {
  /// Gradient of the total loss reaching each output of the gradient forward pass.
  OutputGradients output_grads;
  /// Rows [0,B) labeled, [B, B+muB) strong unlabeled, then the mixed rows.
  std::size_t labeled_rows = 0, strong_rows = 0, mixed_rows = 0;
  ProbMatrix weak_probs;
};

/// Weak-view outputs of a step. They are targets, so they carry no gradient.
struct WeakPass {
  ProbMatrix head;  // q_b
  ProbMatrix cls;   // source of the cross-set pseudo-labels
};

struct StepResult {
  StepRecord record;
  SatState sat;  // state after this step's update
  WeakPass weak;
};

/// Everything of a step except the parameter update: views, weak forward, SAT update and
/// mask, one gradient forward over [labeled; strong; mixed] rows, losses, and backward into
/// the parameter gradients. `frozen` replaces the weak forward. state is not modified apart
/// from the parameter gradients.
StepResult compute_step(TrainState& state, const RunConfig& config, const BatchPair& batch, std::uint64_t total,
                        const std::vector<int>* unlabeled_truth = nullptr, StepProbe* probe = nullptr,
                        const WeakPass* frozen = nullptr);

/// compute_step, then SGD with momentum and weight decay on every parameter, then the
/// step counter. unlabeled_truth, when given, holds the true classes of the unlabeled rows.
StepRecord train_step(TrainState& state, const RunConfig& config, const BatchPair& batch, std::uint64_t total,
                      const std::vector<int>* unlabeled_truth = nullptr, StepProbe* probe = nullptr);

struct EvalResult {
  double accuracy = 0;
  double head_accuracy = 0;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_count;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  Tensor embeddings;  // [n, d]
  std::vector<int> predictions;
};

/// Accuracy, per-class accuracy and confusion counts of predictions against labels.
EvalResult score_predictions(const std::vector<int>& predictions, const std::vector<int>& labels,
                             std::size_t num_classes);

/// Top-1 accuracy of the classifier head; no augmentation.
EvalResult evaluate(ModelBundle& model, const TestSet& test, std::size_t batch = 20);

/// Embedding file: "VMEB", u32 version 1, u64 rows, u64 dim, rows*dim f32 row-major,
/// rows i32 labels, rows i32 predictions.
void write_embeddings(const std::filesystem::path& path, const EvalResult& result, const std::vector<int>& labels);

ArchiveFile to_checkpoint(const TrainState& state, const RunConfig& config);
/// Restores parameters, momentum, SatState and step. A config hash mismatch is reported
/// as a warning on stderr.
void restore_checkpoint(TrainState& state, const ArchiveFile& ckpt, const RunConfig& config);
/// The resolved config stored in a checkpoint.
RunConfig checkpoint_config(const ArchiveFile& ckpt);

struct FitOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> resume_from;
  /// Stop after this many total steps (an interrupted run); K is unchanged.
  std::optional<std::uint64_t> stop_after;
  const TestSet* eval_set = nullptr;
  bool verbose = true;
};

struct FitResult {
  std::vector<StepRecord> records;  // steps run by this call
  std::vector<EvalResult> evals;
  std::uint64_t final_step = 0;
  std::filesystem::path final_checkpoint;
  double final_accuracy = -1;
  double mean_mask_rate = 0;
};

/// Runs epochs x steps, writing metrics.csv, evals.csv, config.resolved, last.ckpt at each
/// evaluation and final.ckpt at the end into run_dir.
FitResult fit(const RunConfig& config, const ClipSet& data, const FitOptions& options);

/// Column header of metrics.csv for N classes.
std::string metrics_header(std::size_t num_classes);
std::string metrics_row(const StepRecord& r);

}  // namespace vidmatch
