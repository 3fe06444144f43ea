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
#include "vidmatch/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "vidmatch/kernels.hpp"

namespace vidmatch {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Tensor to_tensor(const ProbMatrix& m) {
  Tensor t({m.rows, m.cols});
  for (std::size_t i = 0; i < m.v.size(); ++i) t[i] = static_cast<Real>(m.v[i]);
  return t;
}

Tensor concat_rows(const std::vector<const Tensor*>& parts) {
  std::size_t rows = 0;
  const Tensor* first = nullptr;
  for (const Tensor* p : parts)
    if (p && !p->empty()) {
      if (!first) first = p;
      rows += p->dim(0);
    }
  if (!first) return Tensor();
  Tensor::Shape shape = first->shape();
  shape[0] = rows;
  Tensor out(shape);
  std::size_t off = 0;
  for (const Tensor* p : parts)
    if (p && !p->empty()) {
      std::copy(p->span().begin(), p->span().end(), out.data() + off);
      off += p->size();
    }
  return out;
}

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx) {
  Tensor::Shape shape = t.shape();
  shape[0] = idx.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(t.row(idx[i]).begin(), t.row(idx[i]).end(), out.row(i).begin());
  return out;
}

std::vector<std::uint64_t> draw_seeds(Rng& rng, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (auto& v : s) v = rng();
  return s;
}

std::string describe(const LossBundle& l) {
  return "L_cs=" + fmt(l.l_cs) + " L_ps=" + fmt(l.l_ps) + " L_match=" + fmt(l.l_match) + " L_fair=" + fmt(l.l_fair) +
         " L_align=" + fmt(l.l_align) + " total=" + fmt(l.total);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

// Keeps the header and the rows whose first column is <= step.
void truncate_csv(const fs::path& path, std::uint64_t step, const std::string& header) {
  std::vector<std::string> keep{header};
  if (std::ifstream in(path); in) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::uint64_t s = 0;
      const auto r = std::from_chars(line.data(), line.data() + line.size(), s);
      if (r.ec == std::errc() && s <= step) keep.push_back(line);
    }
  }
  std::string text;
  for (const auto& l : keep) text += l + "\n";
  write_text(path, text);
}

std::string evals_header(std::size_t n) {
  std::string h = "step,epoch,accuracy,head_accuracy";
  for (std::size_t i = 0; i < n; ++i) h += ",acc_class_" + std::to_string(i);
  return h;
}

}  // namespace

double cosine_lr(std::uint64_t k, std::uint64_t total, double eta) {
  if (total == 0) throw ConfigError("cosine_lr needs K >= 1");
  if (k > total) {
    std::cerr << "warning: cosine_lr step " << k << " exceeds K = " << total << ", clamped\n";
    k = total;
  }
  return eta * std::cos(7.0 * std::numbers::pi * static_cast<double>(k) / (16.0 * static_cast<double>(total)));
}

TrainState init_state(const RunConfig& config) {
  validate(config);
  TrainState s;
  ModelSpec spec = config.model;
  spec.init_seed = mix_seed(config.seed, spec.init_seed);
  s.model = build_backbone(spec);
  s.sat = sat_init(config.model.num_classes, config.lambda_de);
  return s;
}

std::size_t steps_per_epoch(const RunConfig& config, std::size_t labeled, std::size_t unlabeled) {
  const std::size_t group = config.batch * config.mu;
  return unlabeled >= group ? unlabeled / group : labeled / config.batch;
}

std::uint64_t total_steps(const RunConfig& config, std::size_t labeled, std::size_t unlabeled) {
  if (config.steps > 0) return config.steps;
  return config.epochs * steps_per_epoch(config, labeled, unlabeled);
}

std::uint64_t step_seed(const RunConfig& config, std::uint64_t step) {
  return mix_seed(mix_seed(config.seed, 0x73746570ULL), step);
}

StepResult compute_step(TrainState& state, const RunConfig& config, const BatchPair& batch, std::uint64_t total,
                        const std::vector<int>* unlabeled_truth, StepProbe* probe, const WeakPass* frozen) {
  const std::uint64_t k = state.step;
  const std::size_t n_cls = config.model.num_classes;
  const std::size_t b = batch.labels.size();
  if (b == 0 || batch.labeled_clips.empty()) throw ValidationError("train_step needs a labeled batch");
  ModelBundle& model = *state.model;
  Rng rng(step_seed(config, k));

  StepResult result;
  StepRecord& rec = result.record;
  rec.step = k + 1;
  rec.lr = cosine_lr(k, total, config.lr);

  // (1) views
  const Tensor labeled = weak_views(batch.labeled_clips, config.augment.weak_mode, draw_seeds(rng, b));
  const bool use_unlabeled = !config.ignore_unlabeled && !batch.unlabeled_clips.empty();
  Tensor weak, strong;
  ProbMatrix q, weak_cls;
  const std::size_t mub = use_unlabeled ? batch.unlabeled_clips.dim(0) : 0;
  if (use_unlabeled) {
    std::tie(weak, strong) = paired_views(batch.unlabeled_clips, config.augment, draw_seeds(rng, mub));
    // (2) weak forward; nothing is retained, so no gradient can reach the weak view
    if (frozen) {
      q = frozen->head;
      weak_cls = frozen->cls;
    } else {
      const ForwardOutput w = model.forward(weak, false);
      q = softmax(w.head_logits);
      weak_cls = softmax(w.cls_logits);
    }
  }
  result.weak = {q, weak_cls};

  // (3) statistics first, then thresholds and mask for this same batch
  result.sat = sat_update(state.sat, q);
  const SatState& sat = result.sat;
  const std::vector<double> thresholds = config.threshold_mode == ThresholdMode::sat
                                             ? class_thresholds(sat)
                                             : fixed_thresholds(config.tau_fixed, n_cls);
  rec.tau_global = sat.tau_global;
  rec.tau_class = thresholds;

  // (6, built early so one forward covers every gradient row) cross-set samples
  MixedBatch mixed;
  const bool use_mixing = use_unlabeled && config.mixing != MixingMode::off;
  if (use_mixing) {
    const auto subset = pairing_subset(mub, std::min(b, mub), rng);
    std::vector<std::size_t> lab_idx(subset.size());
    for (std::size_t i = 0; i < lab_idx.size(); ++i) lab_idx[i] = i;
    const Tensor u_sub = gather_rows(weak, subset);
    const Tensor x_sub = subset.size() == b ? labeled : gather_rows(labeled, lab_idx);
    std::vector<int> y(subset.size()), y_prime(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      y[i] = batch.labels[i];
      y_prime[i] = static_cast<int>(argmax(weak_cls.row(subset[i])));
    }
    if (config.mixing == MixingMode::vcsa)
      mixed = vcsa(x_sub, y, u_sub, y_prime, sample_lambda(config.alpha, rng), n_cls);
    else
      mixed = videomix_batch(x_sub, y, u_sub, y_prime, n_cls, rng);
    rec.lambda_m = mixed.lambda_m;
  }
  const std::size_t n_mixed = use_mixing ? mixed.clips.dim(0) : 0;

  // (4), (5), (6) one gradient forward: [labeled; strong; mixed]
  const Tensor rows = concat_rows({&labeled, &strong, &mixed.clips});
  ForwardOutput out;
  try {
    out = model.forward(rows, true);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at step " + std::to_string(rec.step));
  }
  const ProbMatrix cls = softmax(out.cls_logits);
  const ProbMatrix head = softmax(out.head_logits);
  std::vector<double> disc(rows.dim(0));
  for (std::size_t i = 0; i < disc.size(); ++i) disc[i] = sigmoid(out.disc_logits[i]);

  // (7) losses
  const std::size_t s0 = b, m0 = b + mub;
  const SupervisedResult sup = supervised_losses(slice_rows(cls, 0, b), slice_rows(head, 0, b), batch.labels);
  const ProbMatrix strong_head = slice_rows(head, s0, m0);
  ConsistencyResult cons;
  FairnessResult fair;
  if (use_unlabeled) {
    cons = consistency_loss(q, strong_head, thresholds);
    fair = fairness_loss(sat, strong_head, cons.mask);
  }
  AlignResult align;
  if (use_mixing) {
    const std::vector<double> disc_mixed(disc.begin() + static_cast<std::ptrdiff_t>(m0), disc.end());
    align = align_loss(slice_rows(cls, m0, m0 + n_mixed), mixed.soft_labels, disc_mixed, mixed.disc_targets,
                       config.weights.resolved_rho(mixed.lambda_m), mixed.lambda_m);
  }
  LossBundle& L = rec.losses;
  L.l_cs = sup.l_cs;
  L.l_ps = sup.l_ps;
  L.l_match = cons.l_match;
  L.l_fair = fair.l_fair;
  L.l_align = align.l_align;
  L.mask_rate = cons.mask_rate;
  rec.mask_rate = cons.mask_rate;
  try {
    total_loss(L, config.weights);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at step " + std::to_string(rec.step) + " (" + describe(L) + ")");
  }

  if (use_unlabeled && unlabeled_truth && unlabeled_truth->size() == mub) {
    std::size_t known = 0, right = 0;
    for (std::size_t i = 0; i < mub; ++i) {
      if (!cons.mask.mask[i] || (*unlabeled_truth)[i] < 0) continue;
      ++known;
      right += cons.mask.pseudo_classes[i] == (*unlabeled_truth)[i];
    }
    if (known) rec.pl_precision = static_cast<double>(right) / static_cast<double>(known);
  }

  // Probability-space gradients of the weighted total, per output row.
  const auto& w = config.weights;
  ProbMatrix d_cls(rows.dim(0), n_cls), d_head(rows.dim(0), n_cls);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n_cls; ++j) {
      d_cls(i, j) = sup.d_cls(i, j);
      d_head(i, j) = w.omega_m * sup.d_head(i, j);
    }
  for (std::size_t i = 0; i < mub; ++i)
    for (std::size_t j = 0; j < n_cls; ++j)
      d_head(s0 + i, j) = w.omega_m * cons.d_strong(i, j) + w.omega_f * fair.d_strong(i, j);
  Tensor d_disc({rows.dim(0)});
  for (std::size_t i = 0; i < n_mixed; ++i) {
    for (std::size_t j = 0; j < n_cls; ++j) d_cls(m0 + i, j) = w.omega_a * align.d_cls(i, j);
    const double p = disc[m0 + i];
    d_disc[m0 + i] = static_cast<Real>(w.omega_a * align.d_disc[i] * p * (1 - p));
  }
  OutputGradients grads;
  grads.cls_logits = to_tensor(softmax_backward(cls, d_cls));
  grads.head_logits = to_tensor(softmax_backward(head, d_head));
  grads.disc_logits = std::move(d_disc);

  model.params().zero_grad();
  model.backward(grads);
  if (probe) {
    probe->output_grads = grads;
    probe->labeled_rows = b;
    probe->strong_rows = mub;
    probe->mixed_rows = n_mixed;
    probe->weak_probs = q;
  }

  return result;
}

StepRecord train_step(TrainState& state, const RunConfig& config, const BatchPair& batch, std::uint64_t total,
                      const std::vector<int>* unlabeled_truth, StepProbe* probe) {
  StepResult r = compute_step(state, config, batch, total, unlabeled_truth, probe);
  state.sat = std::move(r.sat);
  // (8) SGD with momentum and weight decay on every parameter
  const auto& kt = kernels::active();
  for (auto& p : state.model->params().all())
    kt.sgd_momentum(p->value.size(), static_cast<Real>(r.record.lr), static_cast<Real>(config.momentum),
                    static_cast<Real>(config.weight_decay), p->value.data(), p->grad.data(), p->momentum.data());
  // (9) the next step reads cosine_lr(k + 1)
  state.step += 1;
  return r.record;
}

EvalResult score_predictions(const std::vector<int>& predictions, const std::vector<int>& labels,
                             std::size_t n_cls) {
  if (labels.empty()) throw ValidationError("empty test set");
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in count");
  EvalResult r;
  r.predictions = predictions;
  r.per_class_accuracy.assign(n_cls, 0.0);
  r.per_class_count.assign(n_cls, 0);
  r.confusion.assign(n_cls, std::vector<std::size_t>(n_cls, 0));
  std::size_t right = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || static_cast<std::size_t>(y) >= n_cls || p < 0 || static_cast<std::size_t>(p) >= n_cls)
      throw ValidationError("class id out of range at test row " + std::to_string(i));
    right += p == y;
    r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)]++;
  }
  r.accuracy = static_cast<double>(right) / static_cast<double>(labels.size());
  for (std::size_t c = 0; c < n_cls; ++c) {
    for (auto v : r.confusion[c]) r.per_class_count[c] += v;
    r.per_class_accuracy[c] =
        r.per_class_count[c] ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.per_class_count[c]) : 0.0;
  }
  return r;
}

EvalResult evaluate(ModelBundle& model, const TestSet& test, std::size_t batch) {
  if (test.clips.empty()) throw ValidationError("empty test set");
  if (test.labels.size() != test.clips.size()) throw ShapeError("test labels and clips differ in count");
  const std::size_t n_cls = model.spec().num_classes;
  Tensor embeddings({test.clips.size(), model.spec().embed_dim});
  std::vector<int> pred, head_pred;
  for (std::size_t start = 0; start < test.clips.size(); start += batch) {
    const std::size_t end = std::min(test.clips.size(), start + batch);
    std::vector<const VideoClip*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&test.clips[i]);
    const ForwardOutput out = model.forward(stack_clips(ptrs), false);
    const ProbMatrix cls = softmax(out.cls_logits), head = softmax(out.head_logits);
    for (std::size_t i = start; i < end; ++i) {
      pred.push_back(static_cast<int>(argmax(cls.row(i - start))));
      head_pred.push_back(static_cast<int>(argmax(head.row(i - start))));
      const auto e = out.embedding.row(i - start);
      std::copy(e.begin(), e.end(), embeddings.row(i).begin());
    }
  }
  EvalResult r = score_predictions(pred, test.labels, n_cls);
  r.head_accuracy = score_predictions(head_pred, test.labels, n_cls).accuracy;
  r.embeddings = std::move(embeddings);
  return r;
}

void write_embeddings(const fs::path& path, const EvalResult& result, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint64_t rows = result.embeddings.empty() ? 0 : result.embeddings.dim(0);
  const std::uint64_t dim = result.embeddings.empty() ? 0 : result.embeddings.dim(1);
  const std::uint32_t version = 1;
  out.write("VMEB", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&dim), 8);
  for (Real v : result.embeddings.span()) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const std::int32_t y = labels.at(i);
    out.write(reinterpret_cast<const char*>(&y), 4);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const std::int32_t p = result.predictions.at(i);
    out.write(reinterpret_cast<const char*>(&p), 4);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ArchiveFile to_checkpoint(const TrainState& state, const RunConfig& config) {
  ArchiveFile a;
  for (const auto& p : state.model->params().all()) {
    a.put("param/" + p->name, p->value);
    a.put("momentum/" + p->name, p->momentum);
  }
  a.put("sat/step", static_cast<std::int64_t>(state.sat.step));
  a.put("sat/tau_global", std::vector<double>{state.sat.tau_global});
  a.put("sat/p_local", state.sat.p_local);
  a.put("sat/h_tilde", state.sat.h_tilde);
  a.put("sat/lambda_de", std::vector<double>{state.sat.lambda_de});
  a.put("train/step", static_cast<std::int64_t>(state.step));
  a.put("config/hash", config_hash(config));
  a.put("config/text", serialize(config));
  return a;
}

RunConfig checkpoint_config(const ArchiveFile& ckpt) {
  RunConfig c;
  const KeyValues kv = parse_config_text(ckpt.text("config/text"), "checkpoint");
  const auto it = kv.find("preset");
  if (it != kv.end()) apply_preset(c, it->second);
  apply_key_values(c, kv);
  return c;
}

void restore_checkpoint(TrainState& state, const ArchiveFile& ckpt, const RunConfig& config) {
  const std::string stored = ckpt.text("config/hash");
  if (stored != config_hash(config))
    std::cerr << "warning: checkpoint config hash " << stored << " differs from the current config "
              << config_hash(config) << "\n";
  for (auto& p : state.model->params().all()) {
    Tensor v = ckpt.tensor("param/" + p->name);
    Tensor m = ckpt.tensor("momentum/" + p->name);
    if (v.shape() != p->value.shape() || m.shape() != p->value.shape())
      throw ShapeError("checkpoint parameter " + p->name + " has shape " + shape_string(v.shape()) + ", model expects " +
                       shape_string(p->value.shape()));
    p->value = std::move(v);
    p->momentum = std::move(m);
  }
  SatState sat;
  sat.step = static_cast<std::uint64_t>(ckpt.integer("sat/step"));
  sat.tau_global = ckpt.reals("sat/tau_global").at(0);
  sat.p_local = ckpt.reals("sat/p_local");
  sat.h_tilde = ckpt.reals("sat/h_tilde");
  sat.lambda_de = ckpt.reals("sat/lambda_de").at(0);
  if (sat.num_classes() != config.model.num_classes) throw ShapeError("checkpoint threshold state has a different class count");
  state.sat = std::move(sat);
  state.step = static_cast<std::uint64_t>(ckpt.integer("train/step"));
}

std::string metrics_header(std::size_t n) {
  std::string h = "step,lr,L_cs,L_ps,L_match,L_fair,L_align,total,tau_global";
  for (std::size_t i = 0; i < n; ++i) h += ",tau_class_" + std::to_string(i);
  return h + ",lambda_m,mask_rate,pl_precision";
}

std::string metrics_row(const StepRecord& r) {
  const LossBundle& l = r.losses;
  std::string s = std::to_string(r.step) + "," + fmt(r.lr) + "," + fmt(l.l_cs) + "," + fmt(l.l_ps) + "," +
                  fmt(l.l_match) + "," + fmt(l.l_fair) + "," + fmt(l.l_align) + "," + fmt(l.total) + "," +
                  fmt(r.tau_global);
  for (double t : r.tau_class) s += "," + fmt(t);
  s += "," + fmt(r.lambda_m) + "," + fmt(r.mask_rate) + ",";
  if (r.pl_precision) s += fmt(*r.pl_precision);
  return s;
}

FitResult fit(const RunConfig& config, const ClipSet& data, const FitOptions& opt) {
  validate(config);
  if (!(data.geometry == config.model.geometry))
    throw ConfigError("dataset geometry " + to_string(data.geometry) + " differs from the configured " +
                      to_string(config.model.geometry));
  if (data.labeled.empty()) throw ConfigError("no labeled clips");
  fs::create_directories(opt.run_dir);
  const std::size_t n_cls = config.model.num_classes;
  const std::size_t n_lab = data.labeled.size(), n_unl = data.unlabeled.size();
  const std::size_t spe = steps_per_epoch(config, n_lab, n_unl);
  const std::uint64_t total = total_steps(config, n_lab, n_unl);
  if (spe == 0 && total > 0)
    throw ConfigError("dataset yields no steps: " + std::to_string(n_lab) + " labeled clips for batch " +
                      std::to_string(config.batch));

  const fs::path metrics = opt.run_dir / "metrics.csv", evals = opt.run_dir / "evals.csv";
  write_text(opt.run_dir / "config.resolved", serialize(config));

  TrainState state = init_state(config);
  if (opt.resume_from) {
    restore_checkpoint(state, ArchiveFile::load(*opt.resume_from), config);
    truncate_csv(metrics, state.step, metrics_header(n_cls));
    truncate_csv(evals, state.step, evals_header(n_cls));
  } else {
    write_text(metrics, metrics_header(n_cls) + "\n");
    write_text(evals, evals_header(n_cls) + "\n");
  }
  std::ofstream metrics_out(metrics, std::ios::app), evals_out(evals, std::ios::app);

  FitResult result;
  auto save = [&](const fs::path& path) {
    to_checkpoint(state, config).save(path);
    return path;
  };
  auto run_eval = [&](std::size_t epoch) {
    if (!opt.eval_set) return;
    EvalResult e = evaluate(*state.model, *opt.eval_set, config.eval_batch);
    std::string row = std::to_string(state.step) + "," + std::to_string(epoch) + "," + fmt(e.accuracy) + "," +
                      fmt(e.head_accuracy);
    for (double a : e.per_class_accuracy) row += "," + fmt(a);
    evals_out << row << "\n" << std::flush;
    result.final_accuracy = e.accuracy;
    result.evals.push_back(std::move(e));
  };

  double mask_sum = 0;
  for (std::uint64_t epoch = spe ? state.step / spe : 0; state.step < total; ++epoch) {
    const auto plans = make_batches(n_lab, n_unl, config.batch, config.mu, mix_seed(mix_seed(config.seed, 0x65706f6368ULL), epoch), true);
    for (std::size_t j = static_cast<std::size_t>(state.step - epoch * spe); j < plans.size() && state.step < total; ++j) {
      if (opt.stop_after && state.step >= *opt.stop_after) {
        result.final_step = state.step;
        result.final_checkpoint = save(opt.run_dir / "last.ckpt");
        result.mean_mask_rate = result.records.empty() ? 0 : mask_sum / static_cast<double>(result.records.size());
        return result;
      }
      const BatchPair pair = assemble_batch(data, plans[j]);
      std::vector<int> truth;
      for (auto id : plans[j].unlabeled) truth.push_back(id < data.unlabeled_truth.size() ? data.unlabeled_truth[id] : -1);
      StepRecord rec = train_step(state, config, pair, total, &truth);
      metrics_out << metrics_row(rec) << "\n" << std::flush;
      if (!metrics_out) throw IoError("cannot append to " + metrics.string());
      mask_sum += rec.mask_rate;
      result.records.push_back(std::move(rec));
    }
    const bool last = state.step >= total;
    if ((epoch + 1) % config.eval_interval == 0 || last) {
      run_eval(epoch + 1);
      save(opt.run_dir / "last.ckpt");
      if (opt.verbose) {
        std::cerr << "epoch " << epoch + 1 << " step " << state.step << "/" << total;
        if (!result.records.empty()) std::cerr << " total_loss " << fmt(result.records.back().losses.total);
        if (!result.evals.empty()) std::cerr << " acc " << fmt(result.evals.back().accuracy);
        std::cerr << "\n";
      }
    }
  }
  if (total == 0) run_eval(0);
  result.final_step = state.step;
  result.final_checkpoint = save(opt.run_dir / "final.ckpt");
  result.mean_mask_rate = result.records.empty() ? 0 : mask_sum / static_cast<double>(result.records.size());
  return result;
}

}  // namespace vidmatch
