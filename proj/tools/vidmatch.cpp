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
// vidmatch command-line tool: train, eval, synth-data, ablate, report.
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidmatch/report.hpp"
#include "vidmatch/trainer.hpp"

namespace fs = std::filesystem;
using namespace vidmatch;

namespace {

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

fs::path output_root() {
  const char* env = std::getenv("VIDMATCH_OUT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

struct ConfigArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key = value config file");
    app->add_option("--preset", preset, "ablation preset (default firematch_full)");
    app->add_option("--set", sets, "override key=value; repeatable, last wins")->take_all();
    app->add_option("--seed", seed, "training seed (train.seed)");
  }

  RunConfig resolve(const std::string& preset_override = {}, std::optional<std::uint64_t> seed_override = {}) const {
    KeyValues file;
    if (!config_path.empty()) file = read_config_file(config_path);
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) overrides.push_back(parse_override(s));
    const auto s = seed_override ? seed_override : seed;
    if (s) overrides.emplace_back("train.seed", std::to_string(*s));
    RunConfig c = resolve_config(file, preset_override.empty() ? preset : preset_override, overrides);
    validate(c);
    return c;
  }
};

struct DataArgs {
  bool synthetic = false;
  std::string data_dir;
  std::string test_dir;

  void attach(CLI::App* app) {
    app->add_flag("--synthetic", synthetic, "generate the synthetic benchmark from synth.* keys");
    app->add_option("--data", data_dir, "dataset root with labeled/ and unlabeled/");
    app->add_option("--test", test_dir, "test directory <dir>/<class>/*; default <data>/test when present");
  }

  std::pair<ClipSet, std::optional<TestSet>> load(const RunConfig& c) const {
    if (synthetic == !data_dir.empty()) throw ConfigError("give exactly one of --synthetic or --data");
    if (synthetic) {
      SynthSpec s = c.synth;
      s.frames = c.model.geometry.frames;
      s.height = c.model.geometry.height;
      s.width = c.model.geometry.width;
      if (c.model.geometry.channels != 3 || c.model.num_classes != 2)
        throw ConfigError("the synthetic benchmark has 3 channels and 2 classes");
      SynthDataset d = synth_generate(s);
      return {std::move(d.train), std::move(d.test)};
    }
    ClipSet set = load_clip_set(scan_dataset(data_dir, c.model.num_classes), c.model.geometry);
    std::optional<TestSet> test;
    fs::path t = test_dir.empty() ? fs::path(data_dir) / "test" : fs::path(test_dir);
    if (fs::is_directory(t)) test = load_test_set(t, c.model.geometry);
    else if (!test_dir.empty()) throw StructuralError("test directory " + t.string() + " not found");
    return {std::move(set), std::move(test)};
  }
};

std::string last_logged_step(const fs::path& run_dir) {
  std::ifstream in(run_dir / "metrics.csv");
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  const auto comma = last.find(',');
  return last.empty() || last.rfind("step", 0) == 0 ? "0" : last.substr(0, comma);
}

nlohmann::json eval_json(const EvalResult& e, const std::string& hash, std::size_t n) {
  nlohmann::json j;
  j["accuracy"] = e.accuracy;
  j["head_accuracy"] = e.head_accuracy;
  j["per_class_accuracy"] = e.per_class_accuracy;
  j["per_class_count"] = e.per_class_count;
  j["confusion"] = e.confusion;
  j["n_test"] = n;
  j["config_hash"] = hash;
  return j;
}

void print_eval(const EvalResult& e, const std::vector<std::string>& names) {
  std::cout << "top1 " << std::fixed << std::setprecision(4) << e.accuracy << "\n";
  for (std::size_t c = 0; c < e.per_class_accuracy.size(); ++c)
    std::cout << "class " << c << (c < names.size() ? " (" + names[c] + ")" : std::string()) << " "
              << e.per_class_accuracy[c] << " of " << e.per_class_count[c] << "\n";
  std::cout.unsetf(std::ios::fixed);
}

int cmd_train(const ConfigArgs& ca, const DataArgs& da, const std::string& run_dir_arg, const std::string& resume,
              std::optional<std::uint64_t> stop_after, bool quiet) {
  const RunConfig c = ca.resolve();
  auto [data, test] = da.load(c);
  const fs::path run_dir =
      run_dir_arg.empty() ? output_root() / (c.preset + "_seed" + std::to_string(c.seed)) : fs::path(run_dir_arg);
  FitOptions opt;
  opt.run_dir = run_dir;
  if (!resume.empty()) opt.resume_from = resume;
  opt.stop_after = stop_after;
  opt.eval_set = test ? &*test : nullptr;
  opt.verbose = !quiet;
  try {
    const FitResult r = fit(c, data, opt);
    nlohmann::json j;
    j["preset"] = c.preset;
    j["seed"] = c.seed;
    j["steps"] = r.final_step;
    j["config_hash"] = config_hash(c);
    j["mean_mask_rate"] = r.mean_mask_rate;
    if (!r.evals.empty()) j["final"] = eval_json(r.evals.back(), config_hash(c), test->clips.size());
    std::ofstream(run_dir / "summary.json") << j.dump(2) << "\n";
    std::cout << "run " << run_dir.string() << " steps " << r.final_step;
    if (r.final_accuracy >= 0) std::cout << " top1 " << r.final_accuracy;
    std::cout << "\n";
  } catch (const ConfigError&) {
    throw;
  } catch (const ShapeError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "error: training aborted after step " << last_logged_step(run_dir) << ": " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

int cmd_eval(const std::string& ckpt_path, const DataArgs& da, bool synthetic_test, const std::string& embeddings,
             const std::string& summary_arg) {
  const ArchiveFile ckpt = ArchiveFile::load(ckpt_path);
  const RunConfig c = checkpoint_config(ckpt);
  TestSet test;
  if (synthetic_test) {
    DataArgs synth;
    synth.synthetic = true;
    test = std::move(*synth.load(c).second);
  } else {
    const fs::path dir = da.test_dir.empty() ? (da.data_dir.empty() ? fs::path() : fs::path(da.data_dir) / "test")
                                             : fs::path(da.test_dir);
    if (dir.empty()) throw ConfigError("give --synthetic-test, --test or --data");
    test = load_test_set(dir, c.model.geometry);
  }
  if (!test.clips.empty() && !(test.clips.front().geometry() == c.model.geometry))
    throw ShapeError("test clips " + to_string(test.clips.front().geometry()) + " differ from checkpoint geometry " +
                     to_string(c.model.geometry));
  TrainState state = init_state(c);
  restore_checkpoint(state, ckpt, c);
  const EvalResult e = evaluate(*state.model, test, c.eval_batch);
  print_eval(e, test.class_names);
  const fs::path summary =
      summary_arg.empty() ? fs::path(ckpt_path).parent_path() / (fs::path(ckpt_path).stem().string() + "_eval.json")
                          : fs::path(summary_arg);
  std::ofstream(summary) << eval_json(e, ckpt.text("config/hash"), test.clips.size()).dump(2) << "\n";
  std::cout << "summary " << summary.string() << "\n";
  if (!embeddings.empty()) {
    write_embeddings(embeddings, e, test.labels);
    std::cout << "embeddings " << embeddings << " rows " << test.clips.size() << "\n";
  }
  return kOk;
}

int cmd_synth(const ConfigArgs& ca, const std::string& out) {
  const RunConfig c = ca.resolve();
  DataArgs synth;
  synth.synthetic = true;
  auto [train, test] = synth.load(c);
  const fs::path root = out.empty() ? output_root() / "synthetic" : fs::path(out);
  export_synth({std::move(train), std::move(*test)}, root);
  std::cout << "wrote synthetic dataset to " << root.string() << "\n";
  return kOk;
}

int cmd_ablate(const ConfigArgs& ca, const DataArgs& da, std::vector<std::string> presets,
               const std::vector<std::uint64_t>& seeds, const std::string& out, bool quiet) {
  if (presets.empty() || seeds.empty()) throw ConfigError("ablate needs at least one preset and one seed");
  presets = dedupe_presets(presets);
  for (const auto& p : presets) {
    RunConfig probe;
    apply_preset(probe, p);
  }
  const fs::path root = out.empty() ? output_root() / "ablation" : fs::path(out);
  fs::create_directories(root);
  // Data depends only on data and synth keys, which presets never touch.
  const RunConfig base = ca.resolve(presets.front(), seeds.front());
  auto [data, test] = da.load(base);
  std::vector<AblationCell> cells;
  for (const auto& p : presets)
    for (auto s : seeds) {
      AblationCell cell;
      cell.preset = p;
      cell.seed = s;
      try {
        const RunConfig c = ca.resolve(p, s);
        FitOptions opt;
        opt.run_dir = root / (p + "_seed" + std::to_string(s));
        opt.eval_set = test ? &*test : nullptr;
        opt.verbose = !quiet;
        const FitResult r = fit(c, data, opt);
        if (r.final_accuracy < 0) throw ConfigError("no test set to score the run");
        cell.ok = true;
        cell.accuracy = r.final_accuracy;
        cell.mean_mask_rate = r.mean_mask_rate;
        std::cout << p << " seed " << s << " top1 " << r.final_accuracy << "\n";
      } catch (const std::exception& e) {
        cell.error = e.what();
        std::cerr << "run " << p << " seed " << s << " failed: " << e.what() << "\n";
      }
      cells.push_back(std::move(cell));
    }
  const std::string csv = ablation_csv(aggregate(cells));
  std::ofstream(root / "ablation.csv") << csv;
  std::cout << csv;
  const bool any_failed = std::any_of(cells.begin(), cells.end(), [](const AblationCell& c) { return !c.ok; });
  return any_failed ? kRuntime : kOk;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const auto files = write_report(paths, out.empty() ? output_root() / "reports" : fs::path(out));
  if (files.empty()) {
    std::cerr << "no usable metrics in the given run directories\n";
    return kRuntime;
  }
  for (const auto& f : files) std::cout << f.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidmatch: semi-supervised video classification"};
  app.require_subcommand(1);

  ConfigArgs train_cfg, synth_cfg, ablate_cfg;
  DataArgs train_data, eval_data, ablate_data;
  std::string run_dir, resume, ckpt, embeddings, summary, synth_out, ablate_out, report_out;
  std::optional<std::uint64_t> stop_after;
  bool quiet = false, synthetic_test = false;
  std::vector<std::string> presets, report_dirs;
  std::vector<std::uint64_t> seeds;

  auto* train = app.add_subcommand("train", "train one run");
  train_cfg.attach(train);
  train_data.attach(train);
  train->add_option("--run-dir", run_dir, "output directory (default $VIDMATCH_OUT/<preset>_seed<seed>)");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--stop-after", stop_after, "stop after this many total steps");
  train->add_flag("--quiet", quiet);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt)->required();
  eval_data.attach(eval);
  eval->add_flag("--synthetic-test", synthetic_test, "score on the synthetic test split of the checkpoint config");
  eval->add_option("--export-embeddings", embeddings, "write test embeddings to this file");
  eval->add_option("--summary", summary, "summary JSON path (default next to the checkpoint)");

  auto* synth = app.add_subcommand("synth-data", "export the synthetic benchmark as video files");
  synth_cfg.attach(synth);
  synth->add_option("--out", synth_out, "dataset root (default $VIDMATCH_OUT/synthetic)");

  auto* ablate = app.add_subcommand("ablate", "run presets x seeds and tabulate accuracy");
  ablate_cfg.attach(ablate);
  ablate_data.attach(ablate);
  ablate->add_option("--presets", presets, "comma-separated presets")->delimiter(',')->required();
  ablate->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',')->required();
  ablate->add_option("--out", ablate_out, "sweep directory (default $VIDMATCH_OUT/ablation)");
  ablate->add_flag("--quiet", quiet);

  auto* report = app.add_subcommand("report", "plot metrics of run directories");
  report->add_option("runs", report_dirs, "run directories")->required();
  report->add_option("--out", report_out, "output directory (default $VIDMATCH_OUT/reports)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_cfg, train_data, run_dir, resume, stop_after, quiet);
    if (*eval) return cmd_eval(ckpt, eval_data, synthetic_test, embeddings, summary);
    if (*synth) return cmd_synth(synth_cfg, synth_out);
    if (*ablate) return cmd_ablate(ablate_cfg, ablate_data, presets, seeds, ablate_out, quiet);
    if (*report) return cmd_report(report_dirs, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
