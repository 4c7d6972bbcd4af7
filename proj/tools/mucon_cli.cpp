// Copyright 2026 The MuCon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mucon: synth | train | infer | eval | bench.
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mucon/bench.hpp"
#include "mucon/config.hpp"
#include "mucon/io.hpp"
#include "mucon/metrics.hpp"
#include "mucon/model.hpp"
#include "mucon/pipeline.hpp"
#include "mucon/synth.hpp"

namespace fs = std::filesystem;
using namespace mucon;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

const std::set<std::string> kBoolKeys = {"allow_repeats", "dump_masks", "parallel"};

struct Command {
  CLI::App* app = nullptr;
  std::string section;
  std::optional<std::string> config;
  std::string out;
  std::map<std::string, std::optional<std::string>> overrides;
  std::map<std::string, bool> flags;
  std::map<std::string, std::string> paths;
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return "--" + s;
}

void add_command(CLI::App& root, Command& cmd, const std::string& name, const std::string& help) {
  cmd.section = name;
  cmd.app = root.add_subcommand(name, help);
  cmd.app->add_option("--config", cmd.config, "INI config file");
  cmd.app->add_option("--out", cmd.out, "output directory")->required();
  for (const auto& [key, value] : default_settings().at(name)) {
    if (kBoolKeys.contains(key)) {
      cmd.flags[key] = false;
      cmd.app->add_flag(flag_name(key), cmd.flags[key], "default " + value);
    } else {
      cmd.overrides[key];
      cmd.app->add_option(flag_name(key), cmd.overrides[key], "default " + (value.empty() ? "''" : value));
    }
  }
}

void add_path(Command& cmd, const std::string& name, const std::string& help, bool required) {
  cmd.paths[name];
  auto* opt = cmd.app->add_option("--" + name, cmd.paths[name], help);
  if (required) opt->required();
}

RunConfig resolve(const Command& cmd) {
  RunConfig rc(cmd.section);
  if (cmd.config) rc.merge_file(*cmd.config);
  for (const auto& [key, value] : cmd.overrides) {
    if (value) rc.set(key, *value);
  }
  for (const auto& [key, on] : cmd.flags) {
    if (on) rc.set(key, "true");
  }
  return rc;
}

Dataset without_labels(Dataset ds) {
  for (auto& v : ds.videos) v.labels.reset();
  return ds;
}

Dataset load_checked(const std::string& path) {
  Dataset ds = load_dataset(path);
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    throw DataError(path + ": video " + std::to_string(violations.front().item) + ": " + violations.front().message);
  }
  return ds;
}

int cmd_synth(const Command& cmd) {
  const RunConfig rc = resolve(cmd);
  const SynthConfig sc = synth_config_from(rc);
  const double holdout = rc.get_double("holdout_fraction");
  const Dataset ds = generate(sc);
  const fs::path out = cmd.out;
  if (holdout > 0.0) {
    const Split split = holdout_transcripts(ds, holdout, sc.seed);
    save_dataset(split.train, out / "train");
    save_dataset(split.test, out / "test");
    std::printf("wrote %zu train and %zu test videos to %s\n", split.train.videos.size(), split.test.videos.size(),
                out.c_str());
  } else {
    save_dataset(ds, out);
    std::printf("wrote %zu videos to %s\n", ds.videos.size(), out.c_str());
  }
  rc.write_snapshot(out);
  return kOk;
}

int cmd_train(const Command& cmd) {
  const RunConfig rc = resolve(cmd);
  const TrainConfig tc = train_config_from(rc);
  tc.validate();
  const Dataset ds = without_labels(load_checked(cmd.paths.at("data")));
  const ModelConfig mc = model_config_from(rc, ds);
  const TrainResult result = train(ds, tc, mc);
  const fs::path out = cmd.out;
  save_checkpoint(result.params, out / "checkpoint.bin");
  std::string csv = "epoch,total,mucon,transcript,length\n";
  char buf[160];
  for (const auto& e : result.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.total, e.mucon, e.transcript, e.length);
    csv += buf;
  }
  atomic_write(out / "loss_trace.csv", csv);
  rc.write_snapshot(out);
  if (!result.trace.empty()) {
    const auto& last = result.trace.back();
    std::printf("trained %d epochs, final loss %.4f (transcript %.4f)\n", tc.epochs, last.total, last.transcript);
  } else {
    std::printf("0 epochs, wrote initial parameters\n");
  }
  return kOk;
}

int cmd_infer(const Command& cmd) {
  const RunConfig rc = resolve(cmd);
  const InferMode mode = parse_infer_mode(rc.get_string("mode"));
  const ModelParams params = load_checkpoint(cmd.paths.at("checkpoint"));
  const Dataset ds = load_checked(cmd.paths.at("data"));
  std::vector<Transcript> pool;
  if (mode == InferMode::AlignAll) {
    if (cmd.paths.at("candidates").empty()) throw ContractError("align-all needs --candidates <dataset>");
    pool = distinct_transcripts(load_checked(cmd.paths.at("candidates")));
  }
  const std::vector<Prediction> preds = predict_all(params, ds, mode, pool, rc.get_int("threads"));
  const fs::path out = cmd.out;
  atomic_write(out / "predictions.jsonl", encode_predictions(preds));
  if (rc.get_bool("dump_masks")) {
    std::vector<std::pair<std::string, MaskSet>> masks;
    for (const auto& v : ds.videos) {
      masks.emplace_back(v.id, inference_masks(forward_infer(params, v.features), v.features.frame_count()));
    }
    atomic_write(out / "masks.csv", masks_csv(masks));
  }
  rc.write_snapshot(out);
  std::printf("wrote %zu %s predictions\n", preds.size(), std::string(to_string(mode)).c_str());
  return kOk;
}

int cmd_eval(const Command& cmd) {
  const RunConfig rc = resolve(cmd);
  std::set<ActionId> excluded;
  for (int a : rc.get_int_list("excluded_classes")) excluded.insert(a);
  const Dataset ds = load_checked(cmd.paths.at("data"));
  const auto items = pair_with_ground_truth(load_predictions(cmd.paths.at("predictions")), ds);
  const EvalReport report = evaluate(items, excluded);
  const fs::path out = cmd.out;
  atomic_write(out / "report.json", report_json(report));
  atomic_write(out / "report.csv", report_csv(report));
  rc.write_snapshot(out);
  std::printf("videos %zu  MoF %.4f  IoD %.4f  matching %.4f\n", report.videos.size(), report.mof, report.iod,
              report.matching_score);
  return kOk;
}

int cmd_bench(const Command& cmd) {
  const RunConfig rc = resolve(cmd);
  const BenchConfig bc = bench_config_from(rc);
  const ModelParams params = load_checkpoint(cmd.paths.at("checkpoint"));
  const Dataset ds = load_checked(cmd.paths.at("data"));
  const std::string pool_path = cmd.paths.at("candidates").empty() ? cmd.paths.at("data") : cmd.paths.at("candidates");
  const std::vector<Transcript> pool = distinct_transcripts(load_checked(pool_path));
  const BenchReport report = run_bench(params, ds, pool, bc);
  const fs::path out = cmd.out;
  atomic_write(out / "bench.csv", bench_csv(report));
  atomic_write(out / "bench_summary.json", bench_summary_json(report));
  rc.write_snapshot(out);
  const BenchSummary& s = report.summary;
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    std::printf("candidates %4d  align-all %.3e s/video  mucon-full %.3e s/video\n", s.counts[i],
                s.align_all_median[i], s.mucon_full_median[i]);
  }
  std::printf("linear fit R^2 %.4f, parallel %s (%d threads)\n", s.r_squared, s.parallel ? "yes" : "no", s.threads);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised action segmentation with mutual consistency"};
  app.require_subcommand(1);
  Command synth, trainc, infer, eval, bench;
  add_command(app, synth, "synth", "generate a synthetic dataset");
  add_command(app, trainc, "train", "train the reference model");
  add_path(trainc, "data", "training dataset (manifest or directory)", true);
  add_command(app, infer, "infer", "decode a dataset with a checkpoint");
  add_path(infer, "checkpoint", "checkpoint file", true);
  add_path(infer, "data", "dataset to decode", true);
  add_path(infer, "candidates", "dataset whose transcripts form the align-all candidate set", false);
  add_command(app, eval, "eval", "score predictions against frame labels");
  add_path(eval, "predictions", "predictions.jsonl", true);
  add_path(eval, "data", "labelled dataset", true);
  add_command(app, bench, "bench", "time decoding against candidate count");
  add_path(bench, "checkpoint", "checkpoint file", true);
  add_path(bench, "data", "dataset to decode", true);
  add_path(bench, "candidates", "dataset providing the candidate pool (default: --data)", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth.app) return cmd_synth(synth);
    if (*trainc.app) return cmd_train(trainc);
    if (*infer.app) return cmd_infer(infer);
    if (*eval.app) return cmd_eval(eval);
    if (*bench.app) return cmd_bench(bench);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
