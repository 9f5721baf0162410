// Copyright 2026 HFD Baselines Authors
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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfd/baseline/correlation.hpp"
#include "hfd/data/alignment.hpp"
#include "hfd/data/dataset.hpp"
#include "hfd/data/normalization.hpp"
#include "hfd/data/splits.hpp"
#include "hfd/errors.hpp"
#include "hfd/exp/experiment.hpp"
#include "hfd/features/backbone.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/features/flow.hpp"
#include "hfd/features/sequence.hpp"
#include "hfd/io/array_file.hpp"
#include "hfd/models/fusion.hpp"
#include "hfd/models/mstcn.hpp"
#include "hfd/synth/synth.hpp"

namespace d = hfd::data;
namespace e = hfd::exp;
namespace f = hfd::features;
namespace m = hfd::models;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && value[0] != '\0' ? std::string(value) : fallback;
}

fs::path require_data_root(const std::string& flag) {
  const std::string root = flag.empty() ? env_or("HFD_DATA_ROOT", "") : flag;
  if (root.empty())
    throw hfd::ConfigError("no dataset root: pass --data or set HFD_DATA_ROOT");
  return root;
}

fs::path resolve_cache_dir(const std::string& flag, const fs::path& data_root) {
  if (!flag.empty()) return flag;
  const std::string env = env_or("HFD_CACHE_DIR", "");
  if (!env.empty()) return env;
  return data_root / ".feature_cache";
}

std::string pct(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

void print_report(const hfd::metrics::MetricsReport& report,
                  bool with_outcome) {
  if (with_outcome)
    std::cout << "outcome accuracy: " << pct(report.outcome_accuracy) << "\n";
  if (!report.f1_at.empty() || report.frame_accuracy > 0.0) {
    std::cout << "frame accuracy:   " << pct(report.frame_accuracy) << "\n";
    for (const auto& [thr, value] : report.f1_at)
      std::cout << "f1@" << thr << ":            " << pct(value) << "\n";
  }
}

// All annotated trials under root, with participant/platform/task metadata
// but no pixel data.
struct TrialIndexEntry {
  fs::path dir;
  std::string trial_id;
  std::string participant;
  d::RobotPlatform platform = d::RobotPlatform::HSR;
  d::Task task = d::Task::R2H;
  d::AnnotationTrack labels;
};

std::vector<TrialIndexEntry> index_trials(const fs::path& root) {
  std::vector<TrialIndexEntry> entries;
  for (const fs::path& dir : d::find_trial_dirs(root)) {
    d::LoadOptions options;
    options.load_frames = false;
    const d::TrialRecord trial = d::load_trial(dir, options);
    if (!trial.annotations)
      throw hfd::NoLabels(trial.trial_id + ": missing annotations");
    TrialIndexEntry entry;
    entry.dir = dir;
    entry.trial_id = trial.trial_id;
    entry.participant = trial.participant_id;
    entry.platform = trial.platform;
    entry.task = trial.task;
    entry.labels = *trial.annotations;
    entries.push_back(std::move(entry));
  }
  if (entries.empty())
    throw hfd::ConfigError("no annotated trials under " + root.string());
  return entries;
}

std::vector<size_t> split_indices(const std::vector<TrialIndexEntry>& entries,
                                  const fs::path& root,
                                  const std::string& split) {
  std::vector<size_t> all(entries.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (split == "all") return all;

  const d::SplitSpec spec = d::SplitSpec::from_json_file(root / "splits.json");
  std::vector<std::string> participants;
  for (const auto& entry : entries) participants.push_back(entry.participant);
  const d::SplitIndices indices = d::split_by_participant(participants, spec);
  if (split == "train") return indices.train;
  if (split == "val") return indices.val;
  if (split == "test") return indices.test;
  throw hfd::ConfigError("unknown split '" + split +
                         "' (train, val, test or all)");
}

int cmd_ingest(const std::string& data_flag) {
  const fs::path root = require_data_root(data_flag);
  std::map<std::string, int> per_cell, per_platform;
  std::map<std::string, std::set<std::string>> split_participants;
  int failures = 0, total = 0;
  std::vector<std::string> participants, ids;

  for (const fs::path& dir : d::find_trial_dirs(root)) {
    ++total;
    try {
      d::LoadOptions options;
      options.load_frames = false;
      const d::TrialRecord trial = d::load_trial(dir, options);
      ++per_platform[d::label_name(trial.platform)];
      if (trial.annotations)
        ++per_cell[d::label_name(trial.task) + "/" +
                   d::label_name(trial.annotations->outcome)];
      participants.push_back(trial.participant_id);
      ids.push_back(trial.trial_id);
    } catch (const std::exception& ex) {
      ++failures;
      std::cerr << dir.filename().string() << ": " << ex.what() << "\n";
    }
  }

  std::cout << "trials: " << total;
  if (failures > 0) std::cout << " (" << failures << " failed validation)";
  std::cout << "\n";
  for (const auto& [platform, count] : per_platform)
    std::cout << "  platform " << platform << ": " << count << "\n";
  for (const auto& [cell, count] : per_cell)
    std::cout << "  " << cell << ": " << count << "\n";

  if (fs::exists(root / "splits.json")) {
    const d::SplitSpec spec =
        d::SplitSpec::from_json_file(root / "splits.json");
    const d::SplitIndices idx = d::split_by_participant(participants, spec);
    std::cout << "splits: train " << idx.train.size() << " | val "
              << idx.val.size() << " | test " << idx.test.size() << "\n";
  }
  return failures == 0 ? 0 : 1;
}

int cmd_synth(int n, const std::string& out, std::uint64_t seed,
              int participants, bool no_cache) {
  hfd::synth::SuiteOptions options;
  // The suite is balanced over the 8 task/outcome cells, so the requested
  // count rounds up to the next multiple of 8.
  options.per_cell = std::max(1, (n + 7) / 8);
  options.seed = seed;
  if (participants > 0) options.participants = participants;
  options.write_feature_cache = !no_cache;

  const hfd::synth::SuiteSummary summary =
      hfd::synth::generate_suite(out, options);
  std::cout << "wrote " << summary.trial_ids.size() << " trials under "
            << summary.root.string() << "\n";
  if (!no_cache)
    std::cout << "feature cache: " << summary.cache_dir.string() << "\n";
  return 0;
}

int cmd_extract_features(const std::string& data_flag, const std::string& out,
                         const std::string& flow_alg, bool force) {
  const fs::path root = require_data_root(data_flag);
  const fs::path cache = resolve_cache_dir(out, root);

  f::FlowAlgorithm alg = f::FlowAlgorithm::TVL1;
  if (flow_alg == "dis") alg = f::FlowAlgorithm::DIS;
  else if (flow_alg == "farneback") alg = f::FlowAlgorithm::FARNEBACK;
  else if (flow_alg != "tvl1")
    throw hfd::ConfigError("unknown flow algorithm '" + flow_alg + "'");

  f::BackboneConfig rgb_config;
  f::BackboneConfig flow_config;
  flow_config.image_channels = 2;
  flow_config.seed = 2;
  const f::ClipEncoder rgb(rgb_config), flow(flow_config);
  const std::string fingerprint =
      rgb.fingerprint() + "+" + flow.fingerprint() + "+" + flow_alg;

  const std::vector<TrialIndexEntry> entries = index_trials(root);

  // F-T statistics come from the training participants when a split file
  // is present, from everything otherwise.
  std::vector<size_t> stat_indices;
  if (fs::exists(root / "splits.json"))
    stat_indices = split_indices(entries, root, "train");
  else
    stat_indices = split_indices(entries, root, "all");
  std::vector<Eigen::MatrixXd> train_ft;
  for (const size_t i : stat_indices) {
    const d::TrialRecord trial = d::load_trial(entries[i].dir);
    train_ft.push_back(d::align_to_frames(trial).ft);
  }
  const d::NormalizationStats stats = d::compute_ft_stats(train_ft);

  int written = 0, skipped = 0;
  for (const auto& entry : entries) {
    if (!force && f::feature_cache_exists(cache, entry.trial_id)) {
      ++skipped;
      continue;
    }
    const d::TrialRecord trial = d::load_trial(entry.dir);
    const d::AlignedTrial aligned = d::align_to_frames(trial);
    const std::vector<cv::Mat> fields =
        f::compute_optical_flow(aligned.frames, alg);
    const f::FeatureSequence features =
        f::extract_frame_features(aligned, fields, rgb, flow, stats);
    f::save_feature_cache(cache, features, fingerprint);
    ++written;
    std::cout << entry.trial_id << ": " << features.frame_count()
              << " frames\n";
  }
  std::cout << "cached " << written << " trials (" << skipped
            << " already present) under " << cache.string() << "\n";
  return 0;
}

int cmd_fit_baseline(const std::string& data_flag, const std::string& out,
                     bool nominal_only, const std::string& split) {
  const fs::path root = require_data_root(data_flag);
  const std::vector<TrialIndexEntry> entries = index_trials(root);
  std::vector<d::AnnotationTrack> tracks;
  for (const size_t i : split_indices(entries, root, split))
    tracks.push_back(entries[i].labels);

  const hfd::baseline::CorrelationTable table = hfd::baseline::fit_correlation(
      tracks, nominal_only, root.filename().string() + ":" + split);
  hfd::baseline::save_correlation_table(out, table);
  std::cout << "fitted on " << tracks.size() << " trials ("
            << table.total() << " frame counts, " << table.empty_cells().size()
            << " empty cells) -> " << out << "\n";
  return 0;
}

int cmd_eval_baseline(const std::string& data_flag, const std::string& table_path,
                      const std::string& split) {
  const fs::path root = require_data_root(data_flag);
  const hfd::baseline::CorrelationTable table =
      hfd::baseline::load_correlation_table(table_path);
  const std::vector<TrialIndexEntry> entries = index_trials(root);
  std::vector<d::AnnotationTrack> tracks;
  for (const size_t i : split_indices(entries, root, split))
    tracks.push_back(entries[i].labels);

  const hfd::metrics::MetricsReport report =
      hfd::baseline::evaluate_baseline(table, tracks);
  std::cout << "evaluated " << tracks.size() << " trials (" << split << ")\n";
  print_report(report, /*with_outcome=*/false);
  return 0;
}

struct TrainFlags {
  std::string config_file, model, modalities, heads;
  std::string train_platform, eval_platform, task;
  std::string data, cache, out = "results", checkpoints;
  int seeds = -1, base_seed = -1, epochs = -1, patience = -1, batch = -1;
  int channels = -1, layers = -1, segment_length = -1, signal_channels = -1;
  double lr = -1.0;
  bool no_checkpoints = false;
};

e::ExperimentConfig config_from_flags(const TrainFlags& flags) {
  e::ExperimentConfig config;
  if (!flags.config_file.empty()) config = e::load_config(flags.config_file);
  if (!flags.model.empty()) config.model = e::parse_model_id(flags.model);
  if (!flags.modalities.empty())
    config.modalities = e::parse_modalities(flags.modalities);
  if (!flags.heads.empty()) config.loss_heads = e::parse_loss_heads(flags.heads);
  if (!flags.train_platform.empty())
    config.train_platform = d::parse_platform(flags.train_platform);
  if (!flags.eval_platform.empty())
    config.eval_platform = d::parse_platform(flags.eval_platform);
  if (!flags.task.empty()) config.task_filter = d::parse_task(flags.task);
  if (flags.seeds >= 0) config.seeds = flags.seeds;
  if (flags.base_seed >= 0) config.base_seed = flags.base_seed;
  if (flags.epochs >= 0) config.max_epochs = flags.epochs;
  if (flags.patience >= 0) config.patience = flags.patience;
  if (flags.batch >= 0) config.batch_size = flags.batch;
  if (flags.lr >= 0.0) config.lr = flags.lr;
  if (flags.channels >= 0) config.channels = flags.channels;
  if (flags.layers >= 0) config.layers_per_stage = flags.layers;
  if (flags.segment_length >= 0) config.segment_length = flags.segment_length;
  if (flags.signal_channels >= 0)
    config.signal_channels = flags.signal_channels;
  config.output_dir = flags.out;
  return config;
}

void print_result_row(const e::ResultRow& row) {
  std::cout << "fingerprint: " << row.fingerprint << "\n";
  std::cout << "seeds: " << row.provenance.seeds.size() << ", wall clock: "
            << pct(row.wall_clock_seconds) << "s\n";
  if (row.metrics.n_runs > 0) {
    auto cell = [&](double mean, double sd) {
      return row.metrics.stddev ? pct(mean) + " +/- " + pct(sd) : pct(mean);
    };
    const auto& sd = row.metrics.stddev;
    std::cout << "outcome accuracy: "
              << cell(row.metrics.outcome_accuracy,
                      sd ? sd->outcome_accuracy : 0.0)
              << "\n";
    if (!row.metrics.f1_at.empty()) {
      std::cout << "frame accuracy:   "
                << cell(row.metrics.frame_accuracy,
                        sd ? sd->frame_accuracy : 0.0)
                << "\n";
      for (const auto& [thr, value] : row.metrics.f1_at)
        std::cout << "f1@" << thr << ":            "
                  << cell(value, sd ? sd->f1_at.at(thr) : 0.0) << "\n";
    }
  }
  if (!row.complete) {
    std::cout << "row is incomplete:\n";
    for (const auto& failure : row.failures)
      std::cout << "  " << failure << "\n";
  }
}

int cmd_train(const TrainFlags& flags) {
  const fs::path root = require_data_root(flags.data);
  const fs::path cache = resolve_cache_dir(flags.cache, root);
  const e::ExperimentConfig config = config_from_flags(flags);

  std::optional<fs::path> checkpoint_dir;
  if (!flags.no_checkpoints)
    checkpoint_dir = flags.checkpoints.empty()
                         ? config.output_dir / "checkpoints" /
                               config.fingerprint()
                         : fs::path(flags.checkpoints);

  const e::ResultRow row = e::run_experiment(config, root, cache, checkpoint_dir);
  print_result_row(row);
  std::cout << "results: " << config.output_dir.string() << "\n";
  if (checkpoint_dir)
    std::cout << "checkpoints: " << checkpoint_dir->string() << "\n";
  return row.complete ? 0 : 1;
}

int score_correlation(const fs::path& model_path,
                      const std::vector<TrialIndexEntry>& entries,
                      const std::vector<size_t>& indices) {
  const hfd::baseline::CorrelationTable table =
      hfd::baseline::load_correlation_table(model_path);
  std::vector<d::AnnotationTrack> tracks;
  for (const size_t i : indices) tracks.push_back(entries[i].labels);
  print_report(hfd::baseline::evaluate_baseline(table, tracks), false);
  return 0;
}

int score_segmenter_checkpoint(const fs::path& model_path,
                               const fs::path& cache,
                               const std::vector<TrialIndexEntry>& entries,
                               const std::vector<size_t>& indices) {
  const m::MstcnModel model = m::load_mstcn(model_path);
  std::vector<f::FeatureSequence> seqs;
  for (const size_t i : indices)
    seqs.push_back(f::load_feature_cache(cache, entries[i].trial_id));
  print_report(e::score_segmenter(model, seqs), true);
  return 0;
}

int score_classifier_checkpoint(const fs::path& model_path,
                                const std::vector<TrialIndexEntry>& entries,
                                const std::vector<size_t>& indices) {
  d::NormalizationStats stats;
  m::FusionClassifier model = m::load_fusion(model_path, &stats);
  const bool needs_video = model.config().streams.count(m::Stream::RGB) > 0 ||
                           model.config().streams.count(m::Stream::FLOW) > 0;

  std::vector<m::LabeledClip> clips;
  for (const size_t i : indices) {
    d::LoadOptions options;
    options.load_frames = needs_video;
    const d::TrialRecord trial = d::load_trial(entries[i].dir, options);
    const d::AlignedTrial aligned = d::align_to_frames(trial);
    std::vector<cv::Mat> fields;
    if (needs_video)
      fields = f::compute_optical_flow(aligned.frames, f::FlowAlgorithm::DIS);
    m::LabeledClip labeled;
    labeled.clip = f::sample_uniform_clip(aligned, fields);
    labeled.clip.ft = d::normalize_ft(labeled.clip.ft, stats);
    labeled.clip.label = entries[i].labels.outcome;
    labeled.task = entries[i].task;
    clips.push_back(std::move(labeled));
  }
  std::cout << "outcome accuracy: " << pct(m::outcome_accuracy(model, clips))
            << "\n";
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_flag,
              const std::string& cache_flag, const std::string& split) {
  const fs::path root = require_data_root(data_flag);
  const fs::path cache = resolve_cache_dir(cache_flag, root);
  const std::vector<TrialIndexEntry> entries = index_trials(root);
  const std::vector<size_t> indices = split_indices(entries, root, split);
  std::cout << "scoring " << indices.size() << " trials (" << split << ")\n";

  const fs::path path(model_path);
  if (path.extension() == ".json")
    return score_correlation(path, entries, indices);

  const hfd::io::ArrayFile file = hfd::io::load_array_file(path);
  const auto meta = nlohmann::json::parse(file.metadata);
  const std::string format = meta.value("format", "");
  if (format == "mstcn-checkpoint-v1")
    return score_segmenter_checkpoint(path, cache, entries, indices);
  if (format == "fusion-checkpoint-v1")
    return score_classifier_checkpoint(path, entries, indices);
  throw hfd::SchemaError("unrecognized checkpoint format '" + format + "'");
}

int cmd_reproduce(int table, const std::string& data_flag,
                  const std::string& cache_flag, const std::string& out,
                  int seeds, const std::vector<std::string>& sets) {
  const fs::path root = require_data_root(data_flag);
  const fs::path cache = resolve_cache_dir(cache_flag, root);

  e::ReproduceOptions options;
  if (seeds > 0) options.seeds = seeds;
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw hfd::ConfigError("--set expects key=value, got '" + kv + "'");
    options.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }

  const fs::path csv = e::reproduce_table(table, root, cache, out, options);
  std::cout << "wrote " << csv.string() << "\n";
  return 0;
}

int cmd_report(const std::string& results, const std::string& out) {
  const fs::path csv = e::render_report(results, out);
  std::cout << "wrote " << csv.string() << "\n";
  std::cout << "plots: " << (fs::path(out) / "loss_curves.svg").string()
            << ", " << (fs::path(out) / "accuracy_bars.svg").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handover failure detection baselines"};
  app.require_subcommand(1);

  std::string data, cache;

  auto* ingest = app.add_subcommand("ingest", "Validate and summarize a dataset");
  ingest->add_option("--data", data, "Dataset root (default $HFD_DATA_ROOT)");

  int synth_n = 8, synth_participants = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  bool synth_no_cache = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic suite");
  synth->add_option("--n", synth_n, "Trial count (rounded up to x8)");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Master seed");
  synth->add_option("--participants", synth_participants,
                    "Synthetic participant count (>= 3)");
  synth->add_flag("--no-cache", synth_no_cache, "Skip the feature cache");

  std::string feat_out, flow_alg = "tvl1";
  bool feat_force = false;
  auto* extract =
      app.add_subcommand("extract-features", "Build the feature cache");
  extract->add_option("--dataset,--data", data,
                      "Dataset root (default $HFD_DATA_ROOT)");
  extract->add_option("--out", feat_out,
                      "Cache directory (default $HFD_CACHE_DIR)");
  extract->add_option("--flow-alg", flow_alg, "tvl1, dis or farneback");
  extract->add_flag("--force", feat_force, "Recompute existing entries");

  std::string fit_out = "correlation_table.json", fit_split = "train";
  bool nominal_only = false;
  auto* fit = app.add_subcommand("fit-baseline", "Fit the correlation baseline");
  fit->add_option("--data", data, "Dataset root (default $HFD_DATA_ROOT)");
  fit->add_option("--out", fit_out, "Output table path");
  fit->add_option("--split", fit_split, "train or all");
  fit->add_flag("--nominal-only", nominal_only, "Fit on successful trials only");

  std::string eval_table, eval_split = "test";
  auto* evalb =
      app.add_subcommand("eval-baseline", "Evaluate a correlation table");
  evalb->add_option("--data", data, "Dataset root (default $HFD_DATA_ROOT)");
  evalb->add_option("--table", eval_table, "Fitted table path")->required();
  evalb->add_option("--split", eval_split, "train, val, test or all");

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Run a training experiment");
  train->add_option("--config", tf.config_file, "Experiment config file");
  train->add_option("--model", tf.model,
                    "correlation, i3d-a..d, mstcn-a, mstcn-b");
  train->add_option("--modalities", tf.modalities,
                    "e.g. rgb,flow,ft,gripper or v,ft,g");
  train->add_option("--heads", tf.heads, "e.g. cls,seg_h,seg_r");
  train->add_option("--train-platform", tf.train_platform, "hsr or kinova_gen3");
  train->add_option("--eval-platform", tf.eval_platform, "hsr or kinova_gen3");
  train->add_option("--task", tf.task, "r2h or h2r");
  train->add_option("--seeds", tf.seeds, "Seed count");
  train->add_option("--base-seed", tf.base_seed, "First seed");
  train->add_option("--epochs", tf.epochs, "Max epochs");
  train->add_option("--patience", tf.patience, "Early-stop patience");
  train->add_option("--batch", tf.batch, "Classifier batch size");
  train->add_option("--lr", tf.lr, "Learning rate (0 = family default)");
  train->add_option("--channels", tf.channels, "Segmenter channels");
  train->add_option("--layers", tf.layers, "Segmenter layers per stage");
  train->add_option("--segment-length", tf.segment_length,
                    "Frames per robot action");
  train->add_option("--signal-channels", tf.signal_channels,
                    "F-T/gripper encoder width");
  train->add_option("--data", tf.data, "Dataset root (default $HFD_DATA_ROOT)");
  train->add_option("--cache", tf.cache,
                    "Feature cache (default $HFD_CACHE_DIR)");
  train->add_option("--out", tf.out, "Results directory");
  train->add_option("--checkpoints", tf.checkpoints,
                    "Checkpoint directory (default under --out)");
  train->add_flag("--no-checkpoints", tf.no_checkpoints, "Skip checkpoints");

  std::string score_model, score_split = "test";
  auto* score = app.add_subcommand("score", "Evaluate a saved checkpoint");
  score->add_option("--model", score_model, "Checkpoint path")->required();
  score->add_option("--data", data, "Dataset root (default $HFD_DATA_ROOT)");
  score->add_option("--cache", cache, "Feature cache (default $HFD_CACHE_DIR)");
  score->add_option("--split", score_split, "train, val, test or all");

  int repro_table = 0, repro_seeds = 0;
  std::string repro_out = "reproduction";
  std::vector<std::string> repro_sets;
  auto* repro = app.add_subcommand("reproduce", "Re-run a result table");
  repro->add_option("--table", repro_table, "3, 4, 5 or 6")->required();
  repro->add_option("--data", data, "Dataset root (default $HFD_DATA_ROOT)");
  repro->add_option("--cache", cache, "Feature cache (default $HFD_CACHE_DIR)");
  repro->add_option("--out", repro_out, "Output directory");
  repro->add_option("--seeds", repro_seeds, "Seeds per row (default 5)");
  repro->add_option("--set", repro_sets, "Config override key=value");

  std::string report_results = "results", report_out = "report";
  auto* report = app.add_subcommand("report", "Render CSV and plots");
  report->add_option("--results", report_results, "Results directory");
  report->add_option("--out", report_out, "Report directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(data);
    if (synth->parsed())
      return cmd_synth(synth_n, synth_out, synth_seed, synth_participants,
                       synth_no_cache);
    if (extract->parsed())
      return cmd_extract_features(data, feat_out, flow_alg, feat_force);
    if (fit->parsed())
      return cmd_fit_baseline(data, fit_out, nominal_only, fit_split);
    if (evalb->parsed()) return cmd_eval_baseline(data, eval_table, eval_split);
    if (train->parsed()) return cmd_train(tf);
    if (score->parsed()) return cmd_score(score_model, data, cache, score_split);
    if (repro->parsed())
      return cmd_reproduce(repro_table, data, cache, repro_out, repro_seeds,
                           repro_sets);
    if (report->parsed()) return cmd_report(report_results, report_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
