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

#include "hfd/exp/experiment.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hfd/baseline/correlation.hpp"
#include "hfd/data/alignment.hpp"
#include "hfd/data/dataset.hpp"
#include "hfd/data/normalization.hpp"
#include "hfd/data/splits.hpp"
#include "hfd/errors.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/features/flow.hpp"
#include "hfd/features/sequence.hpp"
#include "hfd/models/fusion.hpp"
#include "hfd/models/mstcn.hpp"

namespace hfd::exp {

namespace d = data;
namespace f = features;
namespace m = models;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<double> kF1Thresholds = {10.0, 25.0, 50.0};

std::uint64_t fnv1a(const std::string& text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> parts;
  std::string item;
  std::stringstream in(csv);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

}  // namespace

ModelId parse_model_id(const std::string& name) {
  const std::string n = trim(name);
  if (n == "correlation") return ModelId::CORRELATION;
  if (n == "i3d-a") return ModelId::I3D_A;
  if (n == "i3d-b") return ModelId::I3D_B;
  if (n == "i3d-c") return ModelId::I3D_C;
  if (n == "i3d-d") return ModelId::I3D_D;
  if (n == "mstcn-a") return ModelId::MSTCN_A;
  if (n == "mstcn-b") return ModelId::MSTCN_B;
  throw ConfigError("unknown model id: " + name);
}

std::string model_id_name(ModelId model) {
  switch (model) {
    case ModelId::CORRELATION: return "correlation";
    case ModelId::I3D_A: return "i3d-a";
    case ModelId::I3D_B: return "i3d-b";
    case ModelId::I3D_C: return "i3d-c";
    case ModelId::I3D_D: return "i3d-d";
    case ModelId::MSTCN_A: return "mstcn-a";
    case ModelId::MSTCN_B: return "mstcn-b";
  }
  throw ConfigError("unknown model id");
}

ModalitySet parse_modalities(const std::string& csv) {
  ModalitySet set;
  for (const auto& part : split_csv(csv)) {
    if (part == "v" || part == "video" || part == "rgb" || part == "flow" ||
        part == "of")
      set.insert(Modality::V);
    else if (part == "ft" || part == "f-t" || part == "force_torque" ||
             part == "force-torque")
      set.insert(Modality::FT);
    else if (part == "g" || part == "gripper")
      set.insert(Modality::G);
    else
      throw ConfigError("unknown modality: " + part);
  }
  return set;
}

std::string modalities_name(const ModalitySet& set) {
  std::string out;
  for (const auto mod : set) {
    if (!out.empty()) out += ",";
    out += mod == Modality::V ? "v" : mod == Modality::FT ? "ft" : "g";
  }
  return out;
}

LossHeadSet parse_loss_heads(const std::string& csv) {
  LossHeadSet set;
  for (const auto& part : split_csv(csv)) {
    if (part == "cls") set.insert(LossHead::CLS);
    else if (part == "seg_h") set.insert(LossHead::SEG_H);
    else if (part == "seg_r") set.insert(LossHead::SEG_R);
    else throw ConfigError("unknown loss head: " + part);
  }
  return set;
}

std::string loss_heads_name(const LossHeadSet& set) {
  std::string out;
  for (const auto head : set) {
    if (!out.empty()) out += ",";
    out += head == LossHead::CLS ? "cls"
           : head == LossHead::SEG_H ? "seg_h" : "seg_r";
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (modalities.empty()) throw ConfigError("modality set must be non-empty");
  if (!loss_heads.count(LossHead::CLS))
    throw ConfigError("loss-head set must contain cls");
  const bool segmenter = model == ModelId::MSTCN_A || model == ModelId::MSTCN_B;
  if (loss_heads.count(LossHead::SEG_R) && model != ModelId::MSTCN_B)
    throw ConfigError("seg_r is only valid with mstcn-b");
  if (loss_heads.count(LossHead::SEG_H) && !segmenter)
    throw ConfigError("seg_h is only valid with the segmenters");
  if (seeds < 1) throw ConfigError("seeds must be at least 1");
  if (max_epochs < 1 || patience < 1 || batch_size < 1 || channels < 1 ||
      layers_per_stage < 1 || segment_length < 1 || signal_channels < 1)
    throw ConfigError("training hyperparameters must be positive");
}

std::map<std::string, std::string> ExperimentConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["model"] = model_id_name(model);
  kv["modalities"] = modalities_name(modalities);
  kv["loss_heads"] = loss_heads_name(loss_heads);
  kv["train_platform"] =
      train_platform ? d::label_name(*train_platform) : "";
  kv["eval_platform"] = eval_platform ? d::label_name(*eval_platform) : "";
  kv["task"] = task_filter ? d::label_name(*task_filter) : "";
  kv["seeds"] = std::to_string(seeds);
  kv["base_seed"] = std::to_string(base_seed);
  kv["max_epochs"] = std::to_string(max_epochs);
  kv["patience"] = std::to_string(patience);
  kv["batch_size"] = std::to_string(batch_size);
  kv["lr"] = format_double(lr);
  kv["channels"] = std::to_string(channels);
  kv["layers_per_stage"] = std::to_string(layers_per_stage);
  kv["segment_length"] = std::to_string(segment_length);
  kv["signal_channels"] = std::to_string(signal_channels);
  kv["output_dir"] = output_dir.string();
  return kv;
}

ExperimentConfig ExperimentConfig::from_kv(
    const std::map<std::string, std::string>& kv) {
  ExperimentConfig config;
  for (const auto& [key, value] : kv) {
    if (key == "model") config.model = parse_model_id(value);
    else if (key == "modalities") config.modalities = parse_modalities(value);
    else if (key == "loss_heads") config.loss_heads = parse_loss_heads(value);
    else if (key == "train_platform")
      config.train_platform =
          value.empty() ? std::nullopt
                        : std::optional(d::parse_platform(value));
    else if (key == "eval_platform")
      config.eval_platform =
          value.empty() ? std::nullopt
                        : std::optional(d::parse_platform(value));
    else if (key == "task")
      config.task_filter =
          value.empty() ? std::nullopt : std::optional(d::parse_task(value));
    else if (key == "seeds") config.seeds = std::stoi(value);
    else if (key == "base_seed") config.base_seed = std::stoull(value);
    else if (key == "max_epochs") config.max_epochs = std::stoi(value);
    else if (key == "patience") config.patience = std::stoi(value);
    else if (key == "batch_size") config.batch_size = std::stoi(value);
    else if (key == "lr") config.lr = std::stod(value);
    else if (key == "channels") config.channels = std::stoi(value);
    else if (key == "layers_per_stage")
      config.layers_per_stage = std::stoi(value);
    else if (key == "segment_length") config.segment_length = std::stoi(value);
    else if (key == "signal_channels")
      config.signal_channels = std::stoi(value);
    else if (key == "output_dir") config.output_dir = value;
    else throw ConfigError("unknown config key: " + key);
  }
  return config;
}

std::string ExperimentConfig::fingerprint() const {
  auto kv = to_kv();
  kv.erase("output_dir");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : kv) hash = fnv1a(key + "=" + value + "\n", hash);
  return hex64(hash);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return ExperimentConfig::from_kv(kv);
}

void save_config(const fs::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write config " + path.string());
  for (const auto& [key, value] : config.to_kv())
    out << key << " = " << value << "\n";
}

namespace {

// Everything an experiment needs from one trial, loaded once.
struct TrialEntry {
  std::string trial_id;
  std::string participant;
  d::RobotPlatform platform = d::RobotPlatform::HSR;
  d::Task task = d::Task::R2H;
  d::AnnotationTrack labels;
  f::FeatureSequence seq;   // cached features (segmenters)
  f::ClipInput clip;        // raw-wrench clip (classifiers)
  Eigen::MatrixXd full_ft;  // raw aligned wrench, for split-local stats
};

struct Bank {
  std::vector<TrialEntry> entries;
  d::SplitSpec spec;
  std::string dataset_hash;
};

struct Needs {
  bool seqs = false;
  bool clips = false;
  bool video = false;
};

Needs needs_for(const ExperimentConfig& config) {
  Needs needs;
  switch (config.model) {
    case ModelId::CORRELATION:
      break;
    case ModelId::MSTCN_A:
    case ModelId::MSTCN_B:
      needs.seqs = true;
      break;
    default:
      needs.clips = true;
      needs.video = config.modalities.count(Modality::V) > 0;
  }
  return needs;
}

Bank load_bank(const fs::path& dataset_root, const fs::path& cache_dir,
               const Needs& needs) {
  const auto dirs = d::find_trial_dirs(dataset_root);
  if (dirs.empty())
    throw ConfigError("no trials under " + dataset_root.string());

  Bank bank;
  bank.spec = d::SplitSpec::from_json_file(dataset_root / "splits.json");

  std::vector<std::string> hash_lines;
  for (const auto& dir : dirs) {
    d::LoadOptions options;
    options.load_frames = needs.video;
    const d::TrialRecord rec = d::load_trial(dir, options);
    if (!rec.annotations)
      throw NoLabels("trial without annotations: " + rec.trial_id);

    TrialEntry entry;
    entry.trial_id = rec.trial_id;
    entry.participant = rec.participant_id;
    entry.platform = rec.platform;
    entry.task = rec.task;
    entry.labels = *rec.annotations;
    if (needs.clips) {
      const d::AlignedTrial aligned = d::align_to_frames(rec);
      const std::vector<cv::Mat> flow =
          needs.video
              ? f::compute_optical_flow(aligned.frames, f::FlowAlgorithm::DIS)
              : std::vector<cv::Mat>{};
      entry.clip = f::sample_uniform_clip(aligned, flow);
      entry.full_ft = aligned.ft;
    }
    if (needs.seqs)
      entry.seq = f::load_feature_cache(cache_dir, rec.trial_id);

    hash_lines.push_back(rec.trial_id + "|" + rec.participant_id + "|" +
                         d::label_name(rec.platform) + "|" +
                         d::label_name(rec.task) + "|" +
                         d::label_name(rec.annotations->outcome));
    bank.entries.push_back(std::move(entry));
  }

  std::sort(hash_lines.begin(), hash_lines.end());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& line : hash_lines) hash = fnv1a(line + "\n", hash);
  bank.dataset_hash = hex64(hash);
  return bank;
}

struct Subsets {
  std::vector<size_t> train, val, test;
};

Subsets select_subsets(const Bank& bank, const ExperimentConfig& config) {
  std::vector<std::string> participants;
  participants.reserve(bank.entries.size());
  for (const auto& entry : bank.entries) participants.push_back(entry.participant);
  const d::SplitIndices indices = d::split_by_participant(participants, bank.spec);

  const auto keep_train = [&](size_t i) {
    const auto& e = bank.entries[i];
    if (config.train_platform && e.platform != *config.train_platform)
      return false;
    return !config.task_filter || e.task == *config.task_filter;
  };
  const auto keep_eval = [&](size_t i) {
    const auto& e = bank.entries[i];
    if (config.eval_platform && e.platform != *config.eval_platform)
      return false;
    return !config.task_filter || e.task == *config.task_filter;
  };

  Subsets subsets;
  for (const size_t i : indices.train)
    if (keep_train(i)) subsets.train.push_back(i);
  for (const size_t i : indices.val)
    if (keep_train(i)) subsets.val.push_back(i);
  for (const size_t i : indices.test)
    if (keep_eval(i)) subsets.test.push_back(i);

  if (subsets.train.empty())
    throw ConfigError("split filter leaves no training trials");
  if (subsets.test.empty())
    throw ConfigError("split filter leaves no test trials");
  return subsets;
}

struct SingleRun {
  metrics::MetricsReport report;
  std::vector<double> train_loss;
};

// Pools predicted and ground-truth human tracks over trials, per-trial
// offsets keeping segments from bridging trials.
struct SegPool {
  metrics::SegmentList pred, gt;
  long frames_total = 0, frames_correct = 0;
  int outcome_hits = 0, trials = 0;
  int offset = 0;

  void add(const std::vector<d::HumanAction>& pred_track,
           const d::AnnotationTrack& labels, d::OutcomeLabel pred_outcome) {
    std::vector<int> p(pred_track.size()), g(pred_track.size());
    if (pred_track.size() != labels.human_actions.size())
      throw LengthMismatch("prediction and annotation length differ");
    for (size_t t = 0; t < pred_track.size(); ++t) {
      p[t] = static_cast<int>(pred_track[t]);
      g[t] = static_cast<int>(labels.human_actions[t]);
      ++frames_total;
      if (p[t] == g[t]) ++frames_correct;
    }
    for (auto seg : metrics::frames_to_segments(p)) {
      seg.start += offset;
      seg.end += offset;
      pred.push_back(seg);
    }
    for (auto seg : metrics::frames_to_segments(g)) {
      seg.start += offset;
      seg.end += offset;
      gt.push_back(seg);
    }
    offset += static_cast<int>(pred_track.size());
    outcome_hits += pred_outcome == labels.outcome ? 1 : 0;
    ++trials;
  }

  metrics::MetricsReport report() const {
    if (trials == 0) throw EmptyList("no evaluation trials");
    metrics::MetricsReport out;
    out.outcome_accuracy = 100.0 * outcome_hits / trials;
    out.frame_accuracy =
        100.0 * static_cast<double>(frames_correct) / static_cast<double>(frames_total);
    for (const double thr : kF1Thresholds)
      out.f1_at[static_cast<int>(thr)] = metrics::segmental_f1(pred, gt, thr);
    return out;
  }
};

SingleRun run_correlation(const ExperimentConfig&, const Bank& bank,
                          const Subsets& subsets,
                          const std::optional<fs::path>& checkpoint) {
  std::vector<d::AnnotationTrack> train_tracks, test_tracks;
  for (const size_t i : subsets.train)
    train_tracks.push_back(bank.entries[i].labels);
  for (const size_t i : subsets.test)
    test_tracks.push_back(bank.entries[i].labels);

  const baseline::CorrelationTable table =
      baseline::fit_correlation(train_tracks, false, bank.dataset_hash);
  if (checkpoint) {
    fs::path path = *checkpoint;
    path += ".json";
    baseline::save_correlation_table(path, table);
  }
  SingleRun run;
  run.report = baseline::evaluate_baseline(table, test_tracks, kF1Thresholds);
  return run;
}

void pool_segmenter_prediction(const m::MstcnModel& model,
                               const f::FeatureSequence& seq,
                               const d::AnnotationTrack& labels,
                               SegPool& pool) {
  const m::SegmentationOutput out =
      model.config().variant == m::MstcnVariant::A
          ? m::predict_resampled(model, seq, labels.model_robot_actions())
          : m::predict(model, seq);
  pool.add(out.human_track, labels, out.outcome);
}

SingleRun run_segmenter(const ExperimentConfig& config, const Bank& bank,
                        const Subsets& subsets, std::uint64_t seed,
                        const std::optional<fs::path>& checkpoint) {
  m::MstcnConfig mc;
  mc.variant = config.model == ModelId::MSTCN_A ? m::MstcnVariant::A
                                                : m::MstcnVariant::B;
  mc.layers_per_stage = config.layers_per_stage;
  mc.channels = config.channels;
  mc.segment_length = config.segment_length;
  mc.use_rgb = config.modalities.count(Modality::V) > 0;
  mc.use_flow = mc.use_rgb;
  mc.use_ft = config.modalities.count(Modality::FT) > 0;
  mc.use_gripper = config.modalities.count(Modality::G) > 0;
  mc.ftg_channels = config.signal_channels;
  mc.head_human = config.loss_heads.count(LossHead::SEG_H) > 0;
  mc.head_outcome = true;
  mc.head_robot = config.loss_heads.count(LossHead::SEG_R) > 0;
  mc.seed = seed;
  m::MstcnModel model(mc);

  const bool resample = mc.variant == m::MstcnVariant::A;
  const auto prepare = [&](const std::vector<size_t>& idx) {
    std::vector<f::FeatureSequence> out;
    out.reserve(idx.size());
    for (const size_t i : idx) {
      const auto& seq = bank.entries[i].seq;
      out.push_back(resample
                        ? m::resample_per_robot_action(
                              seq, bank.entries[i].labels.model_robot_actions(),
                              config.segment_length)
                        : seq);
    }
    return out;
  };

  m::SegTrainConfig tc;
  tc.max_epochs = config.max_epochs;
  tc.lr = config.lr > 0.0 ? config.lr : 5e-4;
  tc.patience = config.patience;
  tc.seed = seed;
  const m::SegTrainHistory history =
      m::train_segmenter(model, prepare(subsets.train), prepare(subsets.val), tc);
  if (checkpoint) {
    fs::path path = *checkpoint;
    path += ".hfda";
    m::save_mstcn(path, model);
  }

  SegPool pool;
  for (const size_t i : subsets.test)
    pool_segmenter_prediction(model, bank.entries[i].seq,
                              bank.entries[i].labels, pool);

  SingleRun run;
  run.report = pool.report();
  run.train_loss = history.train_loss;
  return run;
}

SingleRun run_classifier(const ExperimentConfig& config, const Bank& bank,
                         const Subsets& subsets, std::uint64_t seed,
                         const std::optional<fs::path>& checkpoint) {
  m::FusionConfig fc;
  switch (config.model) {
    case ModelId::I3D_A: fc.variant = m::FusionVariant::A; break;
    case ModelId::I3D_B: fc.variant = m::FusionVariant::B; break;
    case ModelId::I3D_C: fc.variant = m::FusionVariant::C; break;
    default: fc.variant = m::FusionVariant::D; break;
  }
  fc.streams.clear();
  if (config.modalities.count(Modality::V)) {
    fc.streams.insert(m::Stream::RGB);
    fc.streams.insert(m::Stream::FLOW);
  }
  if (config.modalities.count(Modality::FT)) fc.streams.insert(m::Stream::FT);
  if (config.modalities.count(Modality::G))
    fc.streams.insert(m::Stream::GRIPPER);
  fc.signal_channels = config.signal_channels;
  fc.mask_task_outcomes = config.task_filter.has_value();
  fc.seed = seed;

  std::vector<Eigen::MatrixXd> train_ft;
  for (const size_t i : subsets.train)
    train_ft.push_back(bank.entries[i].full_ft);
  const d::NormalizationStats stats = d::compute_ft_stats(train_ft);

  const auto prepare = [&](const std::vector<size_t>& idx) {
    std::vector<m::LabeledClip> out;
    out.reserve(idx.size());
    for (const size_t i : idx) {
      m::LabeledClip labeled;
      labeled.clip = bank.entries[i].clip;
      labeled.clip.ft = d::normalize_ft(labeled.clip.ft, stats);
      labeled.clip.label = bank.entries[i].labels.outcome;
      labeled.task = bank.entries[i].task;
      out.push_back(std::move(labeled));
    }
    return out;
  };

  m::FusionClassifier model(fc);
  m::ClsTrainConfig tc;
  tc.max_epochs = config.max_epochs;
  tc.batch_size = config.batch_size;
  tc.lr_heads = config.lr > 0.0 ? config.lr : 1e-2;
  tc.lr_backbone = tc.lr_heads / 10.0;
  tc.patience = config.patience;
  tc.seed = seed;
  const m::ClsTrainHistory history = m::train_classifier(
      model, prepare(subsets.train), prepare(subsets.val), tc);
  if (checkpoint) {
    fs::path path = *checkpoint;
    path += ".hfda";
    m::save_fusion(path, model, stats);
  }

  SingleRun run;
  run.report.outcome_accuracy = m::outcome_accuracy(model, prepare(subsets.test));
  run.train_loss = history.train_loss;
  return run;
}

SingleRun run_single(const ExperimentConfig& config, const Bank& bank,
                     const Subsets& subsets, std::uint64_t seed,
                     const std::optional<fs::path>& checkpoint) {
  switch (config.model) {
    case ModelId::CORRELATION:
      return run_correlation(config, bank, subsets, checkpoint);
    case ModelId::MSTCN_A:
    case ModelId::MSTCN_B:
      return run_segmenter(config, bank, subsets, seed, checkpoint);
    default:
      return run_classifier(config, bank, subsets, seed, checkpoint);
  }
}

json report_json(const metrics::MetricsReport& report) {
  json out;
  out["outcome_accuracy"] = report.outcome_accuracy;
  out["frame_accuracy"] = report.frame_accuracy;
  json f1 = json::object();
  for (const auto& [thr, value] : report.f1_at) f1[std::to_string(thr)] = value;
  out["f1_at"] = f1;
  out["n_runs"] = report.n_runs;
  if (report.stddev) {
    json sd;
    sd["outcome_accuracy"] = report.stddev->outcome_accuracy;
    sd["frame_accuracy"] = report.stddev->frame_accuracy;
    json f1sd = json::object();
    for (const auto& [thr, value] : report.stddev->f1_at)
      f1sd[std::to_string(thr)] = value;
    sd["f1_at"] = f1sd;
    out["stddev"] = sd;
  }
  return out;
}

metrics::MetricsReport report_from_json(const json& in) {
  metrics::MetricsReport report;
  report.outcome_accuracy = in.at("outcome_accuracy").get<double>();
  report.frame_accuracy = in.at("frame_accuracy").get<double>();
  for (const auto& [key, value] : in.at("f1_at").items())
    report.f1_at[std::stoi(key)] = value.get<double>();
  report.n_runs = in.at("n_runs").get<int>();
  if (in.contains("stddev")) {
    metrics::ReportStd sd;
    sd.outcome_accuracy = in["stddev"].at("outcome_accuracy").get<double>();
    sd.frame_accuracy = in["stddev"].at("frame_accuracy").get<double>();
    for (const auto& [key, value] : in["stddev"].at("f1_at").items())
      sd.f1_at[std::stoi(key)] = value.get<double>();
    report.stddev = sd;
  }
  return report;
}

}  // namespace

metrics::MetricsReport score_segmenter(
    const models::MstcnModel& model,
    const std::vector<features::FeatureSequence>& seqs) {
  SegPool pool;
  for (const auto& seq : seqs) {
    if (!seq.labels)
      throw NoLabels("score_segmenter: sequence lacks an annotation track");
    pool_segmenter_prediction(model, seq, *seq.labels, pool);
  }
  return pool.report();
}

ResultRow run_experiment(const ExperimentConfig& config,
                         const fs::path& dataset_root,
                         const fs::path& cache_dir,
                         const std::optional<fs::path>& checkpoint_dir) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const Bank bank = load_bank(dataset_root, cache_dir, needs_for(config));
  const Subsets subsets = select_subsets(bank, config);
  if (checkpoint_dir) fs::create_directories(*checkpoint_dir);

  ResultRow row;
  row.fingerprint = config.fingerprint();
  row.config = config;
  row.provenance.dataset_hash = bank.dataset_hash;

  std::vector<metrics::MetricsReport> reports;
  for (int k = 0; k < config.seeds; ++k) {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
    row.provenance.seeds.push_back(seed);
    std::optional<fs::path> checkpoint;
    if (checkpoint_dir)
      checkpoint = *checkpoint_dir / ("seed" + std::to_string(seed));
    try {
      SingleRun run = run_single(config, bank, subsets, seed, checkpoint);
      reports.push_back(run.report);
      row.seed_train_loss.push_back(std::move(run.train_loss));
    } catch (const std::exception& e) {
      row.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  row.complete = row.failures.empty() && !reports.empty();
  if (!reports.empty())
    row.metrics = metrics::aggregate_runs(reports);
  else
    row.metrics.n_runs = 0;

  row.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  append_result(config.output_dir, row);
  return row;
}

std::filesystem::path append_result(const fs::path& output_dir,
                                    const ResultRow& row) {
  const fs::path rows_dir = output_dir / "rows";
  std::error_code ec;
  fs::create_directories(rows_dir, ec);
  if (ec) throw IOError("cannot create " + rows_dir.string());

  json doc;
  doc["format"] = "hfd-result-v1";
  doc["fingerprint"] = row.fingerprint;
  doc["config"] = row.config.to_kv();
  doc["metrics"] = report_json(row.metrics);
  doc["wall_clock_seconds"] = row.wall_clock_seconds;
  doc["provenance"] = {{"dataset_hash", row.provenance.dataset_hash},
                       {"code_version", row.provenance.code_version},
                       {"seeds", row.provenance.seeds}};
  doc["complete"] = row.complete;
  doc["failures"] = row.failures;
  doc["seed_train_loss"] = row.seed_train_loss;

  static std::atomic<int> counter{0};
  const auto stamp =
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  const std::string name = row.fingerprint + "-" + std::to_string(stamp) +
                           "-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter++) + ".json";
  const fs::path tmp = rows_dir / ("." + name + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw IOError("cannot write " + tmp.string());
    out << doc.dump(2) << "\n";
  }
  const fs::path final_path = rows_dir / name;
  fs::rename(tmp, final_path, ec);
  if (ec) throw IOError("cannot finalize " + final_path.string());
  return final_path;
}

std::vector<ResultRow> load_results(const fs::path& output_dir) {
  const fs::path rows_dir = output_dir / "rows";
  if (!fs::exists(rows_dir))
    throw IOError("no results under " + output_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(rows_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<ResultRow> rows;
  for (const auto& file : files) {
    std::ifstream in(file);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw SchemaError(file.string() + ": " + e.what());
    }
    if (doc.value("format", "") != std::string("hfd-result-v1"))
      throw SchemaError(file.string() + ": not a result row");
    ResultRow row;
    row.fingerprint = doc.at("fingerprint").get<std::string>();
    row.config = ExperimentConfig::from_kv(
        doc.at("config").get<std::map<std::string, std::string>>());
    row.metrics = report_from_json(doc.at("metrics"));
    row.wall_clock_seconds = doc.at("wall_clock_seconds").get<double>();
    row.provenance.dataset_hash =
        doc.at("provenance").at("dataset_hash").get<std::string>();
    row.provenance.code_version =
        doc.at("provenance").at("code_version").get<std::string>();
    row.provenance.seeds = doc.at("provenance")
                               .at("seeds")
                               .get<std::vector<std::uint64_t>>();
    row.complete = doc.at("complete").get<bool>();
    row.failures = doc.at("failures").get<std::vector<std::string>>();
    row.seed_train_loss =
        doc.at("seed_train_loss").get<std::vector<std::vector<double>>>();
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

ExperimentConfig grid_config(ModelId model, const ModalitySet& modalities,
                             const LossHeadSet& losses) {
  ExperimentConfig config;
  config.model = model;
  config.modalities = modalities;
  config.loss_heads = losses;
  return config;
}

const ModalitySet kV = {Modality::V};
const ModalitySet kFT = {Modality::FT};
const ModalitySet kG = {Modality::G};
const ModalitySet kVFT = {Modality::V, Modality::FT};
const ModalitySet kVG = {Modality::V, Modality::G};
const ModalitySet kVFTG = {Modality::V, Modality::FT, Modality::G};
const LossHeadSet kCls = {LossHead::CLS};
const LossHeadSet kClsSegH = {LossHead::CLS, LossHead::SEG_H};
const LossHeadSet kAllHeads = {LossHead::CLS, LossHead::SEG_H, LossHead::SEG_R};

}  // namespace

std::vector<TableSpec> table_grid(int table_id) {
  std::vector<TableSpec> grid;
  switch (table_id) {
    case 3:
      // Printed row ids skip 11; rows 7 and 12 repeat one configuration.
      grid = {
          {"1", "single modality", grid_config(ModelId::I3D_A, kV, kCls)},
          {"2", "single modality", grid_config(ModelId::I3D_A, kFT, kCls)},
          {"3", "single modality", grid_config(ModelId::I3D_A, kG, kCls)},
          {"4", "fusion variants", grid_config(ModelId::I3D_A, kVFTG, kCls)},
          {"5", "fusion variants", grid_config(ModelId::I3D_B, kVFTG, kCls)},
          {"6", "fusion variants", grid_config(ModelId::I3D_C, kVFTG, kCls)},
          {"7", "fusion variants", grid_config(ModelId::I3D_D, kVFTG, kCls)},
          {"8", "modality ablation", grid_config(ModelId::I3D_D, kV, kCls)},
          {"9", "modality ablation", grid_config(ModelId::I3D_D, kVFT, kCls)},
          {"10", "modality ablation", grid_config(ModelId::I3D_D, kVG, kCls)},
          {"12", "modality ablation", grid_config(ModelId::I3D_D, kVFTG, kCls)},
          {"13", "video multitask", grid_config(ModelId::MSTCN_A, kV, kCls)},
          {"14", "video multitask", grid_config(ModelId::MSTCN_A, kV, kClsSegH)},
          {"15", "video multitask", grid_config(ModelId::MSTCN_B, kV, kCls)},
          {"16", "video multitask", grid_config(ModelId::MSTCN_B, kV, kClsSegH)},
          {"17", "video multitask", grid_config(ModelId::MSTCN_B, kV, kAllHeads)},
          {"18", "multimodal multitask",
           grid_config(ModelId::MSTCN_A, kVFT, kClsSegH)},
          {"19", "multimodal multitask",
           grid_config(ModelId::MSTCN_A, kVG, kClsSegH)},
          {"20", "multimodal multitask",
           grid_config(ModelId::MSTCN_A, kVFTG, kClsSegH)},
          {"21", "multimodal multitask",
           grid_config(ModelId::MSTCN_B, kVFT, kClsSegH)},
          {"22", "multimodal multitask",
           grid_config(ModelId::MSTCN_B, kVG, kClsSegH)},
          {"23", "multimodal multitask",
           grid_config(ModelId::MSTCN_B, kVFTG, kClsSegH)},
          {"24", "multimodal multitask",
           grid_config(ModelId::MSTCN_B, kVFTG, kAllHeads)},
      };
      break;
    case 4:
      grid = {
          {"correlation", "baseline",
           grid_config(ModelId::CORRELATION, kV, kCls)},
          {"mstcn-a", "video", grid_config(ModelId::MSTCN_A, kV, kClsSegH)},
          {"mstcn-b", "video", grid_config(ModelId::MSTCN_B, kV, kAllHeads)},
          {"mstcn-a", "video+ft+gripper",
           grid_config(ModelId::MSTCN_A, kVFTG, kClsSegH)},
          {"mstcn-b", "video+ft+gripper",
           grid_config(ModelId::MSTCN_B, kVFTG, kAllHeads)},
          {"mstcn-a", "video+ft+gripper, human seg focus",
           grid_config(ModelId::MSTCN_A, kVFTG, kClsSegH)},
          {"mstcn-b", "video+ft+gripper, human seg focus",
           grid_config(ModelId::MSTCN_B, kVFTG, kClsSegH)},
      };
      break;
    case 5: {
      const std::pair<ModelId, LossHeadSet> rows[] = {
          {ModelId::I3D_D, kCls},
          {ModelId::MSTCN_A, kClsSegH},
          {ModelId::MSTCN_B, kClsSegH},
      };
      const std::pair<std::string, d::RobotPlatform> platforms[] = {
          {"t", d::RobotPlatform::HSR}, {"k", d::RobotPlatform::KINOVA_GEN3}};
      for (const auto& [model, losses] : rows)
        for (const auto& [train_tag, train_platform] : platforms)
          for (const auto& [eval_tag, eval_platform] : platforms) {
            ExperimentConfig config = grid_config(model, kVFTG, losses);
            config.train_platform = train_platform;
            config.eval_platform = eval_platform;
            grid.push_back({model_id_name(model),
                            train_tag + "_to_" + eval_tag, config});
          }
      break;
    }
    case 6: {
      const std::pair<ModelId, LossHeadSet> rows[] = {
          {ModelId::I3D_D, kCls},
          {ModelId::MSTCN_A, kClsSegH},
          {ModelId::MSTCN_B, kClsSegH},
      };
      for (const auto& [model, losses] : rows)
        for (const auto task : {d::Task::R2H, d::Task::H2R}) {
          ExperimentConfig config = grid_config(model, kVFTG, losses);
          config.task_filter = task;
          grid.push_back({model_id_name(model), d::label_name(task), config});
        }
      break;
    }
    default:
      throw UnsupportedTable("no table " + std::to_string(table_id) +
                             "; expected 3, 4, 5 or 6");
  }
  return grid;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

// mean/std cell pair; empty strings for failed rows.
struct Cell {
  std::string mean, std;
};

Cell acc_cell(const ResultRow& row) {
  if (row.metrics.n_runs == 0) return {};
  const double sd =
      row.metrics.stddev ? row.metrics.stddev->outcome_accuracy : 0.0;
  return {pct(row.metrics.outcome_accuracy), pct(sd)};
}

}  // namespace

std::filesystem::path reproduce_table(int table_id,
                                      const fs::path& dataset_root,
                                      const fs::path& cache_dir,
                                      const fs::path& out_dir,
                                      const ReproduceOptions& options) {
  const std::vector<TableSpec> grid = table_grid(table_id);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IOError("cannot create " + out_dir.string());

  std::vector<ResultRow> rows;
  for (const TableSpec& spec : grid) {
    auto kv = spec.config.to_kv();
    for (const auto& [key, value] : options.overrides) kv[key] = value;
    ExperimentConfig config = ExperimentConfig::from_kv(kv);
    config.seeds = options.seeds;
    config.output_dir = out_dir;
    try {
      rows.push_back(run_experiment(config, dataset_root, cache_dir));
    } catch (const std::exception& e) {
      ResultRow failed;
      failed.fingerprint = config.fingerprint();
      failed.config = config;
      failed.complete = false;
      failed.metrics.n_runs = 0;
      failed.failures.push_back(e.what());
      rows.push_back(std::move(failed));
    }
  }

  const fs::path csv_path =
      out_dir / ("table" + std::to_string(table_id) + ".csv");
  std::ofstream out(csv_path);
  if (!out) throw IOError("cannot write " + csv_path.string());

  if (table_id == 3) {
    out << "id,model,v,ft,g,cls,seg_h,seg_r,accuracy,accuracy_std\n";
    for (size_t i = 0; i < grid.size(); ++i) {
      const auto& config = rows[i].config;
      const Cell cell = acc_cell(rows[i]);
      out << grid[i].row_id << "," << model_id_name(config.model) << ","
          << config.modalities.count(Modality::V) << ","
          << config.modalities.count(Modality::FT) << ","
          << config.modalities.count(Modality::G) << ","
          << config.loss_heads.count(LossHead::CLS) << ","
          << config.loss_heads.count(LossHead::SEG_H) << ","
          << config.loss_heads.count(LossHead::SEG_R) << "," << cell.mean
          << "," << cell.std << "\n";
    }
  } else if (table_id == 4) {
    out << "section,model,f1_10,f1_10_std,f1_25,f1_25_std,f1_50,f1_50_std,"
           "frame_acc,frame_acc_std\n";
    for (size_t i = 0; i < grid.size(); ++i) {
      const ResultRow& row = rows[i];
      out << "\"" << grid[i].section << "\"," << grid[i].row_id;
      const bool ok = row.metrics.n_runs > 0;
      for (const double thr : kF1Thresholds) {
        const int key = static_cast<int>(thr);
        const double sd = row.metrics.stddev
                              ? row.metrics.stddev->f1_at.at(key) : 0.0;
        out << "," << (ok ? pct(row.metrics.f1_at.at(key)) : "")
            << "," << (ok ? pct(sd) : "");
      }
      const double fsd =
          row.metrics.stddev ? row.metrics.stddev->frame_accuracy : 0.0;
      out << "," << (ok ? pct(row.metrics.frame_accuracy) : "") << ","
          << (ok ? pct(fsd) : "") << "\n";
    }
  } else {
    // Wide form: one output row per model, one mean/std pair per cell.
    std::vector<std::string> cells, models;
    for (const auto& spec : grid) {
      if (std::find(cells.begin(), cells.end(), spec.section) == cells.end())
        cells.push_back(spec.section);
      if (std::find(models.begin(), models.end(), spec.row_id) == models.end())
        models.push_back(spec.row_id);
    }
    out << "model";
    for (const auto& cell : cells) out << "," << cell << "," << cell << "_std";
    out << "\n";
    for (const auto& model : models) {
      out << model;
      for (const auto& cell_name : cells) {
        Cell cell;
        for (size_t i = 0; i < grid.size(); ++i)
          if (grid[i].row_id == model && grid[i].section == cell_name)
            cell = acc_cell(rows[i]);
        out << "," << cell.mean << "," << cell.std;
      }
      out << "\n";
    }
  }
  return csv_path;
}

namespace {

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868",
                          "#c44e52", "#8172b3", "#937860"};

std::string svg_open(int width, int height) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out.str();
}

}  // namespace

std::filesystem::path render_report(const fs::path& results_dir,
                                    const fs::path& out_dir) {
  const std::vector<ResultRow> rows = load_results(results_dir);
  if (rows.empty()) throw EmptyList("no result rows to report");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IOError("cannot create " + out_dir.string());

  const fs::path csv_path = out_dir / "report.csv";
  {
    std::ofstream out(csv_path);
    if (!out) throw IOError("cannot write " + csv_path.string());
    out << "fingerprint,model,modalities,loss_heads,train_platform,"
           "eval_platform,task,seeds,complete,outcome_acc,outcome_acc_std,"
           "frame_acc,frame_acc_std,f1_10,f1_25,f1_50,wall_clock_s\n";
    for (const ResultRow& row : rows) {
      const auto& c = row.config;
      const auto& m = row.metrics;
      out << row.fingerprint << "," << model_id_name(c.model) << ",\""
          << modalities_name(c.modalities) << "\",\""
          << loss_heads_name(c.loss_heads) << "\","
          << (c.train_platform ? d::label_name(*c.train_platform) : "") << ","
          << (c.eval_platform ? d::label_name(*c.eval_platform) : "") << ","
          << (c.task_filter ? d::label_name(*c.task_filter) : "") << ","
          << c.seeds << "," << (row.complete ? 1 : 0) << ","
          << pct(m.outcome_accuracy) << ","
          << pct(m.stddev ? m.stddev->outcome_accuracy : 0.0) << ","
          << pct(m.frame_accuracy) << ","
          << pct(m.stddev ? m.stddev->frame_accuracy : 0.0);
      for (const double thr : kF1Thresholds) {
        const int key = static_cast<int>(thr);
        out << "," << (m.f1_at.count(key) ? pct(m.f1_at.at(key)) : "");
      }
      out << "," << pct(row.wall_clock_seconds) << "\n";
    }
  }

  // Per-epoch training curves, one polyline per (row, seed).
  {
    const int width = 720, height = 420, pad = 40;
    double lo = 0.0, hi = 1e-9;
    size_t longest = 2;
    for (const auto& row : rows)
      for (const auto& curve : row.seed_train_loss)
        for (size_t e = 0; e < curve.size(); ++e) {
          hi = std::max(hi, curve[e]);
          longest = std::max(longest, curve.size());
        }
    std::ofstream out(out_dir / "loss_curves.svg");
    out << svg_open(width, height);
    out << "<text x=\"" << pad << "\" y=\"20\" font-size=\"13\">training "
           "loss per epoch</text>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\""
        << width - pad << "\" y2=\"" << height - pad
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad
        << "\" y2=\"" << height - pad << "\" stroke=\"black\"/>\n";
    out << "<text x=\"4\" y=\"" << pad << "\" font-size=\"10\">" << pct(hi)
        << "</text>\n<text x=\"4\" y=\"" << height - pad
        << "\" font-size=\"10\">" << pct(lo) << "</text>\n";
    int series = 0;
    for (const auto& row : rows)
      for (const auto& curve : row.seed_train_loss) {
        if (curve.size() < 2) continue;
        out << "<polyline fill=\"none\" stroke=\""
            << kPalette[series++ % 6] << "\" points=\"";
        for (size_t e = 0; e < curve.size(); ++e) {
          const double x =
              pad + (width - 2.0 * pad) * static_cast<double>(e) /
                        static_cast<double>(longest - 1);
          const double y =
              height - pad -
              (height - 2.0 * pad) * (curve[e] - lo) / (hi - lo);
          out << x << "," << y << " ";
        }
        out << "\"/>\n";
      }
    out << "</svg>\n";
  }

  // Outcome accuracy bars, one per result row.
  {
    const int bar_w = 34, gap = 14, pad = 40, height = 300;
    const int width =
        pad * 2 + static_cast<int>(rows.size()) * (bar_w + gap);
    std::ofstream out(out_dir / "accuracy_bars.svg");
    out << svg_open(std::max(width, 240), height);
    out << "<text x=\"" << pad
        << "\" y=\"20\" font-size=\"13\">outcome accuracy (%)</text>\n";
    int i = 0;
    for (const ResultRow& row : rows) {
      const double value = row.metrics.outcome_accuracy;
      const double h = (height - 2.0 * pad) * value / 100.0;
      const double x = pad + i * (bar_w + gap);
      out << "<rect x=\"" << x << "\" y=\"" << height - pad - h
          << "\" width=\"" << bar_w << "\" height=\"" << h << "\" fill=\""
          << kPalette[i % 6] << "\"/>\n";
      out << "<text x=\"" << x << "\" y=\"" << height - pad - h - 4
          << "\" font-size=\"10\">" << pct(value) << "</text>\n";
      out << "<text x=\"" << x << "\" y=\"" << height - pad + 12
          << "\" font-size=\"9\">" << model_id_name(row.config.model)
          << "</text>\n";
      ++i;
    }
    out << "</svg>\n";
  }
  return csv_path;
}

}  // namespace hfd::exp
