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

#include "hfd/synth/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "hfd/data/alignment.hpp"
#include "hfd/data/normalization.hpp"
#include "hfd/data/splits.hpp"
#include "hfd/errors.hpp"
#include "hfd/io/csv.hpp"

namespace hfd::synth {

namespace d = data;
namespace f = features;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kImageSize = 32;
constexpr int kLatentDim = 16;
constexpr std::uint64_t kSharedFeatureSeed = 77;

struct PhasePlan {
  std::array<int, d::kNumRobotActionsFull> start;  // first frame per phase
  int total = 0;

  int begin(d::RobotActionFull a) const {
    return start[static_cast<size_t>(a)];
  }
  int end(d::RobotActionFull a) const {  // one past the last frame
    const auto i = static_cast<size_t>(a);
    return i + 1 < start.size() ? start[i + 1] : total;
  }
};

PhasePlan plan_phases(const ScenarioScript& script) {
  PhasePlan plan;
  int at = 0;
  for (int p = 0; p < d::kNumRobotActionsFull; ++p) {
    if (script.phase_frames[static_cast<size_t>(p)] < 1)
      throw ScriptError("phase durations must be at least one frame");
    plan.start[static_cast<size_t>(p)] = at;
    at += script.phase_frames[static_cast<size_t>(p)];
  }
  plan.total = at;
  return plan;
}

void check_script(const ScenarioScript& script) {
  if (script.noise < 0.0) throw ScriptError("noise level must be >= 0");
  if (script.human_lag < 0) throw ScriptError("human lag must be >= 0");
  if (script.force_spike < 0.0 || script.sustained_pull < 0.0 ||
      script.drop_spike < 0.0)
    throw ScriptError("signature amplitudes must be >= 0");
  if (script.task == d::Task::H2R && script.outcome == d::OutcomeLabel::NO_GRASP)
    throw ScriptError("a no-grasp outcome cannot occur in an H2R handover");
  if (script.task == d::Task::R2H &&
      script.outcome == d::OutcomeLabel::NO_RELEASE)
    throw ScriptError("a no-release outcome cannot occur in an R2H handover");
}

// Human mirrors the robot phases human_lag frames late; failure modes
// override the tail of the timeline.
std::vector<d::HumanAction> human_timeline(const ScenarioScript& script,
                                           const PhasePlan& plan) {
  std::vector<d::HumanAction> human(static_cast<size_t>(plan.total));
  const auto phase_at = [&](int t) {
    int p = 0;
    while (p + 1 < d::kNumRobotActionsFull &&
           t >= plan.start[static_cast<size_t>(p + 1)])
      ++p;
    return p;
  };
  for (int t = 0; t < plan.total; ++t)
    human[static_cast<size_t>(t)] =
        static_cast<d::HumanAction>(phase_at(std::max(0, t - script.human_lag)));

  const int transfer_mid = plan.begin(d::RobotActionFull::TRANSFER) +
                           script.phase_frames[2] / 2;
  switch (script.outcome) {
    case d::OutcomeLabel::SUCCESS:
      break;
    case d::OutcomeLabel::NO_APPROACH:
      std::fill(human.begin(), human.end(), d::HumanAction::IDLE);
      break;
    case d::OutcomeLabel::NO_GRASP:
      // The human hovers without taking the object.
      for (auto& h : human)
        if (h == d::HumanAction::TRANSFER) h = d::HumanAction::APPROACH;
      break;
    case d::OutcomeLabel::DROP:
      for (int t = transfer_mid; t < plan.total; ++t)
        human[static_cast<size_t>(t)] = d::HumanAction::DROPPED;
      break;
    case d::OutcomeLabel::NO_RELEASE:
      for (int t = plan.begin(d::RobotActionFull::RETRACT) + script.human_lag;
           t < plan.total; ++t)
        human[static_cast<size_t>(t)] = d::HumanAction::NOT_RELEASED;
      break;
  }
  return human;
}

// Whether the gripper toggles mid-transfer for this scenario.
bool gripper_switches(const ScenarioScript& script) {
  if (script.outcome == d::OutcomeLabel::NO_APPROACH) return false;
  if (script.outcome == d::OutcomeLabel::NO_GRASP) return false;
  return true;  // release (R2H) or grasp (H2R) happens
}

cv::Mat render_frame(d::HumanAction action, cv::RNG& rng) {
  cv::Mat img(kImageSize, kImageSize, CV_8UC3);
  rng.fill(img, cv::RNG::UNIFORM, 100, 140);
  const int x = 2 + 3 * static_cast<int>(action);
  cv::rectangle(img, cv::Rect(x, 13, 6, 6), cv::Scalar(250, 250, 250),
                cv::FILLED);
  return img;
}

// Shared class geometry: per-human-action latent centers and the fixed
// projection into the backbone width, identical for every generated trial.
struct FeatureSpace {
  Eigen::MatrixXd centers;     // kLatentDim x kNumHumanActions
  Eigen::MatrixXd projection;  // kBackboneWidth x kLatentDim
};

const FeatureSpace& feature_space() {
  static const FeatureSpace space = [] {
    std::mt19937_64 rng(kSharedFeatureSeed);
    std::normal_distribution<double> unit(0.0, 1.0);
    FeatureSpace s;
    s.centers.resize(kLatentDim, d::kNumHumanActions);
    for (Eigen::Index i = 0; i < s.centers.size(); ++i)
      s.centers.data()[i] = unit(rng);
    s.projection.resize(f::kBackboneWidth, kLatentDim);
    for (Eigen::Index i = 0; i < s.projection.size(); ++i)
      s.projection.data()[i] = 0.25 * unit(rng);
    return s;
  }();
  return space;
}

}  // namespace

SyntheticTrial generate_trial(const ScenarioScript& script) {
  check_script(script);
  const PhasePlan plan = plan_phases(script);
  const int t_frames = plan.total;

  std::mt19937_64 rng(script.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sigma = script.noise * script.force_spike;

  SyntheticTrial out;
  d::TrialRecord& rec = out.record;
  rec.trial_id = script.trial_id;
  rec.platform = script.platform;
  rec.task = script.task;
  rec.participant_id = script.participant_id;
  rec.object_class = script.object_class;

  // Labels.
  d::AnnotationTrack track;
  track.outcome = script.outcome;
  track.human_actions = human_timeline(script, plan);
  for (int p = 0; p < d::kNumRobotActionsFull; ++p)
    track.robot_actions.insert(track.robot_actions.end(),
                               script.phase_frames[static_cast<size_t>(p)],
                               static_cast<d::RobotActionFull>(p));
  rec.annotations = track;

  // Video at 15 fps; pixels encode the human action as a block position.
  cv::RNG cv_rng(static_cast<std::uint64_t>(script.seed));
  for (int t = 0; t < t_frames; ++t) {
    rec.video.timestamps.push_back(t / kVideoFps);
    rec.video.frames.push_back(
        render_frame(track.human_actions[static_cast<size_t>(t)], cv_rng));
  }
  // Scenario time windows, in seconds.
  const double transfer_begin =
      plan.begin(d::RobotActionFull::TRANSFER) / kVideoFps;
  const double transfer_end = plan.end(d::RobotActionFull::TRANSFER) / kVideoFps;
  const double retract_begin =
      plan.begin(d::RobotActionFull::RETRACT) / kVideoFps;
  const double retract_end = plan.end(d::RobotActionFull::RETRACT) / kVideoFps;
  const double switch_time =
      (plan.begin(d::RobotActionFull::TRANSFER) + script.phase_frames[2] / 2) /
      kVideoFps;

  // F-T at 60 Hz: noise plus the scripted contact signature on fz and, for
  // a no-release scenario, a sustained pull on fx while the robot retracts.
  // 60 Hz is exactly 4 samples per frame, so frame times hit samples exactly.
  const int n_ft = 4 * (t_frames - 1) + 1;
  rec.ft.wrench = Eigen::MatrixXd::Zero(n_ft, 6);
  for (int i = 0; i < n_ft; ++i) {
    const double ts = i / kFtHz;
    rec.ft.timestamps.push_back(ts);
    for (int c = 0; c < 6; ++c) rec.ft.wrench(i, c) = sigma * unit(rng);
    const bool in_transfer = ts >= transfer_begin && ts < transfer_end;
    const bool in_retract = ts >= retract_begin && ts < retract_end;
    switch (script.outcome) {
      case d::OutcomeLabel::SUCCESS:
        if (in_transfer) rec.ft.wrench(i, 2) += script.force_spike;
        break;
      case d::OutcomeLabel::DROP:
        if (in_transfer && ts < switch_time)
          rec.ft.wrench(i, 2) += script.drop_spike;
        break;
      case d::OutcomeLabel::NO_RELEASE:
        if (in_transfer) rec.ft.wrench(i, 2) += script.force_spike;
        if (in_retract) rec.ft.wrench(i, 0) += script.sustained_pull;
        break;
      default:
        break;  // no contact ever happens
    }
  }

  // Joints at 50 Hz: one arm joint moving during approach/retract, plus the
  // raw gripper position that discretizes to closed/open.
  const auto range =
      d::GripperCalibration::defaults().ranges.at(script.platform);
  const double start_raw = script.task == d::Task::R2H ? range.closed_position
                                                       : range.open_position;
  const double after_raw = script.task == d::Task::R2H ? range.open_position
                                                       : range.closed_position;
  const bool switches = gripper_switches(script);

  const double approach_begin =
      plan.begin(d::RobotActionFull::APPROACH) / kVideoFps;
  const int n_j = (t_frames - 1) * 10 / 3 + 1;  // floor(duration * 50) + 1
  rec.joints.joint_names = {"arm_lift"};
  rec.joints.positions.resize(n_j, 1);
  rec.joints.velocities.resize(n_j, 1);
  rec.joints.efforts.resize(n_j, 1);
  rec.joints.gripper_position.resize(n_j);
  double pos = 0.0;
  for (int i = 0; i < n_j; ++i) {
    const double ts = i / kJointHz;
    rec.joints.timestamps.push_back(ts);
    double vel = 0.01 * unit(rng);
    if (ts >= approach_begin && ts < transfer_begin) vel += 0.4;
    if (ts >= retract_begin && ts < retract_end) vel -= 0.4;
    pos += vel / kJointHz;
    rec.joints.positions(i, 0) = pos;
    rec.joints.velocities(i, 0) = vel;
    rec.joints.efforts(i, 0) = 0.1 * vel + 0.01 * unit(rng);
    rec.joints.gripper_position(i) =
        (switches && ts >= switch_time) ? after_raw : start_raw;
  }

  out.aligned = d::align_to_frames(rec);

  // Pseudo-backbone: latent class clusters pushed through the shared fixed
  // projection; F-T stays unnormalized here (pools differ per caller).
  const FeatureSpace& space = feature_space();
  f::FeatureSequence& seq = out.features;
  seq.meta = {rec.trial_id, rec.platform, rec.task, rec.participant_id,
              rec.object_class};
  seq.backbone.resize(t_frames, f::kBackboneWidth);
  Eigen::VectorXd latent(kLatentDim);
  for (int t = 0; t < t_frames; ++t) {
    const int action = static_cast<int>(track.human_actions[static_cast<size_t>(t)]);
    for (int k = 0; k < kLatentDim; ++k)
      latent(k) = space.centers(k, action) + 0.3 * unit(rng);
    seq.backbone.row(t) = (space.projection * latent).transpose();
  }
  seq.ft = out.aligned.ft;
  seq.gripper = out.aligned.gripper;
  seq.labels = track;
  return out;
}

std::vector<std::pair<d::Task, d::OutcomeLabel>> suite_cells() {
  using O = d::OutcomeLabel;
  return {{d::Task::R2H, O::SUCCESS}, {d::Task::R2H, O::NO_APPROACH},
          {d::Task::R2H, O::NO_GRASP}, {d::Task::R2H, O::DROP},
          {d::Task::H2R, O::SUCCESS}, {d::Task::H2R, O::NO_APPROACH},
          {d::Task::H2R, O::DROP},    {d::Task::H2R, O::NO_RELEASE}};
}

namespace {

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

// Run-length encode a label track into [[start,end,label],...] JSON rows.
template <typename Label>
json runs_json(const std::vector<Label>& track) {
  json runs = json::array();
  size_t start = 0;
  for (size_t i = 1; i <= track.size(); ++i) {
    if (i == track.size() || track[i] != track[start]) {
      runs.push_back({start, i - 1, d::label_name(track[start])});
      start = i;
    }
  }
  return runs;
}

void write_trial_dir(const fs::path& dir, const d::TrialRecord& rec) {
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::vector<double>> ts_rows;
  for (size_t t = 0; t < rec.video.timestamps.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", t);
    if (!cv::imwrite((dir / "frames" / name).string(), rec.video.frames[t]))
      throw IOError("cannot write frame " + std::string(name));
    ts_rows.push_back({rec.video.timestamps[t]});
  }
  io::write_csv(dir / "frame_timestamps.csv", {"t"}, ts_rows);

  std::vector<std::vector<double>> ft_rows;
  for (Eigen::Index i = 0; i < rec.ft.wrench.rows(); ++i) {
    std::vector<double> row{rec.ft.timestamps[static_cast<size_t>(i)]};
    for (int c = 0; c < 6; ++c) row.push_back(rec.ft.wrench(i, c));
    ft_rows.push_back(std::move(row));
  }
  io::write_csv(dir / "ft.csv", {"t", "fx", "fy", "fz", "tx", "ty", "tz"},
                ft_rows);

  std::vector<std::vector<double>> joint_rows;
  for (Eigen::Index i = 0; i < rec.joints.positions.rows(); ++i)
    joint_rows.push_back({rec.joints.timestamps[static_cast<size_t>(i)],
                          rec.joints.positions(i, 0),
                          rec.joints.velocities(i, 0),
                          rec.joints.efforts(i, 0),
                          rec.joints.gripper_position(i)});
  io::write_csv(dir / "joints.csv",
                {"t", "arm_lift_pos", "arm_lift_vel", "arm_lift_eff",
                 "gripper_pos"},
                joint_rows);

  json ann;
  ann["task"] = d::label_name(rec.task);
  ann["robot"] = d::label_name(rec.platform);
  ann["participant_id"] = rec.participant_id;
  ann["object_class"] = rec.object_class;
  ann["human_actions"] = runs_json(rec.annotations->human_actions);
  ann["robot_actions"] = runs_json(rec.annotations->robot_actions);
  ann["outcome"] = d::label_name(rec.annotations->outcome);
  std::ofstream out(dir / "annotations.json");
  if (!out) throw IOError("cannot write annotations in " + dir.string());
  out << ann.dump(2) << "\n";
}

ScenarioScript suite_script(const SuiteOptions& options, int cell, int index,
                            int global) {
  const auto [task, outcome] = suite_cells()[static_cast<size_t>(cell)];
  ScenarioScript script;
  script.task = task;
  script.outcome = outcome;
  // Period 4 against the period-6 participant cycle, so every participant
  // works with both platforms once the suite is large enough.
  script.platform = (global % 4 < 2) ? d::RobotPlatform::HSR
                                     : d::RobotPlatform::KINOVA_GEN3;
  script.noise = options.noise;
  script.seed = options.seed * 0x9E3779B97F4A7C15ULL +
                static_cast<std::uint64_t>(cell) * 8191u +
                static_cast<std::uint64_t>(index) * 131u + 1u;
  std::mt19937_64 jitter(script.seed);
  std::uniform_int_distribution<int> delta(-3, 3);
  for (auto& frames : script.phase_frames)
    frames = std::max(8, frames + delta(jitter));
  script.trial_id = "synth_" + d::label_name(task) + "_" +
                    d::label_name(outcome) + "_" + two_digits(index);
  script.participant_id =
      "sp" + two_digits(global % std::max(1, options.participants));
  script.object_class = (index % 2 == 0) ? "cube" : "bottle";
  return script;
}

}  // namespace

SuiteSummary generate_suite(const fs::path& out_dir,
                            const SuiteOptions& options) {
  if (options.per_cell < 1)
    throw ConfigError("per_cell must be at least 1");
  if (options.participants < 3)
    throw ConfigError("need at least 3 participants for train/val/test");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw IOError("cannot create " + out_dir.string() + ": " + ec.message());

  SuiteSummary summary;
  summary.root = out_dir;
  summary.cache_dir = out_dir / ".feature_cache";

  // Pass 1: write trials, pool training-participant F-T for the stats.
  d::SplitSpec spec;
  for (int p = 0; p < options.participants; ++p) {
    const auto set = p < options.participants - 2 ? d::SplitSet::TRAIN
                     : p == options.participants - 2 ? d::SplitSet::VAL
                                                     : d::SplitSet::TEST;
    spec.assign("sp" + two_digits(p), set);
  }
  spec.save_json(out_dir / "splits.json");

  std::vector<Eigen::MatrixXd> train_ft;
  const int cells = static_cast<int>(suite_cells().size());
  int global = 0;
  for (int cell = 0; cell < cells; ++cell) {
    for (int index = 0; index < options.per_cell; ++index, ++global) {
      const ScenarioScript script = suite_script(options, cell, index, global);
      const SyntheticTrial trial = generate_trial(script);
      write_trial_dir(out_dir / script.trial_id, trial.record);
      summary.trial_ids.push_back(script.trial_id);
      if (spec.set_for(script.participant_id) == d::SplitSet::TRAIN)
        train_ft.push_back(trial.aligned.ft);
    }
  }
  summary.ft_stats = d::compute_ft_stats(train_ft);

  json stats_json;
  stats_json["mean"] = std::vector<double>(summary.ft_stats.mean.data(),
                                           summary.ft_stats.mean.data() + 6);
  stats_json["std"] = std::vector<double>(summary.ft_stats.std.data(),
                                          summary.ft_stats.std.data() + 6);
  stats_json["degenerate_channels"] = summary.ft_stats.degenerate_channels;
  std::ofstream stats_out(out_dir / "ft_stats.json");
  if (!stats_out) throw IOError("cannot write ft_stats.json");
  stats_out << stats_json.dump(2) << "\n";

  // Pass 2: regenerate (deterministic) and cache normalized sequences.
  if (options.write_feature_cache) {
    fs::create_directories(summary.cache_dir, ec);
    if (ec) throw IOError("cannot create " + summary.cache_dir.string());
    global = 0;
    for (int cell = 0; cell < cells; ++cell) {
      for (int index = 0; index < options.per_cell; ++index, ++global) {
        const ScenarioScript script =
            suite_script(options, cell, index, global);
        SyntheticTrial trial = generate_trial(script);
        trial.features.ft =
            d::normalize_ft(trial.features.ft, summary.ft_stats);
        f::save_feature_cache(summary.cache_dir, trial.features,
                              kSyntheticFingerprint);
      }
    }
  }
  return summary;
}

}  // namespace hfd::synth
