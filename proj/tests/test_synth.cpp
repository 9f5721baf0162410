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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "hfd/data/alignment.hpp"
#include "hfd/data/dataset.hpp"
#include "hfd/data/normalization.hpp"
#include "hfd/data/splits.hpp"
#include "hfd/errors.hpp"
#include "hfd/features/sequence.hpp"
#include "hfd/models/mstcn.hpp"
#include "hfd/synth/synth.hpp"

namespace d = hfd::data;
namespace f = hfd::features;
namespace m = hfd::models;
namespace s = hfd::synth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("hfd_synth_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

// Frames where g steps from `before` to `after`, reported at the new value.
std::vector<int> transitions(const Eigen::VectorXd& g, double before,
                             double after) {
  std::vector<int> at;
  for (int t = 1; t < g.size(); ++t)
    if (g(t - 1) == before && g(t) == after) at.push_back(t);
  return at;
}

// Half-open frame range [begin, end) of one robot phase.
std::pair<int, int> phase_range(const d::AnnotationTrack& track,
                                d::RobotActionFull phase) {
  int begin = -1, end = -1;
  for (size_t t = 0; t < track.robot_actions.size(); ++t) {
    if (track.robot_actions[t] != phase) continue;
    if (begin < 0) begin = static_cast<int>(t);
    end = static_cast<int>(t) + 1;
  }
  REQUIRE(begin >= 0);
  return {begin, end};
}

double mean_in_range(const Eigen::MatrixXd& ft, int col, int begin, int end) {
  return ft.col(col).segment(begin, end - begin).mean();
}

bool frames_equal(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size() || a.type() != b.type()) return false;
  return cv::countNonZero(cv::Mat(a != b).reshape(1)) == 0;
}

}  // namespace

TEST_CASE("trial generation is bit-identical per seed") {
  s::ScenarioScript script;
  script.seed = 3;
  const s::SyntheticTrial a = s::generate_trial(script);
  const s::SyntheticTrial b = s::generate_trial(script);

  CHECK(max_abs_diff(a.record.ft.wrench, b.record.ft.wrench) == 0.0);
  CHECK(max_abs_diff(a.aligned.ft, b.aligned.ft) == 0.0);
  CHECK(max_abs_diff(a.aligned.gripper, b.aligned.gripper) == 0.0);
  CHECK(max_abs_diff(a.features.backbone, b.features.backbone) == 0.0);
  CHECK(a.aligned.frame_timestamps == b.aligned.frame_timestamps);
  REQUIRE(a.record.annotations.has_value());
  CHECK(a.record.annotations->human_actions == b.record.annotations->human_actions);
  CHECK(a.record.annotations->robot_actions == b.record.annotations->robot_actions);
  REQUIRE(a.record.video.frames.size() == b.record.video.frames.size());
  CHECK(frames_equal(a.record.video.frames.front(), b.record.video.frames.front()));
  CHECK(frames_equal(a.record.video.frames.back(), b.record.video.frames.back()));

  script.seed = 4;
  const s::SyntheticTrial c = s::generate_trial(script);
  CHECK(max_abs_diff(a.record.ft.wrench, c.record.ft.wrench) > 0.0);
  CHECK(max_abs_diff(a.features.backbone, c.features.backbone) > 0.0);
}

TEST_CASE("streams are consistent and pass the dataset validator") {
  int cell = 0;
  for (const auto& [task, outcome] : s::suite_cells()) {
    CAPTURE(cell);
    s::ScenarioScript script;
    script.task = task;
    script.outcome = outcome;
    script.platform = cell % 2 == 0 ? d::RobotPlatform::HSR
                                    : d::RobotPlatform::KINOVA_GEN3;
    script.seed = 100 + static_cast<std::uint64_t>(cell++);
    const s::SyntheticTrial trial = s::generate_trial(script);

    CHECK_NOTHROW(d::validate_trial(trial.record));

    const int t_frames = 12 + 18 + 24 + 18 + 12;
    CHECK(trial.record.frame_count() == t_frames);
    CHECK(trial.aligned.frame_count() == t_frames);
    REQUIRE(trial.aligned.labels.has_value());
    CHECK(trial.aligned.labels->outcome == outcome);

    // The feature sequence is the aligned view plus the pseudo backbone.
    CHECK(max_abs_diff(trial.features.ft, trial.aligned.ft) == 0.0);
    CHECK(max_abs_diff(trial.features.gripper, trial.aligned.gripper) == 0.0);
    REQUIRE(trial.features.labels.has_value());
    CHECK(trial.features.labels->human_actions ==
          trial.aligned.labels->human_actions);
    CHECK(trial.features.backbone.rows() == t_frames);
    CHECK(trial.features.backbone.cols() == f::kBackboneWidth);
    CHECK(trial.features.backbone.allFinite());
    CHECK(trial.features.meta.trial_id == script.trial_id);
    CHECK(trial.features.meta.task == task);
  }
}

TEST_CASE("gripper switches exactly once mid-transfer") {
  SUBCASE("r2h success releases the object") {
    s::ScenarioScript script;
    script.seed = 11;
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto [begin, end] =
        phase_range(*t.record.annotations, d::RobotActionFull::TRANSFER);

    const auto release = transitions(t.aligned.gripper, 0.5, -0.5);
    REQUIRE(release.size() == 1);
    CHECK(release[0] >= begin);
    CHECK(release[0] < end);
    CHECK(transitions(t.aligned.gripper, -0.5, 0.5).empty());
    CHECK(t.aligned.gripper(0) == 0.5);
    CHECK(t.aligned.gripper(t.aligned.gripper.size() - 1) == -0.5);
    // The raw signal jumps between calibration endpoints, never mid-range.
    CHECK((t.aligned.gripper.array() == 0.0).count() == 0);
  }

  SUBCASE("h2r success grasps the object") {
    s::ScenarioScript script;
    script.task = d::Task::H2R;
    script.platform = d::RobotPlatform::KINOVA_GEN3;
    script.seed = 12;
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto [begin, end] =
        phase_range(*t.record.annotations, d::RobotActionFull::TRANSFER);

    const auto grasp = transitions(t.aligned.gripper, -0.5, 0.5);
    REQUIRE(grasp.size() == 1);
    CHECK(grasp[0] >= begin);
    CHECK(grasp[0] < end);
    CHECK(t.aligned.gripper(0) == -0.5);
  }

  SUBCASE("failed handovers keep the gripper still") {
    for (const auto outcome :
         {d::OutcomeLabel::NO_APPROACH, d::OutcomeLabel::NO_GRASP}) {
      s::ScenarioScript script;
      script.outcome = outcome;
      script.seed = 13;
      const s::SyntheticTrial t = s::generate_trial(script);
      CHECK(transitions(t.aligned.gripper, 0.5, -0.5).empty());
      CHECK(transitions(t.aligned.gripper, -0.5, 0.5).empty());
    }
  }
}

TEST_CASE("human timeline mirrors the robot and encodes the failure") {
  s::ScenarioScript script;
  script.seed = 21;

  SUBCASE("success trails the robot by the scripted lag") {
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto& human = t.record.annotations->human_actions;
    const auto [a_begin, a_end] =
        phase_range(*t.record.annotations, d::RobotActionFull::APPROACH);
    (void)a_end;
    CHECK(human[static_cast<size_t>(a_begin)] == d::HumanAction::IDLE);
    CHECK(human[static_cast<size_t>(a_begin + script.human_lag)] ==
          d::HumanAction::APPROACH);
    CHECK(human.back() == d::HumanAction::POST_IDLE);
  }

  SUBCASE("no-approach leaves the human idle with a flat wrench") {
    script.outcome = d::OutcomeLabel::NO_APPROACH;
    const s::SyntheticTrial t = s::generate_trial(script);
    for (const auto h : t.record.annotations->human_actions)
      CHECK(h == d::HumanAction::IDLE);
    CHECK(t.aligned.ft.cwiseAbs().maxCoeff() < 0.5);
  }

  SUBCASE("no-grasp hovers without ever holding the object") {
    script.outcome = d::OutcomeLabel::NO_GRASP;
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto& human = t.record.annotations->human_actions;
    CHECK(std::count(human.begin(), human.end(), d::HumanAction::TRANSFER) == 0);
    CHECK(std::count(human.begin(), human.end(), d::HumanAction::APPROACH) > 0);
  }

  SUBCASE("drop and no-release end in their failure states") {
    script.outcome = d::OutcomeLabel::DROP;
    CHECK(s::generate_trial(script).record.annotations->human_actions.back() ==
          d::HumanAction::DROPPED);

    script.task = d::Task::H2R;
    script.outcome = d::OutcomeLabel::NO_RELEASE;
    CHECK(s::generate_trial(script).record.annotations->human_actions.back() ==
          d::HumanAction::NOT_RELEASED);
  }
}

TEST_CASE("wrench signatures match the scripted amplitudes") {
  s::ScenarioScript script;
  script.seed = 31;
  const auto ranges = [&](const s::SyntheticTrial& t) {
    return std::pair{
        phase_range(*t.record.annotations, d::RobotActionFull::IDLE),
        phase_range(*t.record.annotations, d::RobotActionFull::TRANSFER)};
  };

  SUBCASE("success carries a contact plateau on fz through transfer") {
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto [idle, transfer] = ranges(t);
    const double at_idle =
        mean_in_range(t.aligned.ft, 2, idle.first, idle.second);
    const double at_transfer =
        mean_in_range(t.aligned.ft, 2, transfer.first, transfer.second);
    CHECK(at_transfer - at_idle == doctest::Approx(script.force_spike).epsilon(0.1));
  }

  SUBCASE("drop spikes then cuts to zero") {
    script.outcome = d::OutcomeLabel::DROP;
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto [idle, transfer] = ranges(t);
    (void)idle;
    const int mid = transfer.first + (transfer.second - transfer.first) / 2;
    const double before = mean_in_range(t.aligned.ft, 2, transfer.first, mid);
    const double after = mean_in_range(t.aligned.ft, 2, mid, transfer.second);
    CHECK(before == doctest::Approx(script.drop_spike).epsilon(0.1));
    CHECK(std::abs(after) < 0.1);
  }

  SUBCASE("no-release pulls on fx while the robot retracts") {
    script.task = d::Task::H2R;
    script.outcome = d::OutcomeLabel::NO_RELEASE;
    const s::SyntheticTrial t = s::generate_trial(script);
    const auto [r_begin, r_end] =
        phase_range(*t.record.annotations, d::RobotActionFull::RETRACT);
    const auto [i_begin, i_end] =
        phase_range(*t.record.annotations, d::RobotActionFull::IDLE);
    const double pull = mean_in_range(t.aligned.ft, 0, r_begin, r_end) -
                        mean_in_range(t.aligned.ft, 0, i_begin, i_end);
    CHECK(pull == doctest::Approx(script.sustained_pull).epsilon(0.1));
  }
}

TEST_CASE("inconsistent scripts are rejected") {
  s::ScenarioScript script;

  script.phase_frames[1] = 0;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);
  script.phase_frames[1] = 18;

  script.noise = -0.01;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);
  script.noise = 0.05;

  script.human_lag = -1;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);
  script.human_lag = 2;

  script.sustained_pull = -1.0;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);
  script.sustained_pull = 1.8;

  script.task = d::Task::R2H;
  script.outcome = d::OutcomeLabel::NO_RELEASE;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);

  script.task = d::Task::H2R;
  script.outcome = d::OutcomeLabel::NO_GRASP;
  CHECK_THROWS_AS(s::generate_trial(script), hfd::ScriptError);
}

TEST_CASE("pseudo backbone clusters separate human actions") {
  s::ScenarioScript script;
  script.seed = 41;
  const s::SyntheticTrial a = s::generate_trial(script);
  script.seed = 42;
  const s::SyntheticTrial b = s::generate_trial(script);

  // Nearest class-mean rule fit on one trial labels the other.
  std::map<d::HumanAction, Eigen::VectorXd> sums;
  std::map<d::HumanAction, int> counts;
  const auto& ha = a.record.annotations->human_actions;
  for (size_t t = 0; t < ha.size(); ++t) {
    auto [it, fresh] = sums.try_emplace(
        ha[t], Eigen::VectorXd::Zero(f::kBackboneWidth));
    it->second += a.features.backbone.row(static_cast<Eigen::Index>(t)).transpose();
    counts[ha[t]] += 1;
  }
  for (auto& [action, sum] : sums) sum /= counts[action];

  const auto& hb = b.record.annotations->human_actions;
  int hits = 0;
  for (size_t t = 0; t < hb.size(); ++t) {
    const Eigen::VectorXd row =
        b.features.backbone.row(static_cast<Eigen::Index>(t)).transpose();
    double best = std::numeric_limits<double>::infinity();
    d::HumanAction arg = d::HumanAction::IDLE;
    for (const auto& [action, mean] : sums) {
      const double dist = (row - mean).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = action;
      }
    }
    hits += arg == hb[t] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(hb.size()) >= 0.95);
}

TEST_CASE("suite writes a balanced loadable mini-dataset") {
  TempDir tmp;
  s::SuiteOptions options;
  options.per_cell = 2;
  options.seed = 9;
  const s::SuiteSummary summary = s::generate_suite(tmp.path / "suite", options);

  REQUIRE(summary.trial_ids.size() == 16);
  CHECK(std::set<std::string>(summary.trial_ids.begin(),
                              summary.trial_ids.end()).size() == 16);

  const auto dirs = d::find_trial_dirs(summary.root);
  REQUIRE(dirs.size() == 16);

  std::map<std::pair<d::Task, d::OutcomeLabel>, int> per_cell;
  for (const auto& dir : dirs) {
    const d::TrialRecord rec = d::load_trial(dir);
    CHECK_NOTHROW(d::validate_trial(rec));
    REQUIRE(rec.annotations.has_value());
    per_cell[{rec.task, rec.annotations->outcome}] += 1;
    CHECK(rec.video.frames.size() == rec.video.timestamps.size());

    // CSV doubles round-trip exactly, so realignment is bit-identical and
    // the cached sequence must match it after suite normalization.
    const d::AlignedTrial aligned = d::align_to_frames(rec);
    REQUIRE(f::feature_cache_exists(summary.cache_dir, rec.trial_id));
    const f::FeatureSequence seq = f::load_feature_cache(
        summary.cache_dir, rec.trial_id, s::kSyntheticFingerprint);
    CHECK(max_abs_diff(seq.ft, d::normalize_ft(aligned.ft, summary.ft_stats)) ==
          0.0);
    CHECK(max_abs_diff(seq.gripper, aligned.gripper) == 0.0);
    CHECK(seq.backbone.rows() == aligned.frame_count());
    REQUIRE(seq.labels.has_value());
    CHECK(seq.labels->human_actions == rec.annotations->human_actions);
    CHECK(seq.labels->outcome == rec.annotations->outcome);

    CHECK_THROWS_AS(f::load_feature_cache(summary.cache_dir, rec.trial_id,
                                          "other-backbone"),
                    hfd::SchemaError);
  }
  REQUIRE(per_cell.size() == 8);
  for (const auto& [cell, count] : per_cell) CHECK(count == 2);

  const d::SplitSpec spec =
      d::SplitSpec::from_json_file(summary.root / "splits.json");
  CHECK(spec.assignments().size() == 6);
  CHECK(spec.set_for("sp00") == d::SplitSet::TRAIN);
  CHECK(spec.set_for("sp04") == d::SplitSet::VAL);
  CHECK(spec.set_for("sp05") == d::SplitSet::TEST);

  nlohmann::json stats;
  std::ifstream in(summary.root / "ft_stats.json");
  REQUIRE(in.good());
  in >> stats;
  for (int c = 0; c < 6; ++c) {
    CHECK(stats["mean"][static_cast<size_t>(c)].get<double>() ==
          summary.ft_stats.mean(c));
    CHECK(stats["std"][static_cast<size_t>(c)].get<double>() ==
          summary.ft_stats.std(c));
  }

  SUBCASE("regenerating the suite reproduces the files byte for byte") {
    const s::SuiteSummary again =
        s::generate_suite(tmp.path / "again", options);
    CHECK(again.trial_ids == summary.trial_ids);
    for (const auto& name :
         {fs::path(summary.trial_ids.front()) / "ft.csv",
          fs::path(summary.trial_ids.back()) / "joints.csv"}) {
      std::ifstream f1(summary.root / name, std::ios::binary);
      std::ifstream f2(again.root / name, std::ios::binary);
      const std::string b1((std::istreambuf_iterator<char>(f1)),
                           std::istreambuf_iterator<char>());
      const std::string b2((std::istreambuf_iterator<char>(f2)),
                           std::istreambuf_iterator<char>());
      CHECK(b1.size() > 0);
      CHECK(b1 == b2);
    }
  }
}

TEST_CASE("suite options and output paths are validated") {
  TempDir tmp;
  s::SuiteOptions options;

  options.per_cell = 0;
  CHECK_THROWS_AS(s::generate_suite(tmp.path / "x", options), hfd::ConfigError);

  options.per_cell = 1;
  options.participants = 2;
  CHECK_THROWS_AS(s::generate_suite(tmp.path / "x", options), hfd::ConfigError);

  options.participants = 6;
  std::ofstream(tmp.path / "occupied").put('x');
  CHECK_THROWS_AS(s::generate_suite(tmp.path / "occupied", options),
                  hfd::IOError);
}

TEST_CASE("a two-stage segmenter overfits a small suite") {
  TempDir tmp;
  s::SuiteOptions options;
  options.per_cell = 10;
  options.seed = 7;
  const s::SuiteSummary summary = s::generate_suite(tmp.path / "suite", options);
  REQUIRE(summary.trial_ids.size() == 80);

  std::vector<f::FeatureSequence> train;
  train.reserve(summary.trial_ids.size());
  for (const auto& id : summary.trial_ids)
    train.push_back(f::load_feature_cache(summary.cache_dir, id,
                                          s::kSyntheticFingerprint));

  m::MstcnConfig config;
  config.variant = m::MstcnVariant::B;
  config.layers_per_stage = 6;
  config.channels = 16;
  config.ftg_channels = 8;
  config.head_robot = true;
  config.seed = 5;
  m::MstcnModel model(config);

  m::SegTrainConfig tc;
  tc.max_epochs = 30;
  tc.lr = 1e-3;
  tc.patience = 4;
  tc.seed = 5;
  const m::SegTrainHistory history = m::train_segmenter(model, train, train, tc);
  REQUIRE(!history.train_loss.empty());
  CHECK(history.train_loss.back() < history.train_loss.front());

  int hits = 0;
  for (const auto& seq : train)
    hits += m::predict(model, seq).outcome == seq.labels->outcome ? 1 : 0;
  CHECK(hits == 80);
}
