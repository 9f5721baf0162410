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

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "hfd/data/dataset.hpp"
#include "hfd/errors.hpp"
#include "hfd/io/csv.hpp"

namespace hfd::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_strictly_increasing(const std::vector<double>& ts,
                                 const std::string& what) {
  for (size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw InvariantViolation(what + ": timestamps not strictly increasing at index " +
                               std::to_string(i));
}

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

void load_video(const fs::path& dir, bool load_frames, VideoStream* video) {
  const fs::path frames_dir = dir / "frames";
  const fs::path ts_file = dir / "frame_timestamps.csv";
  const fs::path mp4 = dir / "video.mp4";

  if (fs::exists(frames_dir) && fs::exists(ts_file)) {
    io::CsvTable table = io::read_csv(ts_file);
    int t_col = table.column("t");
    if (t_col < 0) throw SchemaError(ts_file.string() + ": missing column 't'");
    video->timestamps = table.column_values(t_col);
    if (load_frames) {
      video->frames.reserve(video->timestamps.size());
      for (size_t i = 0; i < video->timestamps.size(); ++i) {
        const fs::path f = frames_dir / frame_file_name(static_cast<int>(i));
        cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
        if (img.empty()) throw MissingStream("cannot read frame: " + f.string());
        video->frames.push_back(img);
      }
    }
    return;
  }

  if (fs::exists(mp4)) {
    cv::VideoCapture cap(mp4.string());
    if (!cap.isOpened()) throw SchemaError("cannot open video: " + mp4.string());
    double fps = cap.get(cv::CAP_PROP_FPS);
    if (fps <= 0) fps = 30.0;
    int n = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_COUNT));
    if (load_frames || n <= 0) {
      video->timestamps.clear();
      cv::Mat frame;
      int i = 0;
      while (cap.read(frame)) {
        video->timestamps.push_back(i / fps);
        if (load_frames) video->frames.push_back(frame.clone());
        ++i;
      }
    } else {
      for (int i = 0; i < n; ++i) video->timestamps.push_back(i / fps);
    }
    if (video->timestamps.empty())
      throw SchemaError("video has no frames: " + mp4.string());
    return;
  }

  throw MissingStream("no video stream in " + dir.string() +
                      " (expected frames/+frame_timestamps.csv or video.mp4)");
}

void load_ft(const fs::path& dir, ForceTorqueStream* ft) {
  const fs::path file = dir / "ft.csv";
  if (!fs::exists(file)) throw MissingStream("missing ft.csv in " + dir.string());
  io::CsvTable table = io::read_csv(file);
  const std::vector<std::string> expected = {"t", "fx", "fy", "fz", "tx", "ty", "tz"};
  if (table.header != expected)
    throw SchemaError(file.string() + ": expected header t,fx,fy,fz,tx,ty,tz");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ft->timestamps.reserve(table.rows.size());
  ft->wrench.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<size_t>(i)];
    ft->timestamps.push_back(row[0]);
    for (int c = 0; c < 6; ++c) ft->wrench(i, c) = row[static_cast<size_t>(c + 1)];
  }
}

void load_joints(const fs::path& dir, JointStateStream* joints) {
  const fs::path file = dir / "joints.csv";
  if (!fs::exists(file)) throw MissingStream("missing joints.csv in " + dir.string());
  io::CsvTable table = io::read_csv(file);
  if (table.header.empty() || table.header[0] != "t")
    throw SchemaError(file.string() + ": first column must be 't'");

  int gripper_col = table.column("gripper_pos");
  if (gripper_col < 0)
    throw SchemaError(file.string() + ": missing column 'gripper_pos'");

  // Arm joints: triplets of <name>_pos / _vel / _eff, gripper columns excluded.
  std::vector<std::string> names;
  std::vector<int> pos_cols, vel_cols, eff_cols;
  for (size_t i = 1; i < table.header.size(); ++i) {
    const std::string& col = table.header[i];
    if (col.rfind("gripper", 0) == 0) continue;
    if (col.size() > 4 && col.ends_with("_pos")) {
      const std::string name = col.substr(0, col.size() - 4);
      int vc = table.column(name + "_vel");
      int ec = table.column(name + "_eff");
      if (vc < 0 || ec < 0)
        throw SchemaError(file.string() + ": joint '" + name +
                          "' lacks _vel/_eff columns");
      names.push_back(name);
      pos_cols.push_back(static_cast<int>(i));
      vel_cols.push_back(vc);
      eff_cols.push_back(ec);
    }
  }
  if (names.empty())
    throw SchemaError(file.string() + ": no arm joint columns found");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto j = static_cast<Eigen::Index>(names.size());
  joints->joint_names = std::move(names);
  joints->positions.resize(n, j);
  joints->velocities.resize(n, j);
  joints->efforts.resize(n, j);
  joints->gripper_position.resize(n);
  joints->timestamps.reserve(table.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<size_t>(i)];
    joints->timestamps.push_back(row[0]);
    for (Eigen::Index k = 0; k < j; ++k) {
      joints->positions(i, k) = row[static_cast<size_t>(pos_cols[static_cast<size_t>(k)])];
      joints->velocities(i, k) = row[static_cast<size_t>(vel_cols[static_cast<size_t>(k)])];
      joints->efforts(i, k) = row[static_cast<size_t>(eff_cols[static_cast<size_t>(k)])];
    }
    joints->gripper_position(i) = row[static_cast<size_t>(gripper_col)];
  }
}

std::vector<int> expand_runs(const json& runs, int frame_count,
                             const std::string& what,
                             int (*parse)(const std::string&)) {
  std::vector<int> track(static_cast<size_t>(frame_count), -1);
  for (const auto& run : runs) {
    if (!run.is_array() || run.size() != 3)
      throw SchemaError(what + ": each run must be [start_frame,end_frame,label]");
    const int start = run[0].get<int>();
    const int end = run[1].get<int>();  // inclusive
    const int label = parse(run[2].get<std::string>());
    if (start < 0 || end >= frame_count || start > end)
      throw SchemaError(what + ": run [" + std::to_string(start) + "," +
                        std::to_string(end) + "] out of range for T=" +
                        std::to_string(frame_count));
    for (int f = start; f <= end; ++f) {
      if (track[static_cast<size_t>(f)] != -1)
        throw SchemaError(what + ": overlapping runs at frame " + std::to_string(f));
      track[static_cast<size_t>(f)] = label;
    }
  }
  for (int f = 0; f < frame_count; ++f)
    if (track[static_cast<size_t>(f)] == -1)
      throw SchemaError(what + ": frame " + std::to_string(f) + " not covered");
  return track;
}

int parse_human_id(const std::string& s) {
  return static_cast<int>(parse_human_action(s));
}
int parse_robot_id(const std::string& s) {
  return static_cast<int>(parse_robot_action_full(s));
}

void load_annotations(const fs::path& dir, TrialRecord* trial) {
  const fs::path file = dir / "annotations.json";
  if (!fs::exists(file))
    throw MissingStream("missing annotations.json in " + dir.string());
  std::ifstream in(file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }

  for (const char* key : {"task", "robot", "participant_id", "object_class"})
    if (!doc.contains(key))
      throw SchemaError(file.string() + ": missing field '" + std::string(key) + "'");

  trial->task = parse_task(doc["task"].get<std::string>());
  trial->platform = parse_platform(doc["robot"].get<std::string>());
  trial->participant_id = doc["participant_id"].get<std::string>();
  trial->object_class = doc["object_class"].get<std::string>();

  const bool has_tracks = doc.contains("human_actions") &&
                          doc.contains("robot_actions") && doc.contains("outcome");
  if (!has_tracks) return;  // test-time trial: metadata only

  AnnotationTrack track;
  const int t = trial->frame_count();
  auto human = expand_runs(doc["human_actions"], t, file.string() + ":human_actions",
                           &parse_human_id);
  auto robot = expand_runs(doc["robot_actions"], t, file.string() + ":robot_actions",
                           &parse_robot_id);
  track.human_actions.reserve(human.size());
  for (int v : human) track.human_actions.push_back(static_cast<HumanAction>(v));
  track.robot_actions.reserve(robot.size());
  for (int v : robot) track.robot_actions.push_back(static_cast<RobotActionFull>(v));
  track.outcome = parse_outcome(doc["outcome"].get<std::string>());
  trial->annotations = std::move(track);
}

}  // namespace

void validate_trial(const TrialRecord& trial) {
  require_strictly_increasing(trial.video.timestamps, trial.trial_id + ": video");
  require_strictly_increasing(trial.ft.timestamps, trial.trial_id + ": ft");
  require_strictly_increasing(trial.joints.timestamps, trial.trial_id + ": joints");
  if (trial.ft.wrench.cols() != 6)
    throw InvariantViolation(trial.trial_id + ": ft vectors must have 6 components");
  if (!trial.video.frames.empty() &&
      trial.video.frames.size() != trial.video.timestamps.size())
    throw InvariantViolation(trial.trial_id + ": frame/timestamp count mismatch");

  if (trial.annotations) {
    const auto& ann = *trial.annotations;
    const auto t = static_cast<size_t>(trial.frame_count());
    if (ann.human_actions.size() != t || ann.robot_actions.size() != t)
      throw InvariantViolation(trial.trial_id + ": annotation track length != T");

    // robot actions: canonical order, one contiguous run per action
    int prev = -1;
    for (auto a : ann.robot_actions) {
      const int rank = static_cast<int>(a);
      if (rank < prev)
        throw InvariantViolation(trial.trial_id +
                                 ": robot actions out of canonical order");
      prev = rank;
    }

    if (ann.outcome == OutcomeLabel::NO_GRASP && trial.task != Task::R2H)
      throw InvariantViolation(trial.trial_id + ": 'no_grasp' requires task r2h");
    if (ann.outcome == OutcomeLabel::NO_RELEASE && trial.task != Task::H2R)
      throw InvariantViolation(trial.trial_id + ": 'no_release' requires task h2r");
  }
}

TrialRecord load_trial(const fs::path& trial_dir, const LoadOptions& options) {
  if (!fs::is_directory(trial_dir))
    throw MissingStream("not a trial directory: " + trial_dir.string());
  TrialRecord trial;
  trial.trial_id = trial_dir.filename().string();
  load_video(trial_dir, options.load_frames, &trial.video);
  load_ft(trial_dir, &trial.ft);
  load_joints(trial_dir, &trial.joints);
  load_annotations(trial_dir, &trial);
  validate_trial(trial);
  return trial;
}

std::vector<fs::path> find_trial_dirs(const fs::path& root) {
  if (!fs::is_directory(root))
    throw MissingStream("dataset root not found: " + root.string());
  std::vector<fs::path> dirs;
  std::vector<fs::path> stack = {root};
  while (!stack.empty()) {
    fs::path dir = stack.back();
    stack.pop_back();
    if (fs::exists(dir / "annotations.json")) {
      dirs.push_back(dir);
      continue;
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_directory()) continue;
      const std::string name = entry.path().filename().string();
      if (!name.empty() && name[0] == '.') continue;
      stack.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<TrialRecord> load_dataset(const fs::path& root,
                                      const LoadOptions& options) {
  std::vector<TrialRecord> trials;
  for (const auto& dir : find_trial_dirs(root))
    trials.push_back(load_trial(dir, options));
  return trials;
}

}  // namespace hfd::data
