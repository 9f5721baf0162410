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

#pragma once

#include <Eigen/Core>
#include <opencv2/core.hpp>
#include <optional>
#include <string>
#include <vector>

namespace hfd::data {

enum class RobotPlatform { HSR, KINOVA_GEN3 };
enum class Task { R2H, H2R };

// Stable integer encodings; the canonical string vocabulary lives in
// label_name()/parse_* below.
enum class HumanAction : int {
  IDLE = 0,
  APPROACH = 1,
  TRANSFER = 2,
  RETRACT = 3,
  POST_IDLE = 4,
  NOT_RELEASED = 5,
  DROPPED = 6,
};
inline constexpr int kNumHumanActions = 7;

enum class RobotActionFull : int {
  IDLE = 0,
  APPROACH = 1,
  TRANSFER = 2,
  RETRACT = 3,
  POST_IDLE = 4,
};
inline constexpr int kNumRobotActionsFull = 5;

enum class RobotActionModel : int {
  APPROACH = 0,
  TRANSFER = 1,
  RETRACT = 2,
};
inline constexpr int kNumRobotActionsModel = 3;

enum class OutcomeLabel : int {
  SUCCESS = 0,
  NO_APPROACH = 1,
  NO_GRASP = 2,
  DROP = 3,
  NO_RELEASE = 4,
};
inline constexpr int kNumOutcomes = 5;

// {IDLE, APPROACH} -> APPROACH, TRANSFER -> TRANSFER,
// {RETRACT, POST_IDLE} -> RETRACT
RobotActionModel to_model_action(RobotActionFull a);

std::string label_name(HumanAction a);
std::string label_name(RobotActionFull a);
std::string label_name(RobotActionModel a);
std::string label_name(OutcomeLabel o);
std::string label_name(Task t);
std::string label_name(RobotPlatform p);

// Parsers accept the canonical lowercase names; spaces and hyphens are
// normalized to underscores, and "interact" is an alias for "transfer".
HumanAction parse_human_action(const std::string& s);
RobotActionFull parse_robot_action_full(const std::string& s);
OutcomeLabel parse_outcome(const std::string& s);
Task parse_task(const std::string& s);
RobotPlatform parse_platform(const std::string& s);

struct AnnotationTrack {
  std::vector<HumanAction> human_actions;       // length T
  std::vector<RobotActionFull> robot_actions;   // length T
  OutcomeLabel outcome = OutcomeLabel::SUCCESS;

  std::vector<RobotActionModel> model_robot_actions() const;
};

struct VideoStream {
  std::vector<double> timestamps;   // seconds, strictly increasing
  std::vector<cv::Mat> frames;      // BGR 8UC3; empty when frames not loaded

  int frame_count() const { return static_cast<int>(timestamps.size()); }
};

struct ForceTorqueStream {
  std::vector<double> timestamps;
  Eigen::MatrixXd wrench;  // N x 6: fx, fy, fz, tx, ty, tz
};

struct JointStateStream {
  std::vector<double> timestamps;
  std::vector<std::string> joint_names;  // arm joints, gripper excluded
  Eigen::MatrixXd positions;             // N x J
  Eigen::MatrixXd velocities;            // N x J
  Eigen::MatrixXd efforts;               // N x J
  Eigen::VectorXd gripper_position;      // N
};

struct TrialRecord {
  std::string trial_id;
  RobotPlatform platform = RobotPlatform::HSR;
  Task task = Task::R2H;
  std::string participant_id;
  std::string object_class;
  VideoStream video;
  ForceTorqueStream ft;
  JointStateStream joints;
  std::optional<AnnotationTrack> annotations;

  int frame_count() const { return video.frame_count(); }
};

struct TrialMeta {
  std::string trial_id;
  RobotPlatform platform = RobotPlatform::HSR;
  Task task = Task::R2H;
  std::string participant_id;
  std::string object_class;
};

struct AlignedTrial {
  TrialMeta meta;
  std::vector<double> frame_timestamps;
  std::vector<cv::Mat> frames;      // may be empty when frames were not loaded
  Eigen::MatrixXd ft;               // T x 6, aligned to frames
  Eigen::VectorXd gripper;          // T, values in {-0.5, 0.0, 0.5}
  Eigen::MatrixXd joint_velocities; // T x J, aligned (for robot-action extraction)
  std::optional<AnnotationTrack> labels;

  int frame_count() const { return static_cast<int>(frame_timestamps.size()); }
};

struct NormalizationStats {
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> std = Eigen::Matrix<double, 6, 1>::Ones();
  std::vector<int> degenerate_channels;  // channels whose std was forced to 1
};

}  // namespace hfd::data
