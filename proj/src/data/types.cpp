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

#include "hfd/data/types.hpp"

#include <algorithm>

#include "hfd/errors.hpp"

namespace hfd::data {

RobotActionModel to_model_action(RobotActionFull a) {
  switch (a) {
    case RobotActionFull::IDLE:
    case RobotActionFull::APPROACH:
      return RobotActionModel::APPROACH;
    case RobotActionFull::TRANSFER:
      return RobotActionModel::TRANSFER;
    case RobotActionFull::RETRACT:
    case RobotActionFull::POST_IDLE:
      return RobotActionModel::RETRACT;
  }
  throw InvariantViolation("invalid RobotActionFull value");
}

std::vector<RobotActionModel> AnnotationTrack::model_robot_actions() const {
  std::vector<RobotActionModel> out;
  out.reserve(robot_actions.size());
  for (auto a : robot_actions) out.push_back(to_model_action(a));
  return out;
}

std::string label_name(HumanAction a) {
  switch (a) {
    case HumanAction::IDLE: return "idle";
    case HumanAction::APPROACH: return "approach";
    case HumanAction::TRANSFER: return "transfer";
    case HumanAction::RETRACT: return "retract";
    case HumanAction::POST_IDLE: return "post_idle";
    case HumanAction::NOT_RELEASED: return "not_released";
    case HumanAction::DROPPED: return "dropped";
  }
  return "?";
}

std::string label_name(RobotActionFull a) {
  switch (a) {
    case RobotActionFull::IDLE: return "idle";
    case RobotActionFull::APPROACH: return "approach";
    case RobotActionFull::TRANSFER: return "transfer";
    case RobotActionFull::RETRACT: return "retract";
    case RobotActionFull::POST_IDLE: return "post_idle";
  }
  return "?";
}

std::string label_name(RobotActionModel a) {
  switch (a) {
    case RobotActionModel::APPROACH: return "approach";
    case RobotActionModel::TRANSFER: return "transfer";
    case RobotActionModel::RETRACT: return "retract";
  }
  return "?";
}

std::string label_name(OutcomeLabel o) {
  switch (o) {
    case OutcomeLabel::SUCCESS: return "success";
    case OutcomeLabel::NO_APPROACH: return "no_approach";
    case OutcomeLabel::NO_GRASP: return "no_grasp";
    case OutcomeLabel::DROP: return "drop";
    case OutcomeLabel::NO_RELEASE: return "no_release";
  }
  return "?";
}

std::string label_name(Task t) { return t == Task::R2H ? "r2h" : "h2r"; }

std::string label_name(RobotPlatform p) {
  return p == RobotPlatform::HSR ? "hsr" : "kinova_gen3";
}

namespace {

std::string canonicalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

}  // namespace

HumanAction parse_human_action(const std::string& s) {
  const std::string c = canonicalize(s);
  if (c == "idle") return HumanAction::IDLE;
  if (c == "approach") return HumanAction::APPROACH;
  if (c == "transfer" || c == "interact") return HumanAction::TRANSFER;
  if (c == "retract") return HumanAction::RETRACT;
  if (c == "post_idle") return HumanAction::POST_IDLE;
  if (c == "not_released") return HumanAction::NOT_RELEASED;
  if (c == "dropped") return HumanAction::DROPPED;
  throw SchemaError("unknown human action label: '" + s + "'");
}

RobotActionFull parse_robot_action_full(const std::string& s) {
  const std::string c = canonicalize(s);
  if (c == "idle") return RobotActionFull::IDLE;
  if (c == "approach") return RobotActionFull::APPROACH;
  if (c == "transfer" || c == "interact") return RobotActionFull::TRANSFER;
  if (c == "retract") return RobotActionFull::RETRACT;
  if (c == "post_idle") return RobotActionFull::POST_IDLE;
  throw SchemaError("unknown robot action label: '" + s + "'");
}

OutcomeLabel parse_outcome(const std::string& s) {
  const std::string c = canonicalize(s);
  if (c == "success") return OutcomeLabel::SUCCESS;
  if (c == "no_approach") return OutcomeLabel::NO_APPROACH;
  if (c == "no_grasp") return OutcomeLabel::NO_GRASP;
  if (c == "drop" || c == "dropped") return OutcomeLabel::DROP;
  if (c == "no_release") return OutcomeLabel::NO_RELEASE;
  throw SchemaError("unknown outcome label: '" + s + "'");
}

Task parse_task(const std::string& s) {
  const std::string c = canonicalize(s);
  if (c == "r2h") return Task::R2H;
  if (c == "h2r") return Task::H2R;
  throw SchemaError("unknown task: '" + s + "'");
}

RobotPlatform parse_platform(const std::string& s) {
  const std::string c = canonicalize(s);
  if (c == "hsr" || c == "toyota_hsr") return RobotPlatform::HSR;
  if (c == "kinova_gen3" || c == "kinova") return RobotPlatform::KINOVA_GEN3;
  throw UnknownPlatform("unknown robot platform: '" + s + "'");
}

}  // namespace hfd::data
