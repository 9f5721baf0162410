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

#include <filesystem>
#include <vector>

#include "hfd/data/types.hpp"

namespace hfd::data {

// Per-trial directory layout:
//   <trial_id>/
//     frames/%06d.png + frame_timestamps.csv   (or video.mp4)
//     ft.csv           columns: t,fx,fy,fz,tx,ty,tz
//     joints.csv       columns: t, <joint>_pos,<joint>_vel,<joint>_eff ...,
//                      gripper_pos (optional gripper_vel, gripper_eff)
//     annotations.json metadata (task, robot, participant_id, object_class)
//                      plus optional label tracks (human_actions,
//                      robot_actions as [[start,end,label],...] with inclusive
//                      ends, and outcome)

struct LoadOptions {
  bool load_frames = true;  // decode pixel data (timestamps always load)
};

TrialRecord load_trial(const std::filesystem::path& trial_dir,
                       const LoadOptions& options = {});

// Scans root for trial directories (any directory containing
// annotations.json; hidden directories are skipped) in sorted order.
std::vector<std::filesystem::path> find_trial_dirs(
    const std::filesystem::path& root);

std::vector<TrialRecord> load_dataset(const std::filesystem::path& root,
                                      const LoadOptions& options = {});

// Throws InvariantViolation / SchemaError when a record is inconsistent.
void validate_trial(const TrialRecord& trial);

}  // namespace hfd::data
