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

#include <map>

#include "hfd/data/types.hpp"

namespace hfd::data {

struct GripperRange {
  double open_position = 1.0;
  double closed_position = 0.0;
};

// Raw gripper joint ranges per platform. Values outside the range are clamped.
struct GripperCalibration {
  std::map<RobotPlatform, GripperRange> ranges;

  static GripperCalibration defaults();
};

// Normalized opening ratio in [0,1], 1 = fully open.
double gripper_opening_ratio(double raw_position, RobotPlatform platform,
                             const GripperCalibration& calibration);

// ratio <= 0.25 -> 0.5 (closed), ratio >= 0.75 -> -0.5 (open), else 0.0.
double discretize_gripper(double raw_position, RobotPlatform platform,
                          const GripperCalibration& calibration =
                              GripperCalibration::defaults());

// Index of the sample whose timestamp is nearest to t; ties resolve to the
// earlier sample. Timestamps must be sorted ascending and non-empty.
size_t nearest_sample(const std::vector<double>& timestamps, double t);

// Zero-order-hold alignment of F-T, gripper and joint velocities to the video
// frame timestamps. Throws EmptyOverlap when a sensor stream covers none of
// the frame timestamps.
AlignedTrial align_to_frames(const TrialRecord& trial,
                             const GripperCalibration& calibration =
                                 GripperCalibration::defaults());

}  // namespace hfd::data
