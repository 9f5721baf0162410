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

#include "hfd/data/types.hpp"

namespace hfd::data {

struct RobotActionExtraction {
  double motion_threshold = 0.01;  // rad/s, on mean |joint velocity|
  int hysteresis_frames = 5;       // flips shorter than this are ignored
};

// Segments a trial into the fixed idle/approach/transfer/retract/post_idle
// order from per-frame arm joint velocities (T x J). The arm moves during
// approach and retract; transfer is the still gap between the first and last
// motion episodes. Leading and trailing idle may be empty.
// Throws SegmentationAmbiguous when fewer than two motion episodes exist.
std::vector<RobotActionFull> extract_robot_actions(
    const Eigen::MatrixXd& joint_velocities,
    const RobotActionExtraction& params = {});

}  // namespace hfd::data
