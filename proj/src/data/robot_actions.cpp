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

#include "hfd/data/robot_actions.hpp"

#include <cmath>

#include "hfd/errors.hpp"

namespace hfd::data {

namespace {

struct Episode {
  int start;
  int end;  // inclusive
};

// Debounced moving/still states: a flip must persist for `hysteresis` frames;
// shorter flips keep the previous state.
std::vector<bool> debounce(const std::vector<bool>& raw, int hysteresis) {
  std::vector<bool> out(raw.size());
  bool state = raw[0];
  out[0] = state;
  int pending = 0;
  for (size_t i = 1; i < raw.size(); ++i) {
    if (raw[i] == state) {
      pending = 0;
      out[i] = state;
      continue;
    }
    ++pending;
    if (pending >= hysteresis) {
      state = !state;
      for (size_t k = i + 1 - static_cast<size_t>(pending); k <= i; ++k)
        out[k] = state;
      pending = 0;
    } else {
      out[i] = state;
    }
  }
  return out;
}

}  // namespace

std::vector<RobotActionFull> extract_robot_actions(
    const Eigen::MatrixXd& joint_velocities, const RobotActionExtraction& params) {
  const auto frame_count = joint_velocities.rows();
  if (frame_count == 0) throw SegmentationAmbiguous("empty velocity sequence");

  std::vector<bool> moving_raw(static_cast<size_t>(frame_count));
  for (Eigen::Index i = 0; i < frame_count; ++i) {
    const double mean_abs = joint_velocities.row(i).cwiseAbs().mean();
    moving_raw[static_cast<size_t>(i)] = mean_abs > params.motion_threshold;
  }

  const std::vector<bool> moving =
      params.hysteresis_frames > 1 ? debounce(moving_raw, params.hysteresis_frames)
                                   : moving_raw;

  std::vector<Episode> episodes;
  for (int i = 0; i < frame_count; ++i) {
    if (!moving[static_cast<size_t>(i)]) continue;
    if (episodes.empty() || episodes.back().end != i - 1)
      episodes.push_back({i, i});
    else
      episodes.back().end = i;
  }

  if (episodes.size() < 2)
    throw SegmentationAmbiguous(
        "fewer than two motion episodes; cannot place the transfer segment");

  const Episode approach = episodes.front();
  const Episode retract = episodes.back();

  std::vector<RobotActionFull> track(static_cast<size_t>(frame_count));
  for (int i = 0; i < frame_count; ++i) {
    RobotActionFull label;
    if (i < approach.start)
      label = RobotActionFull::IDLE;
    else if (i <= approach.end)
      label = RobotActionFull::APPROACH;
    else if (i < retract.start)
      label = RobotActionFull::TRANSFER;
    else if (i <= retract.end)
      label = RobotActionFull::RETRACT;
    else
      label = RobotActionFull::POST_IDLE;
    track[static_cast<size_t>(i)] = label;
  }
  return track;
}

}  // namespace hfd::data
