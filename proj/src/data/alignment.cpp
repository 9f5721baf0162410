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

#include "hfd/data/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "hfd/errors.hpp"

namespace hfd::data {

GripperCalibration GripperCalibration::defaults() {
  GripperCalibration c;
  c.ranges[RobotPlatform::HSR] = {1.2, 0.0};
  c.ranges[RobotPlatform::KINOVA_GEN3] = {0.0, 0.8};
  return c;
}

double gripper_opening_ratio(double raw_position, RobotPlatform platform,
                             const GripperCalibration& calibration) {
  auto it = calibration.ranges.find(platform);
  if (it == calibration.ranges.end())
    throw UnknownPlatform("no gripper calibration for platform '" +
                          label_name(platform) + "'");
  const GripperRange& range = it->second;
  const double span = range.open_position - range.closed_position;
  if (span == 0.0)
    throw UnknownPlatform("degenerate gripper calibration for platform '" +
                          label_name(platform) + "'");
  const double r = (raw_position - range.closed_position) / span;
  return std::clamp(r, 0.0, 1.0);
}

double discretize_gripper(double raw_position, RobotPlatform platform,
                          const GripperCalibration& calibration) {
  const double r = gripper_opening_ratio(raw_position, platform, calibration);
  if (r <= 0.25) return 0.5;   // closed
  if (r >= 0.75) return -0.5;  // open
  return 0.0;                  // partially closed
}

size_t nearest_sample(const std::vector<double>& timestamps, double t) {
  auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.begin()) return 0;
  if (it == timestamps.end()) return timestamps.size() - 1;
  const size_t hi = static_cast<size_t>(it - timestamps.begin());
  const size_t lo = hi - 1;
  const double d_lo = t - timestamps[lo];
  const double d_hi = timestamps[hi] - t;
  return d_hi < d_lo ? hi : lo;  // tie -> earlier sample
}

namespace {

void require_overlap(const std::vector<double>& frame_ts,
                     const std::vector<double>& sensor_ts,
                     const std::string& what) {
  if (sensor_ts.empty()) throw EmptyOverlap(what + ": sensor stream is empty");
  const double lo = sensor_ts.front();
  const double hi = sensor_ts.back();
  for (double t : frame_ts)
    if (t >= lo && t <= hi) return;
  throw EmptyOverlap(what + ": sensor stream covers no frame timestamps");
}

}  // namespace

AlignedTrial align_to_frames(const TrialRecord& trial,
                             const GripperCalibration& calibration) {
  const int frame_count = trial.frame_count();
  if (frame_count == 0) throw EmptyTrial(trial.trial_id + ": no video frames");

  require_overlap(trial.video.timestamps, trial.ft.timestamps,
                  trial.trial_id + ": ft");
  require_overlap(trial.video.timestamps, trial.joints.timestamps,
                  trial.trial_id + ": joints");

  AlignedTrial out;
  out.meta = {trial.trial_id, trial.platform, trial.task, trial.participant_id,
              trial.object_class};
  out.frame_timestamps = trial.video.timestamps;
  out.frames = trial.video.frames;
  out.labels = trial.annotations;

  const auto t_n = static_cast<Eigen::Index>(frame_count);
  out.ft.resize(t_n, 6);
  out.gripper.resize(t_n);
  out.joint_velocities.resize(t_n, trial.joints.velocities.cols());

  for (Eigen::Index i = 0; i < t_n; ++i) {
    const double t = trial.video.timestamps[static_cast<size_t>(i)];
    const auto ft_idx = static_cast<Eigen::Index>(nearest_sample(trial.ft.timestamps, t));
    out.ft.row(i) = trial.ft.wrench.row(ft_idx);
    const auto j_idx = static_cast<Eigen::Index>(nearest_sample(trial.joints.timestamps, t));
    out.gripper(i) = discretize_gripper(trial.joints.gripper_position(j_idx),
                                        trial.platform, calibration);
    out.joint_velocities.row(i) = trial.joints.velocities.row(j_idx);
  }
  return out;
}

}  // namespace hfd::data
