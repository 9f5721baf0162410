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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/features/sequence.hpp"

namespace hfd::synth {

// Stream rates of generated trials.
inline constexpr double kVideoFps = 15.0;
inline constexpr double kFtHz = 60.0;
inline constexpr double kJointHz = 50.0;

// Backbone fingerprint stamped on cached synthetic feature sequences.
inline constexpr const char* kSyntheticFingerprint = "synthetic-v1";

// One scripted handover. The robot walks its five phases with the given
// durations; the human timeline mirrors it with a small lag, overridden by
// the failure mode. Sensor signatures: a force plateau on fz while the
// object is shared, a sustained fx pull through retraction when the human
// does not release, and a spike that cuts to zero when the object drops.
struct ScenarioScript {
  data::Task task = data::Task::R2H;
  data::OutcomeLabel outcome = data::OutcomeLabel::SUCCESS;
  data::RobotPlatform platform = data::RobotPlatform::HSR;

  // Frames per robot phase: IDLE, APPROACH, TRANSFER, RETRACT, POST_IDLE.
  std::array<int, data::kNumRobotActionsFull> phase_frames = {12, 18, 24, 18,
                                                              12};
  int human_lag = 2;  // frames the human trails robot phase changes

  double force_spike = 1.2;     // contact amplitude during transfer
  double sustained_pull = 1.8;  // not-released tug while the robot retracts
  double drop_spike = 1.5;      // drop amplitude before the cut to zero
  double noise = 0.05;          // sigma as a fraction of force_spike

  std::uint64_t seed = 0;
  std::string trial_id = "synthetic";
  std::string participant_id = "sp00";
  std::string object_class = "cube";
};

struct SyntheticTrial {
  data::TrialRecord record;           // raw streams, frames included
  data::AlignedTrial aligned;         // frame-rate view of the record
  features::FeatureSequence features; // pseudo-backbone; ft unnormalized
};

// Deterministic in the script seed, bit-identical across calls.
// ScriptError on inconsistent scripts (non-positive durations, negative
// noise, an outcome that cannot occur in the scripted task).
SyntheticTrial generate_trial(const ScenarioScript& script);

// The 8 valid (task, outcome) combinations, fixed order.
std::vector<std::pair<data::Task, data::OutcomeLabel>> suite_cells();

struct SuiteOptions {
  int per_cell = 2;  // trials per (task, outcome) cell
  std::uint64_t seed = 0;
  int participants = 6;  // synthetic participant pool for split tests
  double noise = 0.05;
  bool write_feature_cache = true;
};

struct SuiteSummary {
  std::filesystem::path root;
  std::filesystem::path cache_dir;  // <root>/.feature_cache
  std::vector<std::string> trial_ids;
  data::NormalizationStats ft_stats;  // over training participants only
};

// Writes a balanced mini-dataset (per_cell trials per cell) in the on-disk
// trial layout, a participant split spec (splits.json) and, by default, a
// feature cache of the pseudo-backbone sequences with suite-normalized F-T.
SuiteSummary generate_suite(const std::filesystem::path& out_dir,
                            const SuiteOptions& options);

}  // namespace hfd::synth
