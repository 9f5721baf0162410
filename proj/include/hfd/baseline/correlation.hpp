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
#include <filesystem>
#include <string>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/metrics/metrics.hpp"

namespace hfd::baseline {

inline constexpr int kProgressBins = 10;

// Frequency of each human action given the robot's current action and how
// far the robot has progressed through it. Immutable once fitted.
struct CorrelationTable {
  // counts[robot action][progress decile][human action]
  std::array<std::array<std::array<long, data::kNumHumanActions>,
                        kProgressBins>,
             data::kNumRobotActionsModel>
      counts{};
  std::string fitted_on;

  long total() const;
  // (robot action, decile) pairs with all-zero counts.
  std::vector<std::pair<int, int>> empty_cells() const;
};

// Progress of frame j inside a segment of length len, in [0, 1).
double segment_progress(int j, int len);

// Decile index floor(10 * progress), capped at kProgressBins - 1.
int progress_bin(double progress);

// Accumulates per-frame (robot action, decile, human action) counts over
// the labeled tracks. nominal_only restricts to SUCCESS trials. Throws
// NoLabels when a track is empty.
CorrelationTable fit_correlation(
    const std::vector<data::AnnotationTrack>& tracks, bool nominal_only,
    const std::string& fitted_on = "");

// Per-frame argmax of counts[r][decile][.]; ties go to the lowest action
// index; a cell with no counts falls back to the robot-action marginal.
std::vector<data::HumanAction> predict_human_actions(
    const CorrelationTable& table,
    const std::vector<data::RobotActionModel>& robot_track);

// Predicts the human track of every trial from its ground-truth robot track
// and scores segmental F1 at the given thresholds plus frame accuracy,
// pooled over trials.
metrics::MetricsReport evaluate_baseline(
    const CorrelationTable& table,
    const std::vector<data::AnnotationTrack>& tracks,
    const std::vector<double>& thresholds = {10.0, 25.0, 50.0});

// JSON round-trip (counts plus the label vocabularies).
void save_correlation_table(const std::filesystem::path& path,
                            const CorrelationTable& table);
CorrelationTable load_correlation_table(const std::filesystem::path& path);

}  // namespace hfd::baseline
