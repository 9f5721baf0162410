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

#include "hfd/baseline/correlation.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "hfd/errors.hpp"

namespace hfd::baseline {

namespace d = hfd::data;
using nlohmann::json;

long CorrelationTable::total() const {
  long sum = 0;
  for (const auto& per_robot : counts)
    for (const auto& per_bin : per_robot)
      for (long c : per_bin) sum += c;
  return sum;
}

std::vector<std::pair<int, int>> CorrelationTable::empty_cells() const {
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < d::kNumRobotActionsModel; ++r)
    for (int b = 0; b < kProgressBins; ++b) {
      long sum = 0;
      for (long c : counts[r][b]) sum += c;
      if (sum == 0) cells.emplace_back(r, b);
    }
  return cells;
}

double segment_progress(int j, int len) {
  return static_cast<double>(j) / static_cast<double>(len);
}

int progress_bin(double progress) {
  const int bin = static_cast<int>(std::floor(kProgressBins * progress));
  return std::min(std::max(bin, 0), kProgressBins - 1);
}

namespace {

// Per-frame progress bin inside maximal runs of one robot action.
std::vector<int> track_bins(const std::vector<d::RobotActionModel>& track) {
  std::vector<int> bins(track.size());
  size_t start = 0;
  while (start < track.size()) {
    size_t end = start;
    while (end + 1 < track.size() && track[end + 1] == track[start]) ++end;
    const int len = static_cast<int>(end - start + 1);
    for (size_t t = start; t <= end; ++t)
      bins[t] = progress_bin(
          segment_progress(static_cast<int>(t - start), len));
    start = end + 1;
  }
  return bins;
}

}  // namespace

CorrelationTable fit_correlation(
    const std::vector<d::AnnotationTrack>& tracks, bool nominal_only,
    const std::string& fitted_on) {
  CorrelationTable table;
  table.fitted_on = fitted_on;
  for (const auto& track : tracks) {
    if (track.human_actions.empty() || track.robot_actions.empty())
      throw NoLabels("fit_correlation: trial without action tracks");
    if (track.human_actions.size() != track.robot_actions.size())
      throw ShapeError("fit_correlation: track length mismatch");
    if (nominal_only && track.outcome != d::OutcomeLabel::SUCCESS) continue;

    const auto robot = track.model_robot_actions();
    const auto bins = track_bins(robot);
    for (size_t t = 0; t < robot.size(); ++t)
      ++table.counts[static_cast<int>(robot[t])][bins[t]]
                    [static_cast<int>(track.human_actions[t])];
  }
  return table;
}

std::vector<d::HumanAction> predict_human_actions(
    const CorrelationTable& table,
    const std::vector<d::RobotActionModel>& robot_track) {
  // Marginal over deciles, used when a (robot, decile) cell is empty.
  std::array<std::array<long, d::kNumHumanActions>, d::kNumRobotActionsModel>
      marginal{};
  for (int r = 0; r < d::kNumRobotActionsModel; ++r)
    for (int b = 0; b < kProgressBins; ++b)
      for (int h = 0; h < d::kNumHumanActions; ++h)
        marginal[r][h] += table.counts[r][b][h];

  const auto argmax = [](const std::array<long, d::kNumHumanActions>& row) {
    int best = 0;
    for (int h = 1; h < d::kNumHumanActions; ++h)
      if (row[h] > row[best]) best = h;  // ties keep the lowest index
    return best;
  };

  const auto bins = track_bins(robot_track);
  std::vector<d::HumanAction> pred(robot_track.size());
  for (size_t t = 0; t < robot_track.size(); ++t) {
    const int r = static_cast<int>(robot_track[t]);
    const auto& cell = table.counts[r][bins[t]];
    long cell_sum = 0;
    for (long c : cell) cell_sum += c;
    const int h = cell_sum > 0 ? argmax(cell) : argmax(marginal[r]);
    pred[t] = static_cast<d::HumanAction>(h);
  }
  return pred;
}

metrics::MetricsReport evaluate_baseline(
    const CorrelationTable& table,
    const std::vector<d::AnnotationTrack>& tracks,
    const std::vector<double>& thresholds) {
  metrics::SegmentList pred_pool, gt_pool;
  long frames_total = 0, frames_correct = 0;
  int offset = 0;
  for (const auto& track : tracks) {
    if (track.human_actions.empty() || track.robot_actions.empty())
      throw NoLabels("evaluate_baseline: trial without action tracks");
    const auto pred = predict_human_actions(table, track.model_robot_actions());

    std::vector<int> pred_int(pred.size()), gt_int(pred.size());
    for (size_t t = 0; t < pred.size(); ++t) {
      pred_int[t] = static_cast<int>(pred[t]);
      gt_int[t] = static_cast<int>(track.human_actions[t]);
      ++frames_total;
      if (pred_int[t] == gt_int[t]) ++frames_correct;
    }
    // Pool segments across trials; the per-trial offset keeps trials from
    // overlapping, so no match can cross a trial boundary.
    for (auto seg : metrics::frames_to_segments(pred_int)) {
      seg.start += offset;
      seg.end += offset;
      pred_pool.push_back(seg);
    }
    for (auto seg : metrics::frames_to_segments(gt_int)) {
      seg.start += offset;
      seg.end += offset;
      gt_pool.push_back(seg);
    }
    offset += static_cast<int>(pred.size());
  }
  if (frames_total == 0)
    throw EmptyList("evaluate_baseline: no trials");

  metrics::MetricsReport report;
  report.frame_accuracy = 100.0 * frames_correct / frames_total;
  for (double thr : thresholds)
    report.f1_at[static_cast<int>(thr)] =
        metrics::segmental_f1(pred_pool, gt_pool, thr);
  return report;
}

void save_correlation_table(const std::filesystem::path& path,
                            const CorrelationTable& table) {
  json counts = json::array();
  for (int r = 0; r < d::kNumRobotActionsModel; ++r) {
    json per_robot = json::array();
    for (int b = 0; b < kProgressBins; ++b) {
      json per_bin = json::array();
      for (int h = 0; h < d::kNumHumanActions; ++h)
        per_bin.push_back(table.counts[r][b][h]);
      per_robot.push_back(per_bin);
    }
    counts.push_back(per_robot);
  }
  json robot_names = json::array(), human_names = json::array();
  for (int r = 0; r < d::kNumRobotActionsModel; ++r)
    robot_names.push_back(d::label_name(static_cast<d::RobotActionModel>(r)));
  for (int h = 0; h < d::kNumHumanActions; ++h)
    human_names.push_back(d::label_name(static_cast<d::HumanAction>(h)));

  const json doc = {{"fitted_on", table.fitted_on},
                    {"progress_bins", kProgressBins},
                    {"robot_actions", robot_names},
                    {"human_actions", human_names},
                    {"counts", counts}};
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

CorrelationTable load_correlation_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("correlation table: " + std::string(e.what()));
  }
  if (!doc.contains("counts") || doc.value("progress_bins", 0) != kProgressBins)
    throw SchemaError("correlation table: bad header in " + path.string());

  CorrelationTable table;
  table.fitted_on = doc.value("fitted_on", "");
  const json& counts = doc["counts"];
  if (counts.size() != d::kNumRobotActionsModel)
    throw SchemaError("correlation table: expected 3 robot actions");
  for (int r = 0; r < d::kNumRobotActionsModel; ++r) {
    if (counts[r].size() != kProgressBins)
      throw SchemaError("correlation table: expected 10 progress bins");
    for (int b = 0; b < kProgressBins; ++b) {
      if (counts[r][b].size() != d::kNumHumanActions)
        throw SchemaError("correlation table: expected 7 human actions");
      for (int h = 0; h < d::kNumHumanActions; ++h) {
        const long c = counts[r][b][h].get<long>();
        if (c < 0) throw SchemaError("correlation table: negative count");
        table.counts[r][b][h] = c;
      }
    }
  }
  return table;
}

}  // namespace hfd::baseline
