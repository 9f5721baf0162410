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
#include <optional>
#include <vector>

namespace hfd::metrics {

// Maximal run of one label, frame indices inclusive on both ends.
struct Segment {
  int label = 0;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool operator==(const Segment&) const = default;
};

using SegmentList = std::vector<Segment>;

// Run-length encodes a per-frame label track. Throws EmptyTrack on empty
// input. Consecutive segments carry distinct labels and cover [0, T-1].
SegmentList frames_to_segments(const std::vector<int>& track);

// Inverse of frames_to_segments for any valid segment list.
std::vector<int> segments_to_frames(const SegmentList& segments);

// Segmental F1 at an IoU threshold given in percent. A predicted segment is
// a true positive when its IoU with the highest-IoU unmatched same-label
// ground-truth segment reaches threshold/100; matching is greedy in
// prediction order. Precision and recall pool all labels. Both lists must
// span the same number of frames (LengthMismatch otherwise). When
// exclude_label is set, segments with that label are dropped from both
// sides first; if both sides end up empty the score is 100, if exactly one
// is empty it is 0.
double segmental_f1(const SegmentList& pred, const SegmentList& gt,
                    double threshold,
                    std::optional<int> exclude_label = std::nullopt);

// Percent of frames where the two tracks agree. LengthMismatch on
// different lengths, EmptyTrack on empty input.
double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

// Percent of trials where predicted outcome equals ground truth.
double outcome_accuracy(const std::vector<int>& pred,
                        const std::vector<int>& gt);

// Per-field standard deviation companion to MetricsReport.
struct ReportStd {
  double outcome_accuracy = 0.0;
  double frame_accuracy = 0.0;
  std::map<int, double> f1_at;
};

struct MetricsReport {
  double outcome_accuracy = 0.0;        // percent
  double frame_accuracy = 0.0;          // percent
  std::map<int, double> f1_at;          // threshold percent -> F1 percent
  int n_runs = 1;
  std::optional<ReportStd> stddev;      // present only when n_runs > 1
};

// Field-wise mean over runs; sample (n-1) standard deviation attached when
// more than one run is given. All reports must share the same f1_at keys.
MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports);

}  // namespace hfd::metrics
