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

#include "hfd/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hfd/errors.hpp"

namespace hfd::metrics {

SegmentList frames_to_segments(const std::vector<int>& track) {
  if (track.empty()) throw EmptyTrack("frames_to_segments: empty track");
  SegmentList segments;
  int start = 0;
  for (std::size_t t = 1; t <= track.size(); ++t) {
    if (t == track.size() || track[t] != track[start]) {
      segments.push_back({track[start], start, static_cast<int>(t) - 1});
      start = static_cast<int>(t);
    }
  }
  return segments;
}

std::vector<int> segments_to_frames(const SegmentList& segments) {
  std::vector<int> track;
  for (const auto& seg : segments) {
    if (seg.end < seg.start)
      throw InvariantViolation("segments_to_frames: segment end before start");
    if (static_cast<int>(track.size()) != seg.start)
      throw InvariantViolation("segments_to_frames: segments not contiguous");
    track.insert(track.end(), seg.length(), seg.label);
  }
  return track;
}

namespace {

int total_frames(const SegmentList& segments) {
  int total = 0;
  for (const auto& seg : segments) total += seg.length();
  return total;
}

double iou(const Segment& a, const Segment& b) {
  const int inter =
      std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start) + 1);
  const int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SegmentList drop_label(const SegmentList& segments, int label) {
  SegmentList kept;
  for (const auto& seg : segments)
    if (seg.label != label) kept.push_back(seg);
  return kept;
}

}  // namespace

double segmental_f1(const SegmentList& pred, const SegmentList& gt,
                    double threshold, std::optional<int> exclude_label) {
  if (total_frames(pred) != total_frames(gt))
    throw LengthMismatch("segmental_f1: prediction spans " +
                         std::to_string(total_frames(pred)) +
                         " frames, ground truth spans " +
                         std::to_string(total_frames(gt)));

  SegmentList p = pred;
  SegmentList g = gt;
  if (exclude_label) {
    p = drop_label(p, *exclude_label);
    g = drop_label(g, *exclude_label);
  }
  if (p.empty() && g.empty()) return 100.0;
  if (p.empty() || g.empty()) return 0.0;

  std::vector<bool> matched(g.size(), false);
  int tp = 0;
  for (const auto& ps : p) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (matched[j] || g[j].label != ps.label) continue;
      const double v = iou(ps, g[j]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_iou >= threshold / 100.0) {
      matched[best] = true;
      ++tp;
    }
  }
  const int fp = static_cast<int>(p.size()) - tp;
  const int fn = static_cast<int>(g.size()) - tp;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

namespace {

double match_percent(const std::vector<int>& pred, const std::vector<int>& gt,
                     const char* name) {
  if (pred.size() != gt.size())
    throw LengthMismatch(std::string(name) + ": " +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(gt.size()) + " entries");
  if (pred.empty()) throw EmptyTrack(std::string(name) + ": empty input");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < pred.size(); ++t)
    if (pred[t] == gt[t]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

double frame_accuracy(const std::vector<int>& pred,
                      const std::vector<int>& gt) {
  return match_percent(pred, gt, "frame_accuracy");
}

double outcome_accuracy(const std::vector<int>& pred,
                        const std::vector<int>& gt) {
  return match_percent(pred, gt, "outcome_accuracy");
}

namespace {

double sample_std(const std::vector<double>& values) {
  // Shifted two-pass keeps identical inputs at exactly zero spread.
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) {
    const double d = v - shift - mean;
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(values.size() - 1));
}

}  // namespace

MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw EmptyList("aggregate_runs: no reports");
  const auto& first = reports.front();
  for (const auto& r : reports)
    if (r.f1_at.size() != first.f1_at.size() ||
        !std::equal(r.f1_at.begin(), r.f1_at.end(), first.f1_at.begin(),
                    [](const auto& a, const auto& b) {
                      return a.first == b.first;
                    }))
      throw InvariantViolation("aggregate_runs: mismatched F1 thresholds");

  const auto n = static_cast<double>(reports.size());
  MetricsReport out;
  out.n_runs = static_cast<int>(reports.size());
  for (const auto& r : reports) {
    out.outcome_accuracy += r.outcome_accuracy / n;
    out.frame_accuracy += r.frame_accuracy / n;
    for (const auto& [thr, f1] : r.f1_at) out.f1_at[thr] += f1 / n;
  }
  if (reports.size() > 1) {
    ReportStd sd;
    std::vector<double> vals;
    auto collect = [&](auto field) {
      vals.clear();
      for (const auto& r : reports) vals.push_back(field(r));
      return vals;
    };
    sd.outcome_accuracy = sample_std(
        collect([](const MetricsReport& r) { return r.outcome_accuracy; }));
    sd.frame_accuracy = sample_std(
        collect([](const MetricsReport& r) { return r.frame_accuracy; }));
    for (const auto& [thr, mean_f1] : out.f1_at) {
      const int key = thr;
      sd.f1_at[key] = sample_std(
          collect([key](const MetricsReport& r) { return r.f1_at.at(key); }));
    }
    out.stddev = std::move(sd);
  }
  return out;
}

}  // namespace hfd::metrics
