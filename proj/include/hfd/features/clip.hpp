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

#include <optional>
#include <vector>

#include "hfd/data/types.hpp"

namespace hfd::features {

inline constexpr int kClipLength = 64;

struct PreprocessOptions {
  int resize_short = 256;
  int crop = 224;
};

// Shorter-side resize followed by center crop; output is crop x crop BGR.
cv::Mat preprocess_frame(const cv::Mat& frame,
                         const PreprocessOptions& options = {});

// Uniform clip sampling rule: index i -> round(i * (total-1) / (n-1)).
// Indices are non-decreasing, start at 0 and end at total-1; shorter inputs
// produce repeats. Throws EmptyTrial when total == 0.
std::vector<int> uniform_indices(int total, int n);

struct ClipInput {
  std::vector<cv::Mat> rgb;    // n preprocessed frames, 8UC3
  std::vector<cv::Mat> flow;   // n flow fields, 32FC2 in [-1, 1]
  Eigen::MatrixXd ft;          // n x 6
  Eigen::VectorXd gripper;     // n
  std::optional<data::OutcomeLabel> label;
};

// Samples all four streams at the same uniform indices. Frames must be
// loaded; flow fields must be per-frame (see compute_optical_flow) and are
// optional when the trial is used for F-T/gripper-only streams.
ClipInput sample_uniform_clip(const data::AlignedTrial& trial,
                              const std::vector<cv::Mat>& flow_fields,
                              int n = kClipLength);

}  // namespace hfd::features
