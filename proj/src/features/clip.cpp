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

#include "hfd/features/clip.hpp"

#include <cmath>

#include <opencv2/imgproc.hpp>

#include "hfd/errors.hpp"

namespace hfd::features {

cv::Mat preprocess_frame(const cv::Mat& frame, const PreprocessOptions& options) {
  if (frame.empty()) throw ShapeError("preprocess_frame: empty image");
  const int short_side = std::min(frame.rows, frame.cols);
  const double scale = static_cast<double>(options.resize_short) / short_side;
  cv::Mat resized;
  cv::resize(frame, resized,
             cv::Size(std::max(options.crop,
                               static_cast<int>(std::lround(frame.cols * scale))),
                      std::max(options.crop,
                               static_cast<int>(std::lround(frame.rows * scale)))),
             0, 0, cv::INTER_LINEAR);
  const int x0 = (resized.cols - options.crop) / 2;
  const int y0 = (resized.rows - options.crop) / 2;
  return resized(cv::Rect(x0, y0, options.crop, options.crop)).clone();
}

std::vector<int> uniform_indices(int total, int n) {
  if (total <= 0) throw EmptyTrial("uniform_indices: empty input");
  if (n <= 0) throw ConfigError("uniform_indices: n must be positive");
  std::vector<int> indices(static_cast<size_t>(n));
  if (n == 1) {
    indices[0] = 0;
    return indices;
  }
  for (int i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * (total - 1) / (n - 1);
    indices[static_cast<size_t>(i)] = static_cast<int>(std::lround(pos));
  }
  return indices;
}

ClipInput sample_uniform_clip(const data::AlignedTrial& trial,
                              const std::vector<cv::Mat>& flow_fields, int n) {
  const int total = trial.frame_count();
  const auto indices = uniform_indices(total, n);

  ClipInput clip;
  clip.ft.resize(n, 6);
  clip.gripper.resize(n);
  for (int i = 0; i < n; ++i) {
    const int src = indices[static_cast<size_t>(i)];
    clip.ft.row(i) = trial.ft.row(src);
    clip.gripper(i) = trial.gripper(src);
  }
  if (!trial.frames.empty()) {
    if (static_cast<int>(trial.frames.size()) != total)
      throw ShapeError("sample_uniform_clip: frame count mismatch");
    clip.rgb.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      clip.rgb.push_back(trial.frames[static_cast<size_t>(
          indices[static_cast<size_t>(i)])]);
  }
  if (!flow_fields.empty()) {
    if (static_cast<int>(flow_fields.size()) != total)
      throw ShapeError("sample_uniform_clip: flow field count mismatch");
    clip.flow.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      clip.flow.push_back(flow_fields[static_cast<size_t>(
          indices[static_cast<size_t>(i)])]);
  }
  if (trial.labels) clip.label = trial.labels->outcome;
  return clip;
}

}  // namespace hfd::features
