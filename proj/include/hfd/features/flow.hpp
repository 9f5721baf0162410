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

#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace hfd::features {

enum class FlowAlgorithm { TVL1, DIS, FARNEBACK };

FlowAlgorithm parse_flow_algorithm(const std::string& name);
std::string flow_algorithm_name(FlowAlgorithm alg);

inline constexpr double kFlowClipPixels = 20.0;

// Dense optical flow between consecutive frames, one 32FC2 field per input
// frame. Field t holds the flow from frame t-1 to frame t; field 0 is
// zero-filled so lengths match. Values are clipped to +-kFlowClipPixels and
// rescaled to [-1, 1].
std::vector<cv::Mat> compute_optical_flow(const std::vector<cv::Mat>& frames,
                                          FlowAlgorithm alg = FlowAlgorithm::TVL1);

}  // namespace hfd::features
