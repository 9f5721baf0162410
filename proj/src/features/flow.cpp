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

#include "hfd/features/flow.hpp"

#include <opencv2/imgproc.hpp>
#include <opencv2/optflow.hpp>
#include <opencv2/video.hpp>

#include "hfd/errors.hpp"

namespace hfd::features {

FlowAlgorithm parse_flow_algorithm(const std::string& name) {
  if (name == "tvl1") return FlowAlgorithm::TVL1;
  if (name == "dis") return FlowAlgorithm::DIS;
  if (name == "farneback") return FlowAlgorithm::FARNEBACK;
  throw ConfigError("unknown flow algorithm '" + name +
                    "' (expected tvl1, dis or farneback)");
}

std::string flow_algorithm_name(FlowAlgorithm alg) {
  switch (alg) {
    case FlowAlgorithm::TVL1: return "tvl1";
    case FlowAlgorithm::DIS: return "dis";
    case FlowAlgorithm::FARNEBACK: return "farneback";
  }
  return "?";
}

namespace {

cv::Mat to_gray(const cv::Mat& frame) {
  if (frame.channels() == 1) return frame;
  cv::Mat gray;
  cv::cvtColor(frame, gray, cv::COLOR_BGR2GRAY);
  return gray;
}

}  // namespace

std::vector<cv::Mat> compute_optical_flow(const std::vector<cv::Mat>& frames,
                                          FlowAlgorithm alg) {
  if (frames.empty()) return {};

  cv::Ptr<cv::DenseOpticalFlow> engine;
  switch (alg) {
    case FlowAlgorithm::TVL1:
      engine = cv::optflow::createOptFlow_DualTVL1();
      break;
    case FlowAlgorithm::DIS:
      engine = cv::DISOpticalFlow::create(cv::DISOpticalFlow::PRESET_FAST);
      break;
    case FlowAlgorithm::FARNEBACK:
      engine = cv::FarnebackOpticalFlow::create();
      break;
  }

  std::vector<cv::Mat> fields;
  fields.reserve(frames.size());
  fields.push_back(
      cv::Mat::zeros(frames[0].rows, frames[0].cols, CV_32FC2));

  cv::Mat prev = to_gray(frames[0]);
  for (size_t i = 1; i < frames.size(); ++i) {
    cv::Mat next = to_gray(frames[i]);
    // Zero-filled destination: the DIS kernel in OpenCV 4.5 reads the output
    // buffer before fully writing it, crashing on garbage contents.
    cv::Mat flow = cv::Mat::zeros(prev.rows, prev.cols, CV_32FC2);
    engine->calc(prev, next, flow);
    // Clip to +-kFlowClipPixels, rescale to [-1, 1].
    for (int r = 0; r < flow.rows; ++r) {
      auto* row = flow.ptr<cv::Vec2f>(r);
      for (int c = 0; c < flow.cols; ++c)
        for (int k = 0; k < 2; ++k) {
          const float v = std::max(-static_cast<float>(kFlowClipPixels),
                                   std::min(static_cast<float>(kFlowClipPixels),
                                            row[c][k]));
          row[c][k] = v / static_cast<float>(kFlowClipPixels);
        }
    }
    fields.push_back(flow);
    prev = next;
  }
  return fields;
}

}  // namespace hfd::features
