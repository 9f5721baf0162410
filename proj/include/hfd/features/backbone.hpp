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

#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "hfd/nn/nn.hpp"

namespace hfd::features {

struct BackboneConfig {
  int image_channels = 3;   // 3 for RGB clips, 2 for flow clips
  int grid = 4;             // spatial average-pool grid
  int c1 = 64;              // temporal stack widths
  int c2 = 128;
  int out_features = 1024;
  std::uint64_t seed = 1;
};

// Spatiotemporal clip encoder: per-frame spatial patch-average pooling into
// a grid*grid*channels vector, then a three-layer temporal convolution
// stack (kernels 5,5,3) pooled over time to a fixed-width feature. Weights
// are deterministic in the seed; the final conv is the "last block" for
// partial fine-tuning.
class ClipEncoder {
 public:
  ClipEncoder() = default;
  explicit ClipEncoder(const BackboneConfig& config);

  const BackboneConfig& config() const { return config_; }
  int input_width() const {
    return config_.grid * config_.grid * config_.image_channels;
  }
  int out_features() const { return config_.out_features; }

  // Cache key component: changes whenever features would change.
  std::string fingerprint() const;

  // frame: 8UC3 (scaled to [-1,1]) or 32FC2 taken as-is.
  Eigen::VectorXd pool_frame(const cv::Mat& frame) const;
  Eigen::MatrixXd pool_frames(const std::vector<cv::Mat>& frames) const;

  // pooled: input_width x clip_length.
  Eigen::VectorXd encode(const Eigen::MatrixXd& pooled) const;

  Eigen::VectorXd forward(const Eigen::MatrixXd& pooled);
  Eigen::MatrixXd backward(const Eigen::VectorXd& grad_out);

  // Trainable parameter refs; last_block_only exposes the final conv.
  void params(const std::string& prefix, std::vector<nn::NamedParam>& out,
              bool last_block_only = false);

 private:
  BackboneConfig config_;
  nn::Conv1d conv1_, conv2_, conv3_;
  nn::ReLU relu1_, relu2_;
  Eigen::Index last_time_ = 0;
};

}  // namespace hfd::features
