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

#include "hfd/features/backbone.hpp"

#include "hfd/errors.hpp"

namespace hfd::features {

ClipEncoder::ClipEncoder(const BackboneConfig& config)
    : config_(config),
      conv1_(input_width(), config.c1, 5),
      conv2_(config.c1, config.c2, 5),
      conv3_(config.c2, config.out_features, 3) {
  std::mt19937_64 rng(config_.seed);
  conv1_.init(rng);
  conv2_.init(rng);
  conv3_.init(rng);
}

std::string ClipEncoder::fingerprint() const {
  return "clipenc-ch" + std::to_string(config_.image_channels) + "-g" +
         std::to_string(config_.grid) + "-c" + std::to_string(config_.c1) +
         "-" + std::to_string(config_.c2) + "-o" +
         std::to_string(config_.out_features) + "-s" +
         std::to_string(config_.seed);
}

Eigen::VectorXd ClipEncoder::pool_frame(const cv::Mat& frame) const {
  if (frame.channels() != config_.image_channels)
    throw ShapeError("ClipEncoder: expected " +
                     std::to_string(config_.image_channels) +
                     "-channel frames, got " + std::to_string(frame.channels()));
  const int grid = config_.grid;
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(input_width());

  for (int gy = 0; gy < grid; ++gy) {
    const int y0 = frame.rows * gy / grid;
    const int y1 = frame.rows * (gy + 1) / grid;
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = frame.cols * gx / grid;
      const int x1 = frame.cols * (gx + 1) / grid;
      const int cell = gy * grid + gx;
      const double count = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          if (frame.type() == CV_8UC3) {
            const auto& px = frame.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c)
              pooled(c * grid * grid + cell) += px[c] / 127.5 - 1.0;
          } else if (frame.type() == CV_32FC2) {
            const auto& px = frame.at<cv::Vec2f>(y, x);
            for (int c = 0; c < 2; ++c)
              pooled(c * grid * grid + cell) += px[c];
          } else {
            throw ShapeError("ClipEncoder: unsupported frame type");
          }
        }
      for (int c = 0; c < config_.image_channels; ++c)
        pooled(c * grid * grid + cell) /= count;
    }
  }
  return pooled;
}

Eigen::MatrixXd ClipEncoder::pool_frames(
    const std::vector<cv::Mat>& frames) const {
  if (frames.empty()) throw EmptyTrial("ClipEncoder: no frames");
  Eigen::MatrixXd pooled(input_width(), static_cast<Eigen::Index>(frames.size()));
  for (size_t i = 0; i < frames.size(); ++i)
    pooled.col(static_cast<Eigen::Index>(i)) = pool_frame(frames[i]);
  return pooled;
}

Eigen::VectorXd ClipEncoder::encode(const Eigen::MatrixXd& pooled) const {
  const Eigen::MatrixXd h1 = conv1_.apply(pooled).cwiseMax(0.0);
  const Eigen::MatrixXd h2 = conv2_.apply(h1).cwiseMax(0.0);
  return nn::gap(conv3_.apply(h2));
}

Eigen::VectorXd ClipEncoder::forward(const Eigen::MatrixXd& pooled) {
  last_time_ = pooled.cols();
  const Eigen::MatrixXd h1 = relu1_.forward(conv1_.forward(pooled));
  const Eigen::MatrixXd h2 = relu2_.forward(conv2_.forward(h1));
  return nn::gap(conv3_.forward(h2));
}

Eigen::MatrixXd ClipEncoder::backward(const Eigen::VectorXd& grad_out) {
  Eigen::MatrixXd g = nn::gap_backward(grad_out, last_time_);
  g = conv3_.backward(g);
  g = conv2_.backward(relu2_.backward(g));
  return conv1_.backward(relu1_.backward(g));
}

void ClipEncoder::params(const std::string& prefix,
                         std::vector<nn::NamedParam>& out,
                         bool last_block_only) {
  if (!last_block_only) {
    conv1_.params(prefix + "/conv1", out);
    conv2_.params(prefix + "/conv2", out);
  }
  conv3_.params(prefix + "/conv3", out);
}

}  // namespace hfd::features
