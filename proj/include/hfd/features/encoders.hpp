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

#include "hfd/nn/nn.hpp"

namespace hfd::features {

// Learned temporal encoder for the raw F-T + gripper channels: two
// kernel-5 convolutions with a ReLU between, length-preserving. The caller
// owns training (parameters are exposed for joint optimization). in_channels
// shrinks when only a subset of the signals is fed in.
class FtGripperEncoder {
 public:
  static constexpr int kInputChannels = 7;

  explicit FtGripperEncoder(int out_channels = 64,
                            int in_channels = kInputChannels);

  void init(std::mt19937_64& rng);

  int out_channels() const { return out_channels_; }
  int in_channels() const { return in_channels_; }

  // ft: T x 6 (normalized), gripper: T. Returns channels x T.
  static Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& ft,
                                      const Eigen::VectorXd& gripper);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out);

  void params(const std::string& prefix, std::vector<nn::NamedParam>& out);

 private:
  int out_channels_ = 0;
  int in_channels_ = kInputChannels;
  nn::Conv1d conv1_, conv2_;
  nn::ReLU relu_;
};

}  // namespace hfd::features
