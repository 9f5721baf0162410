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

#include "hfd/features/encoders.hpp"

#include "hfd/errors.hpp"

namespace hfd::features {

FtGripperEncoder::FtGripperEncoder(int out_channels, int in_channels)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      conv1_(in_channels, out_channels, 5),
      conv2_(out_channels, out_channels, 5) {}

void FtGripperEncoder::init(std::mt19937_64& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

Eigen::MatrixXd FtGripperEncoder::stack_inputs(const Eigen::MatrixXd& ft,
                                               const Eigen::VectorXd& gripper) {
  if (ft.cols() != 6)
    throw ShapeError("FtGripperEncoder: expected T x 6 F-T input");
  if (ft.rows() != gripper.size())
    throw ShapeError("FtGripperEncoder: F-T/gripper length mismatch");
  Eigen::MatrixXd input(kInputChannels, ft.rows());
  input.topRows(6) = ft.transpose();
  input.row(6) = gripper.transpose();
  return input;
}

Eigen::MatrixXd FtGripperEncoder::apply(const Eigen::MatrixXd& input) const {
  return conv2_.apply(conv1_.apply(input).cwiseMax(0.0));
}

Eigen::MatrixXd FtGripperEncoder::forward(const Eigen::MatrixXd& input) {
  return conv2_.forward(relu_.forward(conv1_.forward(input)));
}

Eigen::MatrixXd FtGripperEncoder::backward(const Eigen::MatrixXd& grad_out) {
  return conv1_.backward(relu_.backward(conv2_.backward(grad_out)));
}

void FtGripperEncoder::params(const std::string& prefix,
                              std::vector<nn::NamedParam>& out) {
  conv1_.params(prefix + "/conv1", out);
  conv2_.params(prefix + "/conv2", out);
}

}  // namespace hfd::features
