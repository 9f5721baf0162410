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

#include "hfd/data/normalization.hpp"

#include <cmath>
#include <iostream>

#include "hfd/errors.hpp"

namespace hfd::data {

NormalizationStats compute_ft_stats(const std::vector<Eigen::MatrixXd>& train_ft) {
  Eigen::Index total = 0;
  for (const auto& ft : train_ft) {
    if (ft.cols() != 6)
      throw ShapeError("compute_ft_stats: expected 6 channels, got " +
                       std::to_string(ft.cols()));
    total += ft.rows();
  }
  if (total == 0) throw EmptyList("compute_ft_stats: empty training pool");

  NormalizationStats stats;
  Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero();
  for (const auto& ft : train_ft) sum += ft.colwise().sum().transpose();
  stats.mean = sum / static_cast<double>(total);

  Eigen::Matrix<double, 6, 1> sq = Eigen::Matrix<double, 6, 1>::Zero();
  for (const auto& ft : train_ft) {
    Eigen::MatrixXd centered = ft.rowwise() - stats.mean.transpose();
    sq += centered.array().square().colwise().sum().matrix().transpose();
  }
  for (int c = 0; c < 6; ++c) {
    const double var = sq(c) / static_cast<double>(total);
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
      stats.std(c) = 1.0;
      stats.degenerate_channels.push_back(c);
      std::cerr << "warning: degenerate F-T channel " << c
                << " (zero std); using std=1\n";
    } else {
      stats.std(c) = sd;
    }
  }
  return stats;
}

Eigen::MatrixXd normalize_ft(const Eigen::MatrixXd& ft,
                             const NormalizationStats& stats) {
  if (ft.cols() != 6)
    throw ShapeError("normalize_ft: expected 6 channels, got " +
                     std::to_string(ft.cols()));
  Eigen::MatrixXd out = ft.rowwise() - stats.mean.transpose();
  for (int c = 0; c < 6; ++c) out.col(c) /= stats.std(c);
  return out;
}

}  // namespace hfd::data
