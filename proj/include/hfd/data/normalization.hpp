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

#include <vector>

#include "hfd/data/types.hpp"

namespace hfd::data {

// Per-channel mean and population std over all frames of the training pool.
// Channels with zero std are forced to 1 and reported in
// stats.degenerate_channels.
NormalizationStats compute_ft_stats(const std::vector<Eigen::MatrixXd>& train_ft);

Eigen::MatrixXd normalize_ft(const Eigen::MatrixXd& ft,
                             const NormalizationStats& stats);

}  // namespace hfd::data
