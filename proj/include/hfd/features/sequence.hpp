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

#include <filesystem>
#include <optional>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/features/backbone.hpp"

namespace hfd::features {

// Per-frame model inputs for the segmentation networks.
struct FeatureSequence {
  data::TrialMeta meta;
  Eigen::MatrixXd backbone;  // T x 2048 (RGB 1024 + flow 1024)
  Eigen::MatrixXd ft;        // T x 6, normalized
  Eigen::VectorXd gripper;   // T, in {-0.5, 0, 0.5}
  std::optional<data::AnnotationTrack> labels;

  int frame_count() const { return static_cast<int>(backbone.rows()); }
};

inline constexpr int kBackboneWidth = 2048;

// Per-frame features from a causal 64-frame window ending at each frame
// (left-padded by repeating frame 0). RGB and flow stream features are
// concatenated; ft is normalized with the given stats. Flow fields must
// align with the trial's frames. Throws BackboneContractError when either
// encoder does not emit kBackboneWidth/2 features.
FeatureSequence extract_frame_features(const data::AlignedTrial& trial,
                                       const std::vector<cv::Mat>& flow_fields,
                                       const ClipEncoder& rgb_encoder,
                                       const ClipEncoder& flow_encoder,
                                       const data::NormalizationStats& stats,
                                       int window = 64);

// Cache layout: <dir>/<trial_id>.hfda with arrays backbone (f32), ft,
// gripper, plus <trial_id>.json sidecar carrying metadata, the backbone
// fingerprint and label tracks. Writes are atomic.
void save_feature_cache(const std::filesystem::path& dir,
                        const FeatureSequence& features,
                        const std::string& backbone_fingerprint);

// expected_fingerprint, when non-empty, must match the cached one
// (SchemaError otherwise).
FeatureSequence load_feature_cache(const std::filesystem::path& dir,
                                   const std::string& trial_id,
                                   const std::string& expected_fingerprint = "");

bool feature_cache_exists(const std::filesystem::path& dir,
                          const std::string& trial_id);

}  // namespace hfd::features
