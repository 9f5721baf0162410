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

#include "hfd/features/sequence.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "hfd/data/normalization.hpp"
#include "hfd/errors.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/io/array_file.hpp"

namespace hfd::features {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Window of `window` pooled columns ending at frame t, left-padded by
// repeating column 0.
Eigen::MatrixXd causal_window(const Eigen::MatrixXd& pooled, int t, int window) {
  Eigen::MatrixXd win(pooled.rows(), window);
  for (int i = 0; i < window; ++i) {
    const int src = std::max(0, t - window + 1 + i);
    win.col(i) = pooled.col(src);
  }
  return win;
}

}  // namespace

FeatureSequence extract_frame_features(const data::AlignedTrial& trial,
                                       const std::vector<cv::Mat>& flow_fields,
                                       const ClipEncoder& rgb_encoder,
                                       const ClipEncoder& flow_encoder,
                                       const data::NormalizationStats& stats,
                                       int window) {
  const int frames = trial.frame_count();
  if (frames == 0) throw EmptyTrial(trial.meta.trial_id + ": no frames");
  if (trial.frames.size() != static_cast<size_t>(frames))
    throw ShapeError(trial.meta.trial_id + ": frames not loaded");
  if (flow_fields.size() != static_cast<size_t>(frames))
    throw ShapeError(trial.meta.trial_id + ": flow field count mismatch");
  const int half = kBackboneWidth / 2;
  if (rgb_encoder.out_features() != half || flow_encoder.out_features() != half)
    throw BackboneContractError(
        "encoders must emit " + std::to_string(half) + " features per stream");

  // Spatial pooling once per frame, then one temporal window per feature row.
  std::vector<cv::Mat> preprocessed(trial.frames.size());
  for (size_t i = 0; i < trial.frames.size(); ++i)
    preprocessed[i] = preprocess_frame(trial.frames[i]);
  const Eigen::MatrixXd rgb_pooled = rgb_encoder.pool_frames(preprocessed);
  const Eigen::MatrixXd flow_pooled = flow_encoder.pool_frames(flow_fields);

  FeatureSequence seq;
  seq.meta = trial.meta;
  seq.backbone.resize(frames, kBackboneWidth);
  for (int t = 0; t < frames; ++t) {
    seq.backbone.row(t).head(half) =
        rgb_encoder.encode(causal_window(rgb_pooled, t, window)).transpose();
    seq.backbone.row(t).tail(half) =
        flow_encoder.encode(causal_window(flow_pooled, t, window)).transpose();
  }
  seq.ft = data::normalize_ft(trial.ft, stats);
  seq.gripper = trial.gripper;
  seq.labels = trial.labels;
  return seq;
}

namespace {

json track_to_json(const data::AnnotationTrack& track) {
  json j;
  j["outcome"] = data::label_name(track.outcome);
  auto& human = j["human_actions"] = json::array();
  for (auto a : track.human_actions) human.push_back(static_cast<int>(a));
  auto& robot = j["robot_actions"] = json::array();
  for (auto a : track.robot_actions) robot.push_back(static_cast<int>(a));
  return j;
}

data::AnnotationTrack track_from_json(const json& j) {
  data::AnnotationTrack track;
  track.outcome = data::parse_outcome(j.at("outcome").get<std::string>());
  for (const auto& v : j.at("human_actions"))
    track.human_actions.push_back(static_cast<data::HumanAction>(v.get<int>()));
  for (const auto& v : j.at("robot_actions"))
    track.robot_actions.push_back(
        static_cast<data::RobotActionFull>(v.get<int>()));
  return track;
}

fs::path array_path(const fs::path& dir, const std::string& trial_id) {
  return dir / (trial_id + ".hfda");
}
fs::path sidecar_path(const fs::path& dir, const std::string& trial_id) {
  return dir / (trial_id + ".json");
}

}  // namespace

void save_feature_cache(const fs::path& dir, const FeatureSequence& features,
                        const std::string& backbone_fingerprint) {
  fs::create_directories(dir);

  io::ArrayFile file;
  file.metadata = backbone_fingerprint;
  file.set_matrix("backbone", features.backbone, /*as_f32=*/true);
  file.set_matrix("ft", features.ft);
  file.set_vector("gripper", features.gripper);
  io::save_array_file(array_path(dir, features.meta.trial_id), file);

  json side;
  side["trial_id"] = features.meta.trial_id;
  side["robot"] = data::label_name(features.meta.platform);
  side["task"] = data::label_name(features.meta.task);
  side["participant_id"] = features.meta.participant_id;
  side["object_class"] = features.meta.object_class;
  side["backbone_fingerprint"] = backbone_fingerprint;
  if (features.labels) side["labels"] = track_to_json(*features.labels);

  const fs::path target = sidecar_path(dir, features.meta.trial_id);
  const fs::path tmp = target.string() + ".tmp";
  std::ofstream(tmp) << side.dump(2);
  fs::rename(tmp, target);
}

bool feature_cache_exists(const fs::path& dir, const std::string& trial_id) {
  return fs::exists(array_path(dir, trial_id)) &&
         fs::exists(sidecar_path(dir, trial_id));
}

FeatureSequence load_feature_cache(const fs::path& dir,
                                   const std::string& trial_id,
                                   const std::string& expected_fingerprint) {
  const fs::path apath = array_path(dir, trial_id);
  const fs::path spath = sidecar_path(dir, trial_id);
  if (!fs::exists(apath) || !fs::exists(spath))
    throw MissingStream("no cached features for trial '" + trial_id + "' in " +
                        dir.string());

  json side;
  try {
    std::ifstream in(spath);
    side = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(spath.string() + ": " + e.what());
  }
  if (!expected_fingerprint.empty() &&
      side.value("backbone_fingerprint", "") != expected_fingerprint)
    throw SchemaError(spath.string() + ": cached with backbone '" +
                      side.value("backbone_fingerprint", "") +
                      "', expected '" + expected_fingerprint + "'");

  const io::ArrayFile file = io::load_array_file(apath);
  FeatureSequence seq;
  seq.meta.trial_id = side.at("trial_id").get<std::string>();
  seq.meta.platform = data::parse_platform(side.at("robot").get<std::string>());
  seq.meta.task = data::parse_task(side.at("task").get<std::string>());
  seq.meta.participant_id = side.at("participant_id").get<std::string>();
  seq.meta.object_class = side.at("object_class").get<std::string>();
  seq.backbone = file.matrix("backbone");
  seq.ft = file.matrix("ft");
  seq.gripper = file.vector("gripper");
  if (side.contains("labels")) seq.labels = track_from_json(side["labels"]);

  if (seq.backbone.cols() != kBackboneWidth)
    throw SchemaError(apath.string() + ": backbone width " +
                      std::to_string(seq.backbone.cols()));
  if (seq.ft.rows() != seq.backbone.rows() ||
      seq.gripper.size() != seq.backbone.rows())
    throw SchemaError(apath.string() + ": stream length mismatch");
  return seq;
}

}  // namespace hfd::features
