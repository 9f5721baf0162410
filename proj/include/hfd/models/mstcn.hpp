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
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/features/encoders.hpp"
#include "hfd/features/sequence.hpp"
#include "hfd/nn/nn.hpp"

namespace hfd::models {

// Two-stage temporal convolutional segmenter over clip-level features. The
// first stage reads the assembled input, the second refines the first
// stage's human-action probabilities. Variant A runs on sequences resampled
// to a fixed length per robot action; variant B runs on raw-length
// sequences and adds a robot-action head.
enum class MstcnVariant { A, B };

MstcnVariant parse_mstcn_variant(const std::string& name);
std::string mstcn_variant_name(MstcnVariant variant);

inline constexpr int kMstcnStages = 2;

struct MstcnConfig {
  MstcnVariant variant = MstcnVariant::A;
  int layers_per_stage = 10;
  int channels = 64;
  double lambda_smooth = 0.15;  // weight of the smoothing term
  double tau = 4.0;             // truncation of |delta log prob|
  int segment_length = 100;     // variant A: frames per robot action

  // Input modalities. Video uses the cached backbone columns; F-T and
  // gripper run through a jointly trained FtGripperEncoder.
  bool use_rgb = true;
  bool use_flow = true;
  bool use_ft = true;
  bool use_gripper = true;
  int ftg_channels = 64;

  // Supervised heads (prediction heads always exist; robot only in B).
  bool head_human = true;
  bool head_outcome = true;
  bool head_robot = false;

  // Stop the gradient through the previous frame in the smoothing loss.
  bool smooth_detach_prev = false;
  double dropout = 0.0;
  std::uint64_t seed = 0;

  int input_width() const;
};

struct SegmentationOutput {
  // Per-stage per-frame log-probabilities, classes x T.
  std::vector<Eigen::MatrixXd> human_logp;
  std::vector<Eigen::MatrixXd> outcome_logp;
  std::vector<Eigen::MatrixXd> robot_logp;  // variant B only

  // Last-stage argmax per frame; outcome read at the final frame.
  std::vector<data::HumanAction> human_track;
  data::OutcomeLabel outcome = data::OutcomeLabel::SUCCESS;
  std::vector<data::RobotActionModel> robot_track;  // variant B only
};

struct SegTargets {
  std::vector<int> human;  // length T, 7 classes
  std::vector<int> robot;  // length T, 3 model classes (variant B)
  int outcome = -1;        // 5 classes
};

// Pulls targets out of a labeled sequence; MissingTarget when labels are
// absent or a supervised track is empty.
SegTargets targets_from(const features::FeatureSequence& seq,
                        const MstcnConfig& config);

class MstcnModel {
 public:
  struct StageLogits {
    Eigen::MatrixXd human;    // 7 x T
    Eigen::MatrixXd outcome;  // 5 x T
    Eigen::MatrixXd robot;    // 3 x T, empty unless variant B
  };

  explicit MstcnModel(const MstcnConfig& config);

  const MstcnConfig& config() const { return config_; }

  // Stacks the enabled modalities into the stage-1 input (width x T); the
  // F-T/gripper rows pass through the encoder's pure path.
  Eigen::MatrixXd assemble_input(const features::FeatureSequence& seq) const;

  // Pure inference path, safe on a const model.
  std::vector<StageLogits> apply(const features::FeatureSequence& seq) const;

  // Training path: caches activations for backward.
  std::vector<StageLogits> forward(const features::FeatureSequence& seq);
  void backward(const std::vector<StageLogits>& grad_logits);

  void params(std::vector<nn::NamedParam>& out);

  std::mt19937_64& rng() { return rng_; }

 private:
  struct ResidualLayer {
    nn::Conv1d dilated;    // kernel 3, dilation 2^l
    nn::Conv1d pointwise;  // kernel 1
    nn::ReLU relu;
    nn::Dropout drop;
  };
  struct Stage {
    nn::Conv1d in_proj;  // kernel 1 onto the trunk width
    std::vector<ResidualLayer> layers;
    nn::Conv1d head_human;
    nn::Conv1d head_outcome;
    nn::Conv1d head_robot;  // variant B only
  };

  Eigen::MatrixXd stage_apply(const Stage& stage, const Eigen::MatrixXd& x,
                              StageLogits* logits) const;
  Eigen::MatrixXd stage_forward(Stage& stage, const Eigen::MatrixXd& x,
                                StageLogits* logits);
  Eigen::MatrixXd stage_backward(Stage& stage, const StageLogits& grad);

  // Validates stream lengths and lays out the video rows, leaving the
  // encoded F-T/gripper rows for the caller to fill.
  Eigen::MatrixXd input_frame(const features::FeatureSequence& seq) const;
  Eigen::MatrixXd ftg_block(const features::FeatureSequence& seq) const;

  MstcnConfig config_;
  features::FtGripperEncoder ftg_;  // present when use_ft or use_gripper
  std::vector<Stage> stages_;
  std::mt19937_64 rng_;

  // Forward caches.
  Eigen::MatrixXd stage1_probs_;  // softmax of stage-1 human logits
  Eigen::MatrixXd stage1_human_logits_;
  bool has_ftg_ = false;
  Eigen::Index video_rows_ = 0;
};

// Negative ground-truth log-probability, mean over frames, summed over
// stages. Writes d(loss)/d(logp) when grad is non-null.
double loss_segcls(const std::vector<Eigen::MatrixXd>& stage_logp,
                   const std::vector<int>& targets,
                   std::vector<Eigen::MatrixXd>* grad = nullptr);

// Squared truncated consecutive-frame log-probability differences:
// per stage mean over T*C of min(|delta|, tau)^2, summed over stages.
// T = 1 contributes zero. detach_prev stops the gradient through the
// earlier frame of each pair.
double loss_smooth(const std::vector<Eigen::MatrixXd>& stage_logp, double tau,
                   bool detach_prev = false,
                   std::vector<Eigen::MatrixXd>* grad = nullptr);

struct LossBreakdown {
  double total = 0.0;
  double outcome = 0.0;
  double human_segcls = 0.0;
  double human_smooth = 0.0;
  double robot_segcls = 0.0;
  double robot_smooth = 0.0;
};

// Sum of the active heads' losses: outcome cross-entropy over all frames
// and stages, plus lambda-smoothed segmentation losses for the human and
// (variant B) robot tracks. Writes d(loss)/d(logits) when grad is non-null.
LossBreakdown loss_total(const std::vector<MstcnModel::StageLogits>& logits,
                         const SegTargets& targets, const MstcnConfig& config,
                         std::vector<MstcnModel::StageLogits>* grad = nullptr);

// Frame correspondence of a per-robot-action resampling.
struct ResampleMap {
  std::vector<int> source_index;   // per resampled frame: original frame
  std::vector<int> inverse_index;  // per original frame: resampled frame
};

// Resamples every model-facing robot-action segment to exactly
// frames_per_action frames by uniform index selection; label tracks follow
// the same indices. MissingSegment when an action has no frames.
features::FeatureSequence resample_per_robot_action(
    const features::FeatureSequence& seq,
    const std::vector<data::RobotActionModel>& robot_track,
    int frames_per_action, ResampleMap* map = nullptr);

// Last-stage predictions for a raw-length sequence (variant B or already
// resampled input).
SegmentationOutput predict(const MstcnModel& model,
                           const features::FeatureSequence& seq);

// Variant A: resample, predict, then map the human track back onto the
// original frames by nearest-source-index assignment.
SegmentationOutput predict_resampled(
    const MstcnModel& model, const features::FeatureSequence& seq,
    const std::vector<data::RobotActionModel>& robot_track);

struct SegTrainConfig {
  int max_epochs = 50;
  double lr = 5e-4;
  int patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 0;
};

struct SegTrainHistory {
  std::vector<double> train_loss;       // per-epoch mean over sequences
  std::vector<double> val_outcome_acc;  // percent
  std::vector<double> val_frame_acc;    // percent
  int best_epoch = -1;
};

// Adam over per-sequence steps with early stopping on validation outcome
// accuracy; the best-epoch weights are restored before returning. Variant A
// callers resample sequences beforehand. DivergenceError on non-finite loss.
SegTrainHistory train_segmenter(MstcnModel& model,
                                const std::vector<features::FeatureSequence>& train,
                                const std::vector<features::FeatureSequence>& val,
                                const SegTrainConfig& train_config);

// Checkpoint container: weights plus config, label vocabularies and seed.
void save_mstcn(const std::filesystem::path& path, MstcnModel& model);
MstcnModel load_mstcn(const std::filesystem::path& path);

}  // namespace hfd::models
