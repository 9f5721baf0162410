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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/features/backbone.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/nn/nn.hpp"

namespace hfd::models {

// Clip-level outcome classifiers over up to four input streams. Each
// variant groups the streams into "sides" that emit their own 5-class
// logits; the fused prediction is the arithmetic mean of the side logits.
//   A: every stream is its own side.
//   B: RGB, F-T and gripper features feed one FC head; flow stays apart.
//   C: mirror of B with the flow stream on the FC side.
//   D: F-T/gripper features join both the RGB side and the flow side.
// A single requested stream collapses every variant to the same model.
enum class FusionVariant { A, B, C, D };

FusionVariant parse_fusion_variant(const std::string& name);
std::string fusion_variant_name(FusionVariant variant);

enum class Stream { RGB, FLOW, FT, GRIPPER };
inline constexpr int kNumStreams = 4;

std::string stream_name(Stream s);
Stream parse_stream(const std::string& name);

using StreamSet = std::set<Stream>;

// Comma-separated stream names, e.g. "rgb,flow,ft,gripper".
StreamSet parse_streams(const std::string& csv);
std::string streams_name(const StreamSet& streams);

// Three-layer temporal convolution encoder with a global average pool,
// used for the raw F-T and gripper streams.
class SignalEncoder {
 public:
  SignalEncoder() = default;
  SignalEncoder(int in_channels, int channels);

  void init(std::mt19937_64& rng);

  int out_features() const { return channels_; }
  int in_channels() const { return in_channels_; }

  // x: in_channels x T.
  Eigen::VectorXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::VectorXd& grad_out);

  void params(const std::string& prefix, std::vector<nn::NamedParam>& out);

 private:
  int in_channels_ = 0;
  int channels_ = 0;
  nn::Conv1d conv1_, conv2_, conv3_;
  nn::ReLU relu1_, relu2_;
  Eigen::Index last_time_ = 0;
};

struct FusionConfig {
  FusionVariant variant = FusionVariant::D;
  StreamSet streams = {Stream::RGB, Stream::FLOW, Stream::FT,
                       Stream::GRIPPER};

  // Video encoders; image_channels is forced to 3 (RGB) and 2 (flow).
  features::BackboneConfig rgb_backbone;
  features::BackboneConfig flow_backbone;
  int signal_channels = 64;  // F-T/gripper encoder width

  // Restrict the softmax to the outcomes valid for a clip's task.
  bool mask_task_outcomes = false;
  // Default fine-tunes only the final video-encoder block plus heads.
  bool finetune_full_backbone = false;
  std::uint64_t seed = 0;
};

// Valid outcome classes per task: NO_GRASP occurs only in R2H handovers,
// NO_RELEASE only in H2R.
std::array<bool, data::kNumOutcomes> valid_outcomes(data::Task task);

struct SideLogits {
  std::string name;
  Eigen::VectorXd logits;  // 5
};

class FusionClassifier {
 public:
  explicit FusionClassifier(const FusionConfig& config);

  const FusionConfig& config() const { return config_; }
  int side_count() const { return static_cast<int>(sides_.size()); }
  std::vector<std::string> side_names() const;

  // Fused logits, pure inference path.
  Eigen::VectorXd apply(const features::ClipInput& clip) const;
  std::vector<SideLogits> side_logits(const features::ClipInput& clip) const;

  // Training path; backward takes one gradient per side.
  std::vector<SideLogits> forward(const features::ClipInput& clip);
  void backward(const std::vector<Eigen::VectorXd>& grad_sides);

  void params(std::vector<nn::NamedParam>& out);
  // Optimizer groups: heads (and from-scratch signal encoders) vs. the
  // fine-tuned part of the video backbones.
  void head_params(std::vector<nn::NamedParam>& out);
  void backbone_params(std::vector<nn::NamedParam>& out);

  std::mt19937_64& rng() { return rng_; }

 private:
  struct Side {
    std::string name;
    std::vector<Stream> inputs;  // canonical order
    nn::Linear head;
  };

  int stream_width(Stream s) const;
  void check_clip(const features::ClipInput& clip) const;
  std::array<Eigen::VectorXd, kNumStreams> pooled_apply(
      const features::ClipInput& clip) const;
  std::array<Eigen::VectorXd, kNumStreams> pooled_forward(
      const features::ClipInput& clip);
  Eigen::VectorXd side_input(
      const Side& side,
      const std::array<Eigen::VectorXd, kNumStreams>& pooled) const;

  FusionConfig config_;
  std::optional<features::ClipEncoder> rgb_enc_, flow_enc_;
  std::optional<SignalEncoder> ft_enc_, grip_enc_;
  std::vector<Side> sides_;
  std::mt19937_64 rng_;
};

// Mean of the side logits.
Eigen::VectorXd late_fuse(const std::vector<SideLogits>& sides);

// Argmax outcome; a mask (from valid_outcomes) suppresses invalid classes.
data::OutcomeLabel classify_outcome(
    const Eigen::VectorXd& logits,
    const std::array<bool, data::kNumOutcomes>* mask = nullptr);

struct LabeledClip {
  features::ClipInput clip;  // label must be set for training
  data::Task task = data::Task::R2H;
};

// Percent of clips whose fused argmax matches the label; applies the
// task mask when the model config asks for it.
double outcome_accuracy(const FusionClassifier& model,
                        const std::vector<LabeledClip>& clips);

struct ClsTrainConfig {
  int max_epochs = 50;
  int batch_size = 8;
  double lr_heads = 1e-2;
  double lr_backbone = 1e-3;
  int patience = 10;          // early stop on validation accuracy
  int plateau_patience = 3;   // epochs without improvement before halving
  std::uint64_t seed = 0;
};

struct ClsTrainHistory {
  std::vector<double> train_loss;  // per-epoch mean over sides and samples
  std::vector<double> train_acc;   // percent, end-of-epoch weights
  std::vector<double> val_acc;     // percent
  std::vector<double> lr_heads;    // records plateau halving
  int best_epoch = -1;
};

// Minimizes the mean per-side cross-entropy with stochastic gradient
// descent plus momentum (two rate groups: heads vs. fine-tuned backbone).
// Early stops on validation outcome accuracy and restores the best-epoch
// weights. DivergenceError on non-finite loss.
ClsTrainHistory train_classifier(FusionClassifier& model,
                                 const std::vector<LabeledClip>& train,
                                 const std::vector<LabeledClip>& val,
                                 const ClsTrainConfig& train_config);

// Checkpoint container: weights, config, outcome vocabulary, seed and the
// F-T normalization stats the features were produced with.
void save_fusion(const std::filesystem::path& path, FusionClassifier& model,
                 const std::optional<data::NormalizationStats>& stats = {});
FusionClassifier load_fusion(const std::filesystem::path& path,
                             data::NormalizationStats* stats = nullptr);

}  // namespace hfd::models
