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

#include "hfd/models/mstcn.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "hfd/errors.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/io/array_file.hpp"

namespace hfd::models {

namespace d = hfd::data;
namespace f = hfd::features;
using nlohmann::json;

MstcnVariant parse_mstcn_variant(const std::string& name) {
  if (name == "a" || name == "A") return MstcnVariant::A;
  if (name == "b" || name == "B") return MstcnVariant::B;
  throw ConfigError("unknown MSTCN variant '" + name + "'");
}

std::string mstcn_variant_name(MstcnVariant variant) {
  return variant == MstcnVariant::A ? "a" : "b";
}

namespace {

constexpr int kStreamWidth = f::kBackboneWidth / 2;  // per video stream

void validate_config(const MstcnConfig& config) {
  if (config.layers_per_stage < 1 || config.channels < 1)
    throw ConfigError("mstcn: layers_per_stage and channels must be >= 1");
  if (!config.use_rgb && !config.use_flow && !config.use_ft &&
      !config.use_gripper)
    throw ConfigError("mstcn: no input modality enabled");
  if (config.head_robot && config.variant != MstcnVariant::B)
    throw ConfigError("mstcn: the robot head requires variant B");
  if (config.ftg_channels < 1)
    throw ConfigError("mstcn: ftg_channels must be >= 1");
}

int argmax_col(const Eigen::MatrixXd& m, Eigen::Index t) {
  Eigen::Index best = 0;
  m.col(t).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

int MstcnConfig::input_width() const {
  int width = 0;
  if (use_rgb) width += kStreamWidth;
  if (use_flow) width += kStreamWidth;
  if (use_ft || use_gripper) width += ftg_channels;
  return width;
}

SegTargets targets_from(const features::FeatureSequence& seq,
                        const MstcnConfig& config) {
  if (!seq.labels.has_value())
    throw MissingTarget("mstcn: sequence '" + seq.meta.trial_id +
                        "' carries no labels");
  SegTargets targets;
  targets.outcome = static_cast<int>(seq.labels->outcome);
  if (config.head_human) {
    if (seq.labels->human_actions.empty())
      throw MissingTarget("mstcn: empty human-action track");
    for (auto a : seq.labels->human_actions)
      targets.human.push_back(static_cast<int>(a));
  }
  if (config.head_robot) {
    if (seq.labels->robot_actions.empty())
      throw MissingTarget("mstcn: empty robot-action track");
    for (auto a : seq.labels->model_robot_actions())
      targets.robot.push_back(static_cast<int>(a));
  }
  return targets;
}

MstcnModel::MstcnModel(const MstcnConfig& config)
    : config_(config), rng_(config.seed) {
  validate_config(config_);
  has_ftg_ = config_.use_ft || config_.use_gripper;
  video_rows_ = (config_.use_rgb ? kStreamWidth : 0) +
                (config_.use_flow ? kStreamWidth : 0);

  if (has_ftg_) {
    const int in_rows = (config_.use_ft ? 6 : 0) + (config_.use_gripper ? 1 : 0);
    ftg_ = f::FtGripperEncoder(config_.ftg_channels, in_rows);
    ftg_.init(rng_);
  }

  stages_.resize(kMstcnStages);
  for (int s = 0; s < kMstcnStages; ++s) {
    Stage& stage = stages_[static_cast<size_t>(s)];
    const int in = s == 0 ? config_.input_width() : d::kNumHumanActions;
    stage.in_proj = nn::Conv1d(in, config_.channels, 1);
    stage.in_proj.init(rng_);
    for (int l = 0; l < config_.layers_per_stage; ++l) {
      ResidualLayer layer;
      layer.dilated = nn::Conv1d(config_.channels, config_.channels, 3, 1 << l);
      layer.pointwise = nn::Conv1d(config_.channels, config_.channels, 1);
      layer.drop = nn::Dropout(config_.dropout);
      layer.dilated.init(rng_);
      layer.pointwise.init(rng_);
      stage.layers.push_back(std::move(layer));
    }
    stage.head_human = nn::Conv1d(config_.channels, d::kNumHumanActions, 1);
    stage.head_human.init(rng_);
    stage.head_outcome = nn::Conv1d(config_.channels, d::kNumOutcomes, 1);
    stage.head_outcome.init(rng_);
    if (config_.variant == MstcnVariant::B) {
      stage.head_robot =
          nn::Conv1d(config_.channels, d::kNumRobotActionsModel, 1);
      stage.head_robot.init(rng_);
    }
  }
}

Eigen::MatrixXd MstcnModel::input_frame(
    const features::FeatureSequence& seq) const {
  // Establish T from whichever stream the config consumes.
  Eigen::Index t_len = -1;
  const auto check_len = [&](Eigen::Index len, const char* what) {
    if (t_len < 0) t_len = len;
    if (len != t_len)
      throw ShapeError(std::string("mstcn: stream length mismatch for ") +
                       what);
  };
  if (video_rows_ > 0) {
    if (seq.backbone.cols() != f::kBackboneWidth)
      throw ShapeError("mstcn: backbone features must be T x 2048");
    check_len(seq.backbone.rows(), "backbone");
  }
  if (config_.use_ft) {
    if (seq.ft.cols() != 6) throw ShapeError("mstcn: F-T must be T x 6");
    check_len(seq.ft.rows(), "ft");
  }
  if (config_.use_gripper) check_len(seq.gripper.size(), "gripper");
  if (t_len <= 0) throw EmptyTrial("mstcn: empty sequence");

  Eigen::MatrixXd input(config_.input_width(), t_len);
  Eigen::Index row = 0;
  if (config_.use_rgb) {
    input.middleRows(row, kStreamWidth) =
        seq.backbone.leftCols(kStreamWidth).transpose();
    row += kStreamWidth;
  }
  if (config_.use_flow)
    input.middleRows(row, kStreamWidth) =
        seq.backbone.rightCols(kStreamWidth).transpose();
  return input;
}

Eigen::MatrixXd MstcnModel::assemble_input(
    const features::FeatureSequence& seq) const {
  Eigen::MatrixXd input = input_frame(seq);
  if (has_ftg_)
    input.bottomRows(config_.ftg_channels) = ftg_.apply(ftg_block(seq));
  return input;
}

Eigen::MatrixXd MstcnModel::ftg_block(
    const features::FeatureSequence& seq) const {
  const Eigen::Index t_len = config_.use_ft ? seq.ft.rows() : seq.gripper.size();
  Eigen::MatrixXd block(ftg_.in_channels(), t_len);
  Eigen::Index row = 0;
  if (config_.use_ft) {
    block.topRows(6) = seq.ft.transpose();
    row = 6;
  }
  if (config_.use_gripper) block.row(row) = seq.gripper.transpose();
  return block;
}

Eigen::MatrixXd MstcnModel::stage_apply(const Stage& stage,
                                        const Eigen::MatrixXd& x,
                                        StageLogits* logits) const {
  Eigen::MatrixXd h = stage.in_proj.apply(x);
  for (const auto& layer : stage.layers)
    h += layer.pointwise.apply(layer.dilated.apply(h).cwiseMax(0.0));
  logits->human = stage.head_human.apply(h);
  logits->outcome = stage.head_outcome.apply(h);
  if (config_.variant == MstcnVariant::B)
    logits->robot = stage.head_robot.apply(h);
  return h;
}

Eigen::MatrixXd MstcnModel::stage_forward(Stage& stage,
                                          const Eigen::MatrixXd& x,
                                          StageLogits* logits) {
  Eigen::MatrixXd h = stage.in_proj.forward(x);
  for (auto& layer : stage.layers) {
    Eigen::MatrixXd branch =
        layer.pointwise.forward(layer.relu.forward(layer.dilated.forward(h)));
    if (layer.drop.rate() > 0.0) branch = layer.drop.forward(branch, rng_);
    h += branch;
  }
  logits->human = stage.head_human.forward(h);
  logits->outcome = stage.head_outcome.forward(h);
  if (config_.variant == MstcnVariant::B)
    logits->robot = stage.head_robot.forward(h);
  return h;
}

Eigen::MatrixXd MstcnModel::stage_backward(Stage& stage,
                                           const StageLogits& grad) {
  Eigen::MatrixXd g = stage.head_human.backward(grad.human);
  g += stage.head_outcome.backward(grad.outcome);
  if (config_.variant == MstcnVariant::B && grad.robot.size() > 0)
    g += stage.head_robot.backward(grad.robot);
  for (auto it = stage.layers.rbegin(); it != stage.layers.rend(); ++it) {
    Eigen::MatrixXd gb = it->drop.rate() > 0.0 ? it->drop.backward(g) : g;
    g += it->dilated.backward(it->relu.backward(it->pointwise.backward(gb)));
  }
  return stage.in_proj.backward(g);
}

std::vector<MstcnModel::StageLogits> MstcnModel::apply(
    const features::FeatureSequence& seq) const {
  std::vector<StageLogits> logits(kMstcnStages);
  const Eigen::MatrixXd input = assemble_input(seq);
  stage_apply(stages_[0], input, &logits[0]);
  const Eigen::MatrixXd probs = nn::softmax_cols(logits[0].human);
  stage_apply(stages_[1], probs, &logits[1]);
  return logits;
}

std::vector<MstcnModel::StageLogits> MstcnModel::forward(
    const features::FeatureSequence& seq) {
  std::vector<StageLogits> logits(kMstcnStages);
  Eigen::MatrixXd input = input_frame(seq);
  if (has_ftg_)
    input.bottomRows(config_.ftg_channels) = ftg_.forward(ftg_block(seq));
  stage_forward(stages_[0], input, &logits[0]);
  stage1_human_logits_ = logits[0].human;
  stage1_probs_ = nn::softmax_cols(logits[0].human);
  stage_forward(stages_[1], stage1_probs_, &logits[1]);
  return logits;
}

void MstcnModel::backward(const std::vector<StageLogits>& grad_logits) {
  if (grad_logits.size() != kMstcnStages)
    throw ShapeError("mstcn: expected one gradient block per stage");
  const Eigen::MatrixXd grad_probs =
      stage_backward(stages_[1], grad_logits[1]);
  StageLogits g1 = grad_logits[0];
  g1.human += nn::softmax_cols_backward(stage1_probs_, grad_probs);
  const Eigen::MatrixXd grad_input = stage_backward(stages_[0], g1);
  if (has_ftg_) ftg_.backward(grad_input.bottomRows(config_.ftg_channels));
}

void MstcnModel::params(std::vector<nn::NamedParam>& out) {
  if (has_ftg_) ftg_.params("ftg", out);
  for (int s = 0; s < kMstcnStages; ++s) {
    Stage& stage = stages_[static_cast<size_t>(s)];
    const std::string p = "stage" + std::to_string(s + 1);
    stage.in_proj.params(p + "/in_proj", out);
    for (size_t l = 0; l < stage.layers.size(); ++l) {
      const std::string lp = p + "/layer" + std::to_string(l);
      stage.layers[l].dilated.params(lp + "/dilated", out);
      stage.layers[l].pointwise.params(lp + "/pointwise", out);
    }
    stage.head_human.params(p + "/head_human", out);
    stage.head_outcome.params(p + "/head_outcome", out);
    if (config_.variant == MstcnVariant::B)
      stage.head_robot.params(p + "/head_robot", out);
  }
}

double loss_segcls(const std::vector<Eigen::MatrixXd>& stage_logp,
                   const std::vector<int>& targets,
                   std::vector<Eigen::MatrixXd>* grad) {
  if (grad) grad->clear();
  double loss = 0.0;
  for (const auto& logp : stage_logp) {
    const Eigen::Index t_len = logp.cols();
    if (static_cast<Eigen::Index>(targets.size()) != t_len)
      throw LengthMismatch("loss_segcls: target track length mismatch");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(logp.rows(), t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const int c = targets[static_cast<size_t>(t)];
      if (c < 0 || c >= logp.rows())
        throw InvariantViolation("loss_segcls: target out of class range");
      loss -= logp(c, t) / static_cast<double>(t_len);
      g(c, t) = -1.0 / static_cast<double>(t_len);
    }
    if (grad) grad->push_back(std::move(g));
  }
  return loss;
}

double loss_smooth(const std::vector<Eigen::MatrixXd>& stage_logp, double tau,
                   bool detach_prev, std::vector<Eigen::MatrixXd>* grad) {
  if (grad) grad->clear();
  double loss = 0.0;
  for (const auto& logp : stage_logp) {
    const Eigen::Index t_len = logp.cols(), classes = logp.rows();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(classes, t_len);
    if (t_len >= 2) {
      const double inv = 1.0 / static_cast<double>(t_len * classes);
      for (Eigen::Index t = 1; t < t_len; ++t)
        for (Eigen::Index c = 0; c < classes; ++c) {
          const double delta = logp(c, t) - logp(c, t - 1);
          const double m = std::min(std::abs(delta), tau);
          loss += m * m * inv;
          if (std::abs(delta) < tau) {
            const double gd = 2.0 * delta * inv;
            g(c, t) += gd;
            if (!detach_prev) g(c, t - 1) -= gd;
          }
        }
    }
    if (grad) grad->push_back(std::move(g));
  }
  return loss;
}

LossBreakdown loss_total(const std::vector<MstcnModel::StageLogits>& logits,
                         const SegTargets& targets, const MstcnConfig& config,
                         std::vector<MstcnModel::StageLogits>* grad) {
  LossBreakdown breakdown;
  const size_t stages = logits.size();
  if (grad) {
    grad->assign(stages, {});
    for (size_t s = 0; s < stages; ++s) {
      (*grad)[s].human =
          Eigen::MatrixXd::Zero(logits[s].human.rows(), logits[s].human.cols());
      (*grad)[s].outcome = Eigen::MatrixXd::Zero(logits[s].outcome.rows(),
                                                 logits[s].outcome.cols());
      if (logits[s].robot.size() > 0)
        (*grad)[s].robot = Eigen::MatrixXd::Zero(logits[s].robot.rows(),
                                                 logits[s].robot.cols());
    }
  }

  // Converts a per-head gradient over log-probabilities into a gradient
  // over that head's logits and adds it in.
  const auto add_head =
      [&](const std::vector<Eigen::MatrixXd>& logp,
          const std::vector<Eigen::MatrixXd>& grad_logp,
          Eigen::MatrixXd MstcnModel::StageLogits::* member) {
        if (!grad) return;
        for (size_t s = 0; s < stages; ++s)
          (*grad)[s].*member += nn::log_softmax_cols_backward(
              logits[s].*member, grad_logp[s]);
      };

  if (config.head_outcome) {
    if (targets.outcome < 0)
      throw MissingTarget("loss_total: outcome target missing");
    std::vector<Eigen::MatrixXd> logp;
    for (const auto& st : logits)
      logp.push_back(nn::log_softmax_cols(st.outcome));
    const std::vector<int> track(static_cast<size_t>(logp[0].cols()),
                                 targets.outcome);
    std::vector<Eigen::MatrixXd> g;
    breakdown.outcome = loss_segcls(logp, track, grad ? &g : nullptr);
    add_head(logp, g, &MstcnModel::StageLogits::outcome);
  }

  const auto add_seg = [&](const std::vector<int>& track,
                           Eigen::MatrixXd MstcnModel::StageLogits::* member,
                           const char* name, double* out_cls,
                           double* out_smooth) {
    if (track.empty())
      throw MissingTarget(std::string("loss_total: missing ") + name +
                          " track");
    std::vector<Eigen::MatrixXd> logp;
    for (const auto& st : logits) logp.push_back(nn::log_softmax_cols(st.*member));
    std::vector<Eigen::MatrixXd> g_cls, g_smooth;
    *out_cls = loss_segcls(logp, track, grad ? &g_cls : nullptr);
    *out_smooth = loss_smooth(logp, config.tau, config.smooth_detach_prev,
                              grad ? &g_smooth : nullptr);
    if (grad)
      for (size_t s = 0; s < logp.size(); ++s)
        g_cls[s] += config.lambda_smooth * g_smooth[s];
    add_head(logp, g_cls, member);
  };

  if (config.head_human)
    add_seg(targets.human, &MstcnModel::StageLogits::human, "human action",
            &breakdown.human_segcls, &breakdown.human_smooth);
  if (config.head_robot)
    add_seg(targets.robot, &MstcnModel::StageLogits::robot, "robot action",
            &breakdown.robot_segcls, &breakdown.robot_smooth);

  breakdown.total = breakdown.outcome + breakdown.human_segcls +
                    config.lambda_smooth * breakdown.human_smooth +
                    breakdown.robot_segcls +
                    config.lambda_smooth * breakdown.robot_smooth;
  return breakdown;
}

features::FeatureSequence resample_per_robot_action(
    const features::FeatureSequence& seq,
    const std::vector<data::RobotActionModel>& robot_track,
    int frames_per_action, ResampleMap* map) {
  const int t_len = static_cast<int>(robot_track.size());
  if (t_len == 0) throw EmptyTrial("resample: empty robot track");
  if (frames_per_action < 1)
    throw ConfigError("resample: frames_per_action must be >= 1");

  // Run-length encode; the model-facing track must be exactly
  // APPROACH, TRANSFER, RETRACT in order.
  std::vector<std::pair<int, int>> runs;  // (start, length) per action
  int start = 0;
  for (int t = 1; t <= t_len; ++t)
    if (t == t_len || robot_track[static_cast<size_t>(t)] !=
                          robot_track[static_cast<size_t>(start)]) {
      runs.emplace_back(start, t - start);
      start = t;
    }
  for (int a = 0; a < d::kNumRobotActionsModel; ++a) {
    const bool present = std::any_of(
        robot_track.begin(), robot_track.end(),
        [a](d::RobotActionModel r) { return static_cast<int>(r) == a; });
    if (!present)
      throw MissingSegment("resample: no frames for robot action '" +
                           d::label_name(static_cast<d::RobotActionModel>(a)) +
                           "'");
  }
  if (runs.size() != static_cast<size_t>(d::kNumRobotActionsModel))
    throw InvariantViolation("resample: robot track is not 3 ordered segments");

  std::vector<int> source;
  source.reserve(static_cast<size_t>(3 * frames_per_action));
  std::vector<int> inverse(static_cast<size_t>(t_len), -1);
  for (size_t k = 0; k < runs.size(); ++k) {
    const auto [run_start, run_len] = runs[k];
    const auto idx = f::uniform_indices(run_len, frames_per_action);
    const int out_base = static_cast<int>(k) * frames_per_action;
    for (int j = 0; j < frames_per_action; ++j)
      source.push_back(run_start + idx[static_cast<size_t>(j)]);
    // Nearest selected source index per original frame; ties take the
    // earlier resampled frame.
    for (int i = 0; i < run_len; ++i) {
      int best = 0;
      int best_dist = std::abs(idx[0] - i);
      for (int j = 1; j < frames_per_action; ++j) {
        const int dist = std::abs(idx[static_cast<size_t>(j)] - i);
        if (dist < best_dist) {
          best_dist = dist;
          best = j;
        }
      }
      inverse[static_cast<size_t>(run_start + i)] = out_base + best;
    }
  }

  features::FeatureSequence out;
  out.meta = seq.meta;
  const int out_len = static_cast<int>(source.size());
  if (seq.backbone.rows() > 0) {
    if (seq.backbone.rows() != t_len)
      throw ShapeError("resample: backbone/robot track length mismatch");
    out.backbone.resize(out_len, seq.backbone.cols());
    for (int j = 0; j < out_len; ++j)
      out.backbone.row(j) = seq.backbone.row(source[static_cast<size_t>(j)]);
  }
  if (seq.ft.rows() > 0) {
    if (seq.ft.rows() != t_len)
      throw ShapeError("resample: F-T/robot track length mismatch");
    out.ft.resize(out_len, seq.ft.cols());
    for (int j = 0; j < out_len; ++j)
      out.ft.row(j) = seq.ft.row(source[static_cast<size_t>(j)]);
  }
  if (seq.gripper.size() > 0) {
    if (seq.gripper.size() != t_len)
      throw ShapeError("resample: gripper/robot track length mismatch");
    out.gripper.resize(out_len);
    for (int j = 0; j < out_len; ++j)
      out.gripper(j) = seq.gripper(source[static_cast<size_t>(j)]);
  }
  if (seq.labels.has_value()) {
    d::AnnotationTrack track;
    track.outcome = seq.labels->outcome;
    for (int j = 0; j < out_len; ++j) {
      const auto src = static_cast<size_t>(source[static_cast<size_t>(j)]);
      if (src < seq.labels->human_actions.size())
        track.human_actions.push_back(seq.labels->human_actions[src]);
      if (src < seq.labels->robot_actions.size())
        track.robot_actions.push_back(seq.labels->robot_actions[src]);
    }
    out.labels = std::move(track);
  }
  if (map) {
    map->source_index = std::move(source);
    map->inverse_index = std::move(inverse);
  }
  return out;
}

SegmentationOutput predict(const MstcnModel& model,
                           const features::FeatureSequence& seq) {
  const auto logits = model.apply(seq);
  SegmentationOutput out;
  for (const auto& st : logits) {
    out.human_logp.push_back(nn::log_softmax_cols(st.human));
    out.outcome_logp.push_back(nn::log_softmax_cols(st.outcome));
    if (st.robot.size() > 0)
      out.robot_logp.push_back(nn::log_softmax_cols(st.robot));
  }
  const auto& human = out.human_logp.back();
  for (Eigen::Index t = 0; t < human.cols(); ++t)
    out.human_track.push_back(
        static_cast<d::HumanAction>(argmax_col(human, t)));
  const auto& outcome = out.outcome_logp.back();
  out.outcome =
      static_cast<d::OutcomeLabel>(argmax_col(outcome, outcome.cols() - 1));
  if (!out.robot_logp.empty()) {
    const auto& robot = out.robot_logp.back();
    for (Eigen::Index t = 0; t < robot.cols(); ++t)
      out.robot_track.push_back(
          static_cast<d::RobotActionModel>(argmax_col(robot, t)));
  }
  return out;
}

SegmentationOutput predict_resampled(
    const MstcnModel& model, const features::FeatureSequence& seq,
    const std::vector<data::RobotActionModel>& robot_track) {
  ResampleMap map;
  const auto resampled = resample_per_robot_action(
      seq, robot_track, model.config().segment_length, &map);
  SegmentationOutput out = predict(model, resampled);
  std::vector<d::HumanAction> track(map.inverse_index.size());
  for (size_t i = 0; i < map.inverse_index.size(); ++i)
    track[i] = out.human_track[static_cast<size_t>(map.inverse_index[i])];
  out.human_track = std::move(track);
  return out;
}

SegTrainHistory train_segmenter(
    MstcnModel& model, const std::vector<features::FeatureSequence>& train,
    const std::vector<features::FeatureSequence>& val,
    const SegTrainConfig& train_config) {
  if (train.empty()) throw EmptyList("train_segmenter: no training sequences");
  const MstcnConfig& config = model.config();

  std::vector<SegTargets> train_targets, val_targets;
  for (const auto& seq : train) train_targets.push_back(targets_from(seq, config));
  for (const auto& seq : val) val_targets.push_back(targets_from(seq, config));

  std::vector<nn::NamedParam> params;
  model.params(params);
  nn::Adam adam(train_config.lr);

  const auto validate = [&](double* outcome_acc, double* frame_acc) {
    long outcome_hit = 0, frames_hit = 0, frames_total = 0;
    for (size_t i = 0; i < val.size(); ++i) {
      const auto out = predict(model, val[i]);
      if (val_targets[i].outcome == static_cast<int>(out.outcome))
        ++outcome_hit;
      const auto& human = val_targets[i].human;
      for (size_t t = 0; t < human.size() && t < out.human_track.size(); ++t) {
        ++frames_total;
        if (human[t] == static_cast<int>(out.human_track[t])) ++frames_hit;
      }
    }
    *outcome_acc = val.empty() ? 0.0 : 100.0 * outcome_hit / val.size();
    *frame_acc = frames_total == 0 ? 0.0 : 100.0 * frames_hit / frames_total;
  };

  SegTrainHistory history;
  std::mt19937_64 order_rng(train_config.seed);
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_metric = -1.0;
  int epochs_since_best = 0;
  std::vector<Eigen::MatrixXd> best_weights;
  const auto snapshot = [&] {
    best_weights.clear();
    for (const auto& p : params) best_weights.push_back(*p.value);
  };

  for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (size_t i : order) {
      const auto logits = model.forward(train[i]);
      std::vector<MstcnModel::StageLogits> grads;
      const auto breakdown = loss_total(logits, train_targets[i], config, &grads);
      if (!std::isfinite(breakdown.total))
        throw DivergenceError("train_segmenter: non-finite loss at epoch " +
                              std::to_string(epoch));
      nn::zero_grads(params);
      model.backward(grads);
      adam.step(params);
      epoch_loss += breakdown.total;
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));

    double outcome_acc = 0.0, frame_acc = 0.0;
    if (!val.empty()) validate(&outcome_acc, &frame_acc);
    history.val_outcome_acc.push_back(outcome_acc);
    history.val_frame_acc.push_back(frame_acc);

    if (val.empty()) {
      history.best_epoch = epoch;
      continue;
    }
    // Early stopping follows outcome accuracy when that head is trained,
    // frame accuracy otherwise.
    const double metric = config.head_outcome ? outcome_acc : frame_acc;
    if (metric > best_metric) {
      best_metric = metric;
      history.best_epoch = epoch;
      epochs_since_best = 0;
      snapshot();
    } else if (++epochs_since_best >= train_config.patience) {
      break;
    }
  }

  if (!best_weights.empty())
    for (size_t i = 0; i < params.size(); ++i) *params[i].value = best_weights[i];
  return history;
}

void save_mstcn(const std::filesystem::path& path, MstcnModel& model) {
  const MstcnConfig& c = model.config();
  json human_names = json::array(), outcome_names = json::array(),
       robot_names = json::array();
  for (int i = 0; i < d::kNumHumanActions; ++i)
    human_names.push_back(d::label_name(static_cast<d::HumanAction>(i)));
  for (int i = 0; i < d::kNumOutcomes; ++i)
    outcome_names.push_back(d::label_name(static_cast<d::OutcomeLabel>(i)));
  for (int i = 0; i < d::kNumRobotActionsModel; ++i)
    robot_names.push_back(d::label_name(static_cast<d::RobotActionModel>(i)));

  const json meta = {
      {"format", "mstcn-checkpoint-v1"},
      {"config",
       {{"variant", mstcn_variant_name(c.variant)},
        {"layers_per_stage", c.layers_per_stage},
        {"channels", c.channels},
        {"lambda_smooth", c.lambda_smooth},
        {"tau", c.tau},
        {"segment_length", c.segment_length},
        {"use_rgb", c.use_rgb},
        {"use_flow", c.use_flow},
        {"use_ft", c.use_ft},
        {"use_gripper", c.use_gripper},
        {"ftg_channels", c.ftg_channels},
        {"head_human", c.head_human},
        {"head_outcome", c.head_outcome},
        {"head_robot", c.head_robot},
        {"smooth_detach_prev", c.smooth_detach_prev},
        {"dropout", c.dropout},
        {"seed", c.seed}}},
      {"human_actions", human_names},
      {"outcomes", outcome_names},
      {"robot_actions", robot_names}};

  io::ArrayFile file;
  file.metadata = meta.dump();
  std::vector<nn::NamedParam> params;
  model.params(params);
  for (const auto& p : params) file.set_matrix(p.name, *p.value);
  io::save_array_file(path, file);
}

MstcnModel load_mstcn(const std::filesystem::path& path) {
  const io::ArrayFile file = io::load_array_file(path);
  json meta;
  try {
    meta = json::parse(file.metadata);
  } catch (const json::exception& e) {
    throw SchemaError("mstcn checkpoint: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "mstcn-checkpoint-v1")
    throw SchemaError("mstcn checkpoint: unknown format in " + path.string());
  const json& c = meta.at("config");

  MstcnConfig config;
  config.variant = parse_mstcn_variant(c.value("variant", "a"));
  config.layers_per_stage = c.value("layers_per_stage", 10);
  config.channels = c.value("channels", 64);
  config.lambda_smooth = c.value("lambda_smooth", 0.15);
  config.tau = c.value("tau", 4.0);
  config.segment_length = c.value("segment_length", 100);
  config.use_rgb = c.value("use_rgb", true);
  config.use_flow = c.value("use_flow", true);
  config.use_ft = c.value("use_ft", true);
  config.use_gripper = c.value("use_gripper", true);
  config.ftg_channels = c.value("ftg_channels", 64);
  config.head_human = c.value("head_human", true);
  config.head_outcome = c.value("head_outcome", true);
  config.head_robot = c.value("head_robot", false);
  config.smooth_detach_prev = c.value("smooth_detach_prev", false);
  config.dropout = c.value("dropout", 0.0);
  config.seed = c.value("seed", static_cast<std::uint64_t>(0));

  MstcnModel model(config);
  std::vector<nn::NamedParam> params;
  model.params(params);
  for (auto& p : params) {
    if (!file.has(p.name))
      throw SchemaError("mstcn checkpoint: missing tensor " + p.name);
    const Eigen::MatrixXd m = file.matrix(p.name);
    if (m.rows() != p.value->rows() || m.cols() != p.value->cols())
      throw ShapeError("mstcn checkpoint: shape mismatch for " + p.name);
    *p.value = m;
  }
  return model;
}

}  // namespace hfd::models
