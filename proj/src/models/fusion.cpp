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

#include "hfd/models/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hfd/errors.hpp"
#include "hfd/io/array_file.hpp"

namespace hfd::models {

namespace f = features;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

constexpr double kMaskedLogit = -1e30;

// Cross-entropy with task-invalid classes pushed out of the softmax.
double masked_cross_entropy(const Eigen::VectorXd& logits, int target,
                            const std::array<bool, data::kNumOutcomes>* mask,
                            Eigen::VectorXd* grad) {
  if (mask == nullptr) return nn::cross_entropy(logits, target, grad);
  if (!(*mask)[static_cast<size_t>(target)])
    throw InvariantViolation("outcome label is not valid for the clip's task");
  Eigen::VectorXd masked = logits;
  for (int c = 0; c < data::kNumOutcomes; ++c)
    if (!(*mask)[static_cast<size_t>(c)]) masked(c) = kMaskedLogit;
  return nn::cross_entropy(masked, target, grad);
}

}  // namespace

FusionVariant parse_fusion_variant(const std::string& name) {
  std::string s = lower(name);
  if (s.rfind("i3d-", 0) == 0) s = s.substr(4);
  if (s == "a") return FusionVariant::A;
  if (s == "b") return FusionVariant::B;
  if (s == "c") return FusionVariant::C;
  if (s == "d") return FusionVariant::D;
  throw ConfigError("unknown fusion variant: " + name);
}

std::string fusion_variant_name(FusionVariant variant) {
  switch (variant) {
    case FusionVariant::A: return "a";
    case FusionVariant::B: return "b";
    case FusionVariant::C: return "c";
    case FusionVariant::D: return "d";
  }
  throw ConfigError("unknown fusion variant");
}

std::string stream_name(Stream s) {
  switch (s) {
    case Stream::RGB: return "rgb";
    case Stream::FLOW: return "flow";
    case Stream::FT: return "ft";
    case Stream::GRIPPER: return "gripper";
  }
  throw ConfigError("unknown stream");
}

Stream parse_stream(const std::string& name) {
  const std::string s = lower(name);
  if (s == "rgb" || s == "v" || s == "video") return Stream::RGB;
  if (s == "flow" || s == "of") return Stream::FLOW;
  if (s == "ft" || s == "f-t") return Stream::FT;
  if (s == "gripper" || s == "g") return Stream::GRIPPER;
  throw ConfigError("unknown stream: " + name);
}

StreamSet parse_streams(const std::string& csv) {
  StreamSet out;
  std::string token;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!token.empty()) out.insert(parse_stream(token));
      token.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      token.push_back(c);
    }
  }
  return out;
}

std::string streams_name(const StreamSet& streams) {
  std::string out;
  for (Stream s : streams) {
    if (!out.empty()) out += ",";
    out += stream_name(s);
  }
  return out;
}

std::array<bool, data::kNumOutcomes> valid_outcomes(data::Task task) {
  std::array<bool, data::kNumOutcomes> mask;
  mask.fill(true);
  if (task == data::Task::R2H)
    mask[static_cast<size_t>(data::OutcomeLabel::NO_RELEASE)] = false;
  else
    mask[static_cast<size_t>(data::OutcomeLabel::NO_GRASP)] = false;
  return mask;
}

SignalEncoder::SignalEncoder(int in_channels, int channels)
    : in_channels_(in_channels), channels_(channels) {
  if (in_channels < 1 || channels < 1)
    throw ConfigError("SignalEncoder: channel counts must be positive");
  conv1_ = nn::Conv1d(in_channels, channels, 5);
  conv2_ = nn::Conv1d(channels, channels, 5);
  conv3_ = nn::Conv1d(channels, channels, 3);
}

void SignalEncoder::init(std::mt19937_64& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  conv3_.init(rng);
}

Eigen::VectorXd SignalEncoder::apply(const Eigen::MatrixXd& x) const {
  return nn::gap(conv3_.apply(
      conv2_.apply(conv1_.apply(x).cwiseMax(0.0)).cwiseMax(0.0)));
}

Eigen::VectorXd SignalEncoder::forward(const Eigen::MatrixXd& x) {
  last_time_ = x.cols();
  return nn::gap(conv3_.forward(
      relu2_.forward(conv2_.forward(relu1_.forward(conv1_.forward(x))))));
}

Eigen::MatrixXd SignalEncoder::backward(const Eigen::VectorXd& grad_out) {
  Eigen::MatrixXd g = nn::gap_backward(grad_out, last_time_);
  g = relu1_.backward(conv2_.backward(relu2_.backward(conv3_.backward(g))));
  return conv1_.backward(g);
}

void SignalEncoder::params(const std::string& prefix,
                           std::vector<nn::NamedParam>& out) {
  conv1_.params(prefix + "/conv1", out);
  conv2_.params(prefix + "/conv2", out);
  conv3_.params(prefix + "/conv3", out);
}

FusionClassifier::FusionClassifier(const FusionConfig& config)
    : config_(config), rng_(config.seed) {
  if (config_.streams.empty())
    throw TopologyError("at least one input stream is required");
  if (config_.signal_channels < 1)
    throw ConfigError("signal_channels must be positive");
  config_.rgb_backbone.image_channels = 3;
  config_.flow_backbone.image_channels = 2;

  const auto has = [&](Stream s) { return config_.streams.count(s) > 0; };
  if (has(Stream::RGB)) rgb_enc_.emplace(config_.rgb_backbone);
  if (has(Stream::FLOW)) flow_enc_.emplace(config_.flow_backbone);
  if (has(Stream::FT)) ft_enc_.emplace(6, config_.signal_channels);
  if (has(Stream::GRIPPER)) grip_enc_.emplace(1, config_.signal_channels);

  // Side layout. A single stream collapses every variant to one side.
  const auto side_of = [&](std::string name, std::vector<Stream> inputs) {
    int width = 0;
    for (Stream s : inputs) width += stream_width(s);
    Side side{std::move(name), std::move(inputs), nn::Linear(width, 5)};
    sides_.push_back(std::move(side));
  };
  const auto subset = [&](std::initializer_list<Stream> pick) {
    std::vector<Stream> out;
    for (Stream s : pick)
      if (has(s)) out.push_back(s);
    return out;
  };

  if (config_.streams.size() == 1) {
    const Stream only = *config_.streams.begin();
    side_of(stream_name(only), {only});
  } else {
    switch (config_.variant) {
      case FusionVariant::A:
        for (Stream s : config_.streams) side_of(stream_name(s), {s});
        break;
      case FusionVariant::B:
        side_of("fused",
                subset({Stream::RGB, Stream::FT, Stream::GRIPPER}));
        if (has(Stream::FLOW)) side_of("flow", {Stream::FLOW});
        break;
      case FusionVariant::C:
        side_of("fused",
                subset({Stream::FLOW, Stream::FT, Stream::GRIPPER}));
        if (has(Stream::RGB)) side_of("rgb", {Stream::RGB});
        break;
      case FusionVariant::D:
        if (!has(Stream::RGB) || !has(Stream::FLOW))
          throw TopologyError(
              "variant D fuses F-T/gripper into both video streams and "
              "needs rgb and flow");
        side_of("rgb_fused",
                subset({Stream::RGB, Stream::FT, Stream::GRIPPER}));
        side_of("flow_fused",
                subset({Stream::FLOW, Stream::FT, Stream::GRIPPER}));
        break;
    }
  }

  // Video encoders are seeded by their own configs (pretrained stand-in);
  // the classifier seed drives the from-scratch parts.
  if (ft_enc_) ft_enc_->init(rng_);
  if (grip_enc_) grip_enc_->init(rng_);
  for (auto& side : sides_) side.head.init(rng_);
}

std::vector<std::string> FusionClassifier::side_names() const {
  std::vector<std::string> out;
  for (const auto& side : sides_) out.push_back(side.name);
  return out;
}

int FusionClassifier::stream_width(Stream s) const {
  switch (s) {
    case Stream::RGB: return config_.rgb_backbone.out_features;
    case Stream::FLOW: return config_.flow_backbone.out_features;
    case Stream::FT:
    case Stream::GRIPPER: return config_.signal_channels;
  }
  throw ConfigError("unknown stream");
}

void FusionClassifier::check_clip(const features::ClipInput& clip) const {
  const auto has = [&](Stream s) { return config_.streams.count(s) > 0; };
  const auto want = [&](const char* what, Eigen::Index got) {
    if (got != f::kClipLength)
      throw ShapeError(std::string(what) + ": expected " +
                       std::to_string(f::kClipLength) + " frames, got " +
                       std::to_string(got));
  };
  if (has(Stream::RGB)) want("rgb clip", static_cast<Eigen::Index>(clip.rgb.size()));
  if (has(Stream::FLOW))
    want("flow clip", static_cast<Eigen::Index>(clip.flow.size()));
  if (has(Stream::FT)) {
    want("f-t clip", clip.ft.rows());
    if (clip.ft.cols() != 6)
      throw ShapeError("f-t clip: expected 6 channels, got " +
                       std::to_string(clip.ft.cols()));
  }
  if (has(Stream::GRIPPER)) want("gripper clip", clip.gripper.size());
}

std::array<Eigen::VectorXd, kNumStreams> FusionClassifier::pooled_apply(
    const features::ClipInput& clip) const {
  check_clip(clip);
  std::array<Eigen::VectorXd, kNumStreams> pooled;
  if (rgb_enc_)
    pooled[0] = rgb_enc_->encode(rgb_enc_->pool_frames(clip.rgb));
  if (flow_enc_)
    pooled[1] = flow_enc_->encode(flow_enc_->pool_frames(clip.flow));
  if (ft_enc_) pooled[2] = ft_enc_->apply(clip.ft.transpose());
  if (grip_enc_) pooled[3] = grip_enc_->apply(clip.gripper.transpose());
  return pooled;
}

std::array<Eigen::VectorXd, kNumStreams> FusionClassifier::pooled_forward(
    const features::ClipInput& clip) {
  check_clip(clip);
  std::array<Eigen::VectorXd, kNumStreams> pooled;
  if (rgb_enc_) pooled[0] = rgb_enc_->forward(rgb_enc_->pool_frames(clip.rgb));
  if (flow_enc_)
    pooled[1] = flow_enc_->forward(flow_enc_->pool_frames(clip.flow));
  if (ft_enc_) pooled[2] = ft_enc_->forward(clip.ft.transpose());
  if (grip_enc_) pooled[3] = grip_enc_->forward(clip.gripper.transpose());
  return pooled;
}

Eigen::VectorXd FusionClassifier::side_input(
    const Side& side,
    const std::array<Eigen::VectorXd, kNumStreams>& pooled) const {
  int width = 0;
  for (Stream s : side.inputs) width += stream_width(s);
  Eigen::VectorXd x(width);
  int at = 0;
  for (Stream s : side.inputs) {
    const auto& part = pooled[static_cast<size_t>(s)];
    x.segment(at, part.size()) = part;
    at += static_cast<int>(part.size());
  }
  return x;
}

std::vector<SideLogits> FusionClassifier::side_logits(
    const features::ClipInput& clip) const {
  const auto pooled = pooled_apply(clip);
  std::vector<SideLogits> out;
  for (const auto& side : sides_)
    out.push_back({side.name, side.head.apply(side_input(side, pooled))});
  return out;
}

Eigen::VectorXd FusionClassifier::apply(const features::ClipInput& clip) const {
  return late_fuse(side_logits(clip));
}

std::vector<SideLogits> FusionClassifier::forward(
    const features::ClipInput& clip) {
  const auto pooled = pooled_forward(clip);
  std::vector<SideLogits> out;
  for (auto& side : sides_)
    out.push_back({side.name, side.head.forward(side_input(side, pooled))});
  return out;
}

void FusionClassifier::backward(
    const std::vector<Eigen::VectorXd>& grad_sides) {
  if (grad_sides.size() != sides_.size())
    throw ShapeError("backward: expected " + std::to_string(sides_.size()) +
                     " side gradients, got " +
                     std::to_string(grad_sides.size()));
  std::array<Eigen::VectorXd, kNumStreams> grad_pooled;
  for (size_t i = 0; i < sides_.size(); ++i) {
    auto& side = sides_[i];
    const Eigen::VectorXd g = side.head.backward(grad_sides[i]);
    int at = 0;
    for (Stream s : side.inputs) {
      const int width = stream_width(s);
      auto& acc = grad_pooled[static_cast<size_t>(s)];
      if (acc.size() == 0) acc = Eigen::VectorXd::Zero(width);
      acc += g.segment(at, width);
      at += width;
    }
  }
  if (rgb_enc_ && grad_pooled[0].size() > 0) rgb_enc_->backward(grad_pooled[0]);
  if (flow_enc_ && grad_pooled[1].size() > 0)
    flow_enc_->backward(grad_pooled[1]);
  if (ft_enc_ && grad_pooled[2].size() > 0) ft_enc_->backward(grad_pooled[2]);
  if (grip_enc_ && grad_pooled[3].size() > 0)
    grip_enc_->backward(grad_pooled[3]);
}

void FusionClassifier::params(std::vector<nn::NamedParam>& out) {
  if (rgb_enc_) rgb_enc_->params("rgb", out);
  if (flow_enc_) flow_enc_->params("flow", out);
  if (ft_enc_) ft_enc_->params("ft", out);
  if (grip_enc_) grip_enc_->params("gripper", out);
  for (auto& side : sides_) side.head.params("side/" + side.name, out);
}

void FusionClassifier::head_params(std::vector<nn::NamedParam>& out) {
  if (ft_enc_) ft_enc_->params("ft", out);
  if (grip_enc_) grip_enc_->params("gripper", out);
  for (auto& side : sides_) side.head.params("side/" + side.name, out);
}

void FusionClassifier::backbone_params(std::vector<nn::NamedParam>& out) {
  const bool last_only = !config_.finetune_full_backbone;
  if (rgb_enc_) rgb_enc_->params("rgb", out, last_only);
  if (flow_enc_) flow_enc_->params("flow", out, last_only);
}

Eigen::VectorXd late_fuse(const std::vector<SideLogits>& sides) {
  if (sides.empty()) throw EmptyList("late_fuse: no side logits");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sides.front().logits.size());
  for (const auto& side : sides) {
    if (side.logits.size() != out.size())
      throw ShapeError("late_fuse: side logit widths differ");
    out += side.logits;
  }
  return out / static_cast<double>(sides.size());
}

data::OutcomeLabel classify_outcome(
    const Eigen::VectorXd& logits,
    const std::array<bool, data::kNumOutcomes>* mask) {
  if (logits.size() != data::kNumOutcomes)
    throw ShapeError("classify_outcome: expected 5 logits");
  int best = -1;
  for (int c = 0; c < data::kNumOutcomes; ++c) {
    if (mask != nullptr && !(*mask)[static_cast<size_t>(c)]) continue;
    if (best < 0 || logits(c) > logits(best)) best = c;
  }
  if (best < 0) throw InvariantViolation("all outcome classes masked");
  return static_cast<data::OutcomeLabel>(best);
}

double outcome_accuracy(const FusionClassifier& model,
                        const std::vector<LabeledClip>& clips) {
  if (clips.empty()) throw EmptyList("outcome_accuracy: no clips");
  long hits = 0;
  for (const auto& sample : clips) {
    if (!sample.clip.label)
      throw MissingTarget("outcome_accuracy: clip without a label");
    const Eigen::VectorXd logits = model.apply(sample.clip);
    const auto mask = valid_outcomes(sample.task);
    const auto pred = classify_outcome(
        logits, model.config().mask_task_outcomes ? &mask : nullptr);
    if (pred == *sample.clip.label) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(clips.size());
}

ClsTrainHistory train_classifier(FusionClassifier& model,
                                 const std::vector<LabeledClip>& train,
                                 const std::vector<LabeledClip>& val,
                                 const ClsTrainConfig& train_config) {
  if (train.empty()) throw EmptyList("train_classifier: empty training set");
  for (const auto& sample : train)
    if (!sample.clip.label)
      throw MissingTarget("train_classifier: unlabeled training clip");

  std::vector<nn::NamedParam> all_params, head_group, backbone_group;
  model.params(all_params);
  model.head_params(head_group);
  model.backbone_params(backbone_group);

  nn::SgdMomentum opt_heads(train_config.lr_heads);
  nn::SgdMomentum opt_backbone(train_config.lr_backbone);

  const int sides = model.side_count();
  const int batch = std::max(1, train_config.batch_size);
  std::mt19937_64 order_rng(train_config.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  ClsTrainHistory history;
  std::vector<Eigen::MatrixXd> best_weights;
  double best_acc = -1.0;
  int since_improve = 0;

  for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;

    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      const double scale =
          1.0 / (static_cast<double>(end - start) * sides);
      nn::zero_grads(all_params);
      double batch_loss = 0.0;
      for (size_t i = start; i < end; ++i) {
        const auto& sample = train[order[i]];
        const int target = static_cast<int>(*sample.clip.label);
        const auto mask = valid_outcomes(sample.task);
        const auto* mask_ptr =
            model.config().mask_task_outcomes ? &mask : nullptr;
        const auto logits = model.forward(sample.clip);
        std::vector<Eigen::VectorXd> grads(logits.size());
        double sample_loss = 0.0;
        for (size_t s = 0; s < logits.size(); ++s) {
          Eigen::VectorXd g;
          sample_loss +=
              masked_cross_entropy(logits[s].logits, target, mask_ptr, &g);
          grads[s] = g * scale;
        }
        batch_loss += sample_loss / sides;
        model.backward(grads);
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("training loss is not finite at epoch " +
                              std::to_string(epoch));
      opt_heads.step(head_group);
      if (!backbone_group.empty()) opt_backbone.step(backbone_group);
      epoch_loss += batch_loss;
    }

    history.train_loss.push_back(epoch_loss /
                                 static_cast<double>(train.size()));
    history.train_acc.push_back(outcome_accuracy(model, train));
    history.lr_heads.push_back(opt_heads.lr());

    if (val.empty()) {
      history.best_epoch = epoch;
      continue;
    }
    const double acc = outcome_accuracy(model, val);
    history.val_acc.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      history.best_epoch = epoch;
      since_improve = 0;
      best_weights.clear();
      for (const auto& p : all_params) best_weights.push_back(*p.value);
    } else {
      ++since_improve;
      if (since_improve >= train_config.patience) break;
      if (since_improve % std::max(1, train_config.plateau_patience) == 0) {
        opt_heads.set_lr(opt_heads.lr() * 0.5);
        opt_backbone.set_lr(opt_backbone.lr() * 0.5);
      }
    }
  }

  if (!best_weights.empty())
    for (size_t i = 0; i < all_params.size(); ++i)
      *all_params[i].value = best_weights[i];
  return history;
}

namespace {

json backbone_json(const f::BackboneConfig& c) {
  return {{"image_channels", c.image_channels}, {"grid", c.grid},
          {"c1", c.c1},                         {"c2", c.c2},
          {"out_features", c.out_features},     {"seed", c.seed}};
}

f::BackboneConfig backbone_from(const json& j) {
  f::BackboneConfig c;
  c.image_channels = j.value("image_channels", c.image_channels);
  c.grid = j.value("grid", c.grid);
  c.c1 = j.value("c1", c.c1);
  c.c2 = j.value("c2", c.c2);
  c.out_features = j.value("out_features", c.out_features);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

void save_fusion(const std::filesystem::path& path, FusionClassifier& model,
                 const std::optional<data::NormalizationStats>& stats) {
  const auto& config = model.config();
  json meta;
  meta["format"] = "fusion-checkpoint-v1";
  json streams = json::array();
  for (Stream s : config.streams) streams.push_back(stream_name(s));
  meta["config"] = {
      {"variant", fusion_variant_name(config.variant)},
      {"streams", streams},
      {"rgb_backbone", backbone_json(config.rgb_backbone)},
      {"flow_backbone", backbone_json(config.flow_backbone)},
      {"signal_channels", config.signal_channels},
      {"mask_task_outcomes", config.mask_task_outcomes},
      {"finetune_full_backbone", config.finetune_full_backbone},
      {"seed", config.seed},
  };
  json outcomes = json::array();
  for (int c = 0; c < data::kNumOutcomes; ++c)
    outcomes.push_back(data::label_name(static_cast<data::OutcomeLabel>(c)));
  meta["outcomes"] = outcomes;
  if (stats) {
    json js;
    js["mean"] = std::vector<double>(stats->mean.data(), stats->mean.data() + 6);
    js["std"] = std::vector<double>(stats->std.data(), stats->std.data() + 6);
    js["degenerate_channels"] = stats->degenerate_channels;
    meta["ft_stats"] = js;
  }

  io::ArrayFile file;
  file.metadata = meta.dump();
  std::vector<nn::NamedParam> params;
  model.params(params);
  for (const auto& p : params) file.set_matrix(p.name, *p.value);
  io::save_array_file(path, file);
}

FusionClassifier load_fusion(const std::filesystem::path& path,
                             data::NormalizationStats* stats) {
  const io::ArrayFile file = io::load_array_file(path);
  json meta;
  try {
    meta = json::parse(file.metadata);
  } catch (const json::exception& e) {
    throw SchemaError("fusion checkpoint metadata: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "fusion-checkpoint-v1")
    throw SchemaError("not a fusion checkpoint: " + path.string());

  const json& jc = meta.at("config");
  FusionConfig config;
  config.variant = parse_fusion_variant(jc.value("variant", "d"));
  config.streams.clear();
  for (const auto& name : jc.at("streams"))
    config.streams.insert(parse_stream(name.get<std::string>()));
  config.rgb_backbone = backbone_from(jc.value("rgb_backbone", json::object()));
  config.flow_backbone =
      backbone_from(jc.value("flow_backbone", json::object()));
  config.signal_channels = jc.value("signal_channels", config.signal_channels);
  config.mask_task_outcomes =
      jc.value("mask_task_outcomes", config.mask_task_outcomes);
  config.finetune_full_backbone =
      jc.value("finetune_full_backbone", config.finetune_full_backbone);
  config.seed = jc.value("seed", config.seed);

  FusionClassifier model(config);
  std::vector<nn::NamedParam> params;
  model.params(params);
  for (auto& p : params) {
    if (!file.has(p.name))
      throw SchemaError("fusion checkpoint is missing tensor " + p.name);
    const Eigen::MatrixXd m = file.matrix(p.name);
    if (m.rows() != p.value->rows() || m.cols() != p.value->cols())
      throw ShapeError("fusion checkpoint tensor " + p.name +
                       " has the wrong shape");
    *p.value = m;
  }
  if (stats != nullptr && meta.contains("ft_stats")) {
    const json& js = meta.at("ft_stats");
    for (int i = 0; i < 6; ++i) {
      stats->mean(i) = js.at("mean").at(static_cast<size_t>(i)).get<double>();
      stats->std(i) = js.at("std").at(static_cast<size_t>(i)).get<double>();
    }
    stats->degenerate_channels =
        js.value("degenerate_channels", std::vector<int>{});
  }
  return model;
}

}  // namespace hfd::models
