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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <doctest.h>

#include "gradcheck.hpp"
#include "hfd/errors.hpp"
#include "hfd/models/fusion.hpp"

namespace m = hfd::models;
namespace f = hfd::features;
namespace d = hfd::data;
namespace fs = std::filesystem;

namespace {

// 64-frame clip whose F-T channels and gripper duty cycle encode the
// outcome; video frames are seeded noise.
f::ClipInput make_clip(std::uint32_t seed, int outcome, bool with_video) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.02);

  f::ClipInput clip;
  clip.ft.resize(f::kClipLength, 6);
  clip.gripper.resize(f::kClipLength);
  const int hold = 8 + 10 * outcome;  // frames at +0.5 before release
  for (int t = 0; t < f::kClipLength; ++t) {
    for (int c = 0; c < 5; ++c)
      clip.ft(t, c) = (c == outcome ? 2.0 : -0.5) + noise(rng);
    clip.ft(t, 5) = noise(rng);
    clip.gripper(t) = t < hold ? 0.5 : -0.5;
  }
  if (with_video) {
    cv::RNG cv_rng(seed);
    for (int t = 0; t < f::kClipLength; ++t) {
      cv::Mat rgb(8, 8, CV_8UC3), flow(8, 8, CV_32FC2);
      cv_rng.fill(rgb, cv::RNG::UNIFORM, 0, 256);
      cv_rng.fill(flow, cv::RNG::UNIFORM, -1.0, 1.0);
      clip.rgb.push_back(rgb);
      clip.flow.push_back(flow);
    }
  }
  clip.label = static_cast<d::OutcomeLabel>(outcome);
  return clip;
}

m::FusionConfig small_config(m::FusionVariant variant,
                             const m::StreamSet& streams,
                             std::uint64_t seed) {
  m::FusionConfig config;
  config.variant = variant;
  config.streams = streams;
  config.rgb_backbone = {3, 2, 3, 4, 6, 17};
  config.flow_backbone = {2, 2, 3, 4, 6, 18};
  config.signal_channels = 5;
  config.seed = seed;
  return config;
}

long param_scalars(m::FusionClassifier& model) {
  std::vector<hfd::nn::NamedParam> params;
  model.params(params);
  long total = 0;
  for (const auto& p : params) total += p.value->size();
  return total;
}

}  // namespace

TEST_CASE("stream and variant parsing") {
  CHECK(m::parse_fusion_variant("i3d-d") == m::FusionVariant::D);
  CHECK(m::parse_fusion_variant("B") == m::FusionVariant::B);
  CHECK_THROWS_AS(m::parse_fusion_variant("i3d-e"), hfd::ConfigError);

  const auto streams = m::parse_streams("rgb, flow ,ft,gripper");
  CHECK(streams.size() == 4);
  CHECK(m::streams_name(streams) == "rgb,flow,ft,gripper");
  CHECK(m::parse_streams("v,of,f-t,g") == streams);
  CHECK_THROWS_AS(m::parse_streams("rgb,audio"), hfd::ConfigError);
}

TEST_CASE("variant topologies") {
  using V = m::FusionVariant;
  using S = m::Stream;
  const m::StreamSet all = {S::RGB, S::FLOW, S::FT, S::GRIPPER};

  SUBCASE("side layout per variant") {
    m::FusionClassifier a(small_config(V::A, all, 1));
    CHECK(a.side_count() == 4);
    m::FusionClassifier b(small_config(V::B, all, 1));
    CHECK(b.side_names() == std::vector<std::string>{"fused", "flow"});
    m::FusionClassifier c(small_config(V::C, all, 1));
    CHECK(c.side_names() == std::vector<std::string>{"fused", "rgb"});
    m::FusionClassifier dm(small_config(V::D, all, 1));
    CHECK(dm.side_names() ==
          std::vector<std::string>{"rgb_fused", "flow_fused"});

    // Variant B's FC head sits on the RGB side: 6 video + 2 * 5 signal.
    std::vector<hfd::nn::NamedParam> params;
    b.params(params);
    bool found = false;
    for (const auto& p : params)
      if (p.name == "side/fused/w") {
        found = true;
        CHECK(p.value->rows() == 5);
        CHECK(p.value->cols() == 6 + 5 + 5);
      }
    CHECK(found);
  }

  SUBCASE("single modality collapses all variants") {
    m::FusionClassifier a(small_config(V::A, {S::RGB}, 3));
    m::FusionClassifier dm(small_config(V::D, {S::RGB}, 3));
    CHECK(param_scalars(a) == param_scalars(dm));
    CHECK(a.side_names() == dm.side_names());

    const auto clip = make_clip(50, 2, true);
    CHECK((a.apply(clip) - dm.apply(clip)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("variant D requires both video streams") {
    CHECK_THROWS_AS(
        m::FusionClassifier(small_config(V::D, {S::FT, S::GRIPPER}, 1)),
        hfd::TopologyError);
    CHECK_THROWS_AS(
        m::FusionClassifier(small_config(V::D, {S::RGB, S::FT}, 1)),
        hfd::TopologyError);
    CHECK_THROWS_AS(m::FusionClassifier(small_config(V::A, {}, 1)),
                    hfd::TopologyError);
  }
}

TEST_CASE("late fusion") {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd l(5, 1);
  hfd::nn::init_normal(l, 1.0, rng);

  SUBCASE("opposite logits cancel") {
    const auto fused = m::late_fuse({{"x", l.col(0)}, {"y", -l.col(0)}});
    CHECK(fused.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("order invariance") {
    Eigen::MatrixXd other(5, 1);
    hfd::nn::init_normal(other, 1.0, rng);
    const auto ab = m::late_fuse({{"a", l.col(0)}, {"b", other.col(0)}});
    const auto ba = m::late_fuse({{"b", other.col(0)}, {"a", l.col(0)}});
    CHECK((ab - ba).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single side is the identity") {
    const auto clip = make_clip(51, 1, false);
    m::FusionClassifier model(
        small_config(m::FusionVariant::A, {m::Stream::FT}, 4));
    const auto sides = model.side_logits(clip);
    REQUIRE(sides.size() == 1);
    CHECK((model.apply(clip) - sides[0].logits).cwiseAbs().maxCoeff() == 0.0);
  }

  CHECK_THROWS_AS(m::late_fuse({}), hfd::EmptyList);
  CHECK_THROWS_AS(
      m::late_fuse({{"a", Eigen::VectorXd::Zero(5)},
                    {"b", Eigen::VectorXd::Zero(4)}}),
      hfd::ShapeError);
}

TEST_CASE("outcome decoding") {
  Eigen::VectorXd logits(5);
  logits << 0.2, 1.5, -0.4, 0.9, 2.1;

  CHECK(m::classify_outcome(logits) == d::OutcomeLabel::NO_RELEASE);

  SUBCASE("shift invariance") {
    const Eigen::VectorXd shifted = logits.array() + 123.0;
    CHECK(m::classify_outcome(shifted) == m::classify_outcome(logits));
  }

  SUBCASE("task masks suppress invalid classes") {
    const auto r2h = m::valid_outcomes(d::Task::R2H);
    CHECK_FALSE(r2h[static_cast<size_t>(d::OutcomeLabel::NO_RELEASE)]);
    CHECK(r2h[static_cast<size_t>(d::OutcomeLabel::NO_GRASP)]);
    const auto h2r = m::valid_outcomes(d::Task::H2R);
    CHECK_FALSE(h2r[static_cast<size_t>(d::OutcomeLabel::NO_GRASP)]);
    CHECK(h2r[static_cast<size_t>(d::OutcomeLabel::NO_RELEASE)]);

    // NO_RELEASE has the top logit but is invalid for R2H.
    CHECK(m::classify_outcome(logits, &r2h) == d::OutcomeLabel::NO_APPROACH);
  }

  CHECK_THROWS_AS(m::classify_outcome(Eigen::VectorXd::Zero(4)),
                  hfd::ShapeError);
}

TEST_CASE("forward determinism and shape checks") {
  const m::StreamSet all = {m::Stream::RGB, m::Stream::FLOW, m::Stream::FT,
                            m::Stream::GRIPPER};
  const auto config = small_config(m::FusionVariant::D, all, 6);
  m::FusionClassifier one(config), two(config);
  const auto clip = make_clip(52, 3, true);

  CHECK((one.apply(clip) - two.apply(clip)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(one.apply(clip).allFinite());

  auto other = config;
  other.seed = 7;
  m::FusionClassifier reseeded(other);
  CHECK((one.apply(clip) - reseeded.apply(clip)).cwiseAbs().maxCoeff() > 0.0);

  SUBCASE("short clips are rejected") {
    auto trimmed = clip;
    trimmed.rgb.resize(32);
    CHECK_THROWS_AS(one.apply(trimmed), hfd::ShapeError);
    auto bad_ft = clip;
    bad_ft.ft = Eigen::MatrixXd::Zero(f::kClipLength, 5);
    CHECK_THROWS_AS(one.apply(bad_ft), hfd::ShapeError);
  }
}

TEST_CASE("loss gradients match finite differences across the topology") {
  const m::StreamSet all = {m::Stream::RGB, m::Stream::FLOW, m::Stream::FT,
                            m::Stream::GRIPPER};
  auto config = small_config(m::FusionVariant::D, all, 8);
  config.finetune_full_backbone = true;
  m::FusionClassifier model(config);
  const auto clip = make_clip(53, 1, true);

  std::vector<hfd::nn::NamedParam> params;
  model.params(params);

  auto loss_and_backward = [&]() {
    const auto sides = model.forward(clip);
    double loss = 0.0;
    std::vector<Eigen::VectorXd> grads(sides.size());
    for (size_t s = 0; s < sides.size(); ++s) {
      Eigen::VectorXd g;
      loss += hfd::nn::cross_entropy(sides[s].logits, 1, &g) /
              static_cast<double>(sides.size());
      grads[s] = g / static_cast<double>(sides.size());
    }
    hfd::nn::zero_grads(params);
    model.backward(grads);
    return loss;
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);
}

TEST_CASE("zeroed heads start at ln 5") {
  m::FusionConfig config = small_config(
      m::FusionVariant::A, {m::Stream::FT, m::Stream::GRIPPER}, 9);
  m::FusionClassifier model(config);

  std::vector<hfd::nn::NamedParam> params;
  model.params(params);
  for (auto& p : params)
    if (p.name.rfind("side/", 0) == 0) p.value->setZero();

  double loss = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto clip = make_clip(60 + static_cast<std::uint32_t>(i), i % 5,
                                false);
    for (const auto& side : model.side_logits(clip))
      loss += hfd::nn::cross_entropy(side.logits, i % 5) /
              (10.0 * model.side_count());
  }
  CHECK(loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("training overfits separable synthetic clips") {
  m::FusionConfig config = small_config(
      m::FusionVariant::A, {m::Stream::FT, m::Stream::GRIPPER}, 10);
  config.signal_channels = 16;
  m::FusionClassifier model(config);

  std::vector<m::LabeledClip> train;
  for (int i = 0; i < 10; ++i)
    train.push_back({make_clip(70 + static_cast<std::uint32_t>(i), i % 5,
                               false),
                     d::Task::R2H});

  m::ClsTrainConfig train_config;
  train_config.max_epochs = 40;
  train_config.patience = 40;
  const auto history = m::train_classifier(model, train, train, train_config);

  REQUIRE(history.train_loss.size() >= 5);
  for (int e = 1; e < 5; ++e)
    CHECK(history.train_loss[static_cast<size_t>(e)] <
          history.train_loss[static_cast<size_t>(e - 1)]);
  CHECK(m::outcome_accuracy(model, train) == 100.0);

  SUBCASE("training is deterministic in the seed") {
    m::FusionClassifier twin(config);
    m::ClsTrainConfig short_config = train_config;
    short_config.max_epochs = 3;
    m::FusionClassifier twin2(config);
    const auto h1 = m::train_classifier(twin, train, train, short_config);
    const auto h2 = m::train_classifier(twin2, train, train, short_config);
    CHECK(h1.train_loss == h2.train_loss);
    CHECK(h1.val_acc == h2.val_acc);
  }
}

TEST_CASE("task masking during training") {
  m::FusionConfig config = small_config(
      m::FusionVariant::A, {m::Stream::FT}, 11);
  config.mask_task_outcomes = true;
  m::FusionClassifier model(config);

  // NO_RELEASE cannot happen in an R2H handover.
  std::vector<m::LabeledClip> bad;
  bad.push_back({make_clip(80, static_cast<int>(d::OutcomeLabel::NO_RELEASE),
                           false),
                 d::Task::R2H});
  m::ClsTrainConfig train_config;
  train_config.max_epochs = 1;
  CHECK_THROWS_AS(m::train_classifier(model, bad, {}, train_config),
                  hfd::InvariantViolation);

  std::vector<m::LabeledClip> good;
  good.push_back({make_clip(81, static_cast<int>(d::OutcomeLabel::NO_RELEASE),
                            false),
                  d::Task::H2R});
  CHECK_NOTHROW(m::train_classifier(model, good, {}, train_config));
}

TEST_CASE("checkpoint round-trip") {
  const fs::path dir = fs::temp_directory_path() /
                       ("hfd_fusion_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path path = dir / "classifier.hfda";

  const m::StreamSet all = {m::Stream::RGB, m::Stream::FLOW, m::Stream::FT,
                            m::Stream::GRIPPER};
  m::FusionClassifier model(small_config(m::FusionVariant::B, all, 12));
  const auto clip = make_clip(54, 0, true);

  d::NormalizationStats stats;
  stats.mean << 0.1, -0.2, 0.3, 0.0, 1.5, -2.0;
  stats.std << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  stats.degenerate_channels = {4};
  m::save_fusion(path, model, stats);

  d::NormalizationStats loaded_stats;
  auto loaded = m::load_fusion(path, &loaded_stats);
  CHECK(loaded.config().variant == m::FusionVariant::B);
  CHECK(loaded.config().streams == all);
  CHECK((loaded.apply(clip) - model.apply(clip)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded_stats.mean - stats.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded_stats.std - stats.std).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded_stats.degenerate_channels == stats.degenerate_channels);

  std::ofstream(path) << "not a checkpoint";
  CHECK_THROWS(m::load_fusion(path));
  fs::remove_all(dir);
}
