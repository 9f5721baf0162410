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
#include "hfd/data/types.hpp"
#include "hfd/errors.hpp"
#include "hfd/features/clip.hpp"
#include "hfd/models/mstcn.hpp"

namespace m = hfd::models;
namespace f = hfd::features;
namespace d = hfd::data;
namespace fs = std::filesystem;

namespace {

// Labeled F-T/gripper-only sequence with three human/robot phases and a
// force signature that encodes the outcome, so a small model can overfit.
f::FeatureSequence make_seq(int t_len, std::uint32_t seed, int outcome) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);

  f::FeatureSequence seq;
  seq.meta = {"synt_" + std::to_string(seed), d::RobotPlatform::HSR,
              d::Task::R2H, "p01", "cube"};
  seq.ft.resize(t_len, 6);
  seq.gripper.resize(t_len);
  d::AnnotationTrack track;
  track.outcome = static_cast<d::OutcomeLabel>(outcome);

  const int b1 = t_len / 3 + std::uniform_int_distribution<int>(-2, 2)(rng);
  const int b2 = 2 * t_len / 3 + std::uniform_int_distribution<int>(-2, 2)(rng);
  for (int t = 0; t < t_len; ++t) {
    const int phase = t < b1 ? 0 : t < b2 ? 1 : 2;
    for (int c = 0; c < 5; ++c)
      seq.ft(t, c) = (c == outcome ? 1.5 : -0.5) + noise(rng);
    seq.ft(t, 5) = phase - 1 + noise(rng);
    seq.gripper(t) = phase == 1 ? 0.5 : -0.5;
    track.human_actions.push_back(static_cast<d::HumanAction>(phase + 1));
    track.robot_actions.push_back(static_cast<d::RobotActionFull>(phase + 1));
  }
  seq.labels = std::move(track);
  return seq;
}

m::MstcnConfig tiny_config(m::MstcnVariant variant, int layers, int channels,
                           std::uint64_t seed) {
  m::MstcnConfig config;
  config.variant = variant;
  config.layers_per_stage = layers;
  config.channels = channels;
  config.use_rgb = false;
  config.use_flow = false;
  config.ftg_channels = channels;
  config.head_robot = variant == m::MstcnVariant::B;
  config.seed = seed;
  return config;
}

double naive_segcls(const std::vector<Eigen::MatrixXd>& logp,
                    const std::vector<int>& targets) {
  double total = 0.0;
  for (const auto& mat : logp) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < mat.cols(); ++t)
      s -= mat(targets[static_cast<size_t>(t)], t);
    total += s / static_cast<double>(mat.cols());
  }
  return total;
}

double naive_smooth(const std::vector<Eigen::MatrixXd>& logp, double tau) {
  double total = 0.0;
  for (const auto& mat : logp) {
    if (mat.cols() < 2) continue;
    double s = 0.0;
    for (Eigen::Index t = 1; t < mat.cols(); ++t)
      for (Eigen::Index c = 0; c < mat.rows(); ++c) {
        const double diff = std::min(std::abs(mat(c, t) - mat(c, t - 1)), tau);
        s += diff * diff;
      }
    total += s / static_cast<double>(mat.cols() * mat.rows());
  }
  return total;
}

std::vector<Eigen::MatrixXd> random_logp(std::mt19937_64& rng, int stages,
                                         int classes, int t_len,
                                         double scale = 2.0) {
  std::vector<Eigen::MatrixXd> out;
  for (int s = 0; s < stages; ++s) {
    Eigen::MatrixXd mat(classes, t_len);
    hfd::nn::init_normal(mat, scale, rng);
    out.push_back(mat);
  }
  return out;
}

}  // namespace

TEST_CASE("segmentation-classification loss") {
  SUBCASE("near one-hot predictions give zero loss") {
    Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(7, 12, -500.0);
    std::vector<int> targets(12);
    for (int t = 0; t < 12; ++t) {
      targets[static_cast<size_t>(t)] = t % 7;
      logits(t % 7, t) = 500.0;
    }
    const auto logp = hfd::nn::log_softmax_cols(logits);
    CHECK(m::loss_segcls({logp, logp}, targets) == 0.0);
  }

  SUBCASE("uniform 7-class predictions over 2 stages") {
    const Eigen::MatrixXd logp =
        hfd::nn::log_softmax_cols(Eigen::MatrixXd::Zero(7, 30));
    const std::vector<int> targets(30, 3);
    CHECK(m::loss_segcls({logp, logp}, targets) ==
          doctest::Approx(2.0 * std::log(7.0)).epsilon(1e-12));
  }

  SUBCASE("matches the naive double loop") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
      const int t_len = std::uniform_int_distribution<int>(1, 40)(rng);
      const auto logp = random_logp(rng, 2, 7, t_len);
      std::vector<int> targets(static_cast<size_t>(t_len));
      for (auto& c : targets)
        c = static_cast<int>(rng() % 7);
      std::vector<Eigen::MatrixXd> grad;
      const double got = m::loss_segcls(logp, targets, &grad);
      CHECK(got == doctest::Approx(naive_segcls(logp, targets)).epsilon(1e-10));
      REQUIRE(grad.size() == 2);
      // Per stage: -1/T at each target entry, zero elsewhere.
      for (const auto& g : grad) {
        CHECK(g.sum() == doctest::Approx(-1.0));
        CHECK(g.minCoeff() == doctest::Approx(-1.0 / t_len));
        CHECK(g.maxCoeff() == 0.0);
      }
    }
  }

  SUBCASE("invariant under joint frame permutation") {
    std::mt19937_64 rng(22);
    const auto logp = random_logp(rng, 2, 7, 25);
    std::vector<int> targets(25);
    for (auto& c : targets) c = static_cast<int>(rng() % 7);

    std::vector<int> perm(25);
    for (int i = 0; i < 25; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Eigen::MatrixXd> shuffled_logp;
    std::vector<int> shuffled_targets(25);
    for (const auto& mat : logp) {
      Eigen::MatrixXd s(mat.rows(), mat.cols());
      for (int t = 0; t < 25; ++t) {
        s.col(t) = mat.col(perm[static_cast<size_t>(t)]);
        shuffled_targets[static_cast<size_t>(t)] =
            targets[static_cast<size_t>(perm[static_cast<size_t>(t)])];
      }
      shuffled_logp.push_back(s);
    }
    CHECK(m::loss_segcls(logp, targets) ==
          doctest::Approx(m::loss_segcls(shuffled_logp, shuffled_targets))
              .epsilon(1e-12));
  }

  CHECK_THROWS_AS(
      m::loss_segcls({Eigen::MatrixXd::Zero(7, 5)}, std::vector<int>(4, 0)),
      hfd::LengthMismatch);
}

TEST_CASE("smoothing loss") {
  SUBCASE("temporally constant probabilities give zero") {
    Eigen::MatrixXd logp(3, 10);
    logp.col(0) << -0.3, -1.7, -2.4;
    for (int t = 1; t < 10; ++t) logp.col(t) = logp.col(0);
    CHECK(m::loss_smooth({logp, logp}, 4.0) == 0.0);
  }

  SUBCASE("truncation caps one big jump at tau^2") {
    // C = 2, T = 2; channel 0 jumps by 10 log units, channel 1 constant.
    Eigen::MatrixXd logp(2, 2);
    logp << -1.0, -11.0, -2.0, -2.0;
    CHECK(m::loss_smooth({logp}, 4.0) == doctest::Approx(16.0 / 4.0));
  }

  SUBCASE("single frame contributes zero") {
    CHECK(m::loss_smooth({Eigen::MatrixXd::Random(5, 1)}, 4.0) == 0.0);
  }

  SUBCASE("matches the naive loop and stays under the cap") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 20; ++rep) {
      const int t_len = std::uniform_int_distribution<int>(2, 40)(rng);
      const double scale = rep % 2 == 0 ? 2.0 : 50.0;  // adversarial jumps
      const auto logp = random_logp(rng, 2, 5, t_len, scale);
      std::vector<Eigen::MatrixXd> grad;
      const double got = m::loss_smooth(logp, 4.0, false, &grad);
      CHECK(got == doctest::Approx(naive_smooth(logp, 4.0)).epsilon(1e-10));
      CHECK(got >= 0.0);
      // Per-stage bound: (T-1)*C terms, each <= tau^2, mean over T*C.
      CHECK(got <= 2 * 16.0 * (t_len - 1) / t_len + 1e-9);
    }
  }

  SUBCASE("invariant under frame-order reversal") {
    std::mt19937_64 rng(24);
    const auto logp = random_logp(rng, 2, 5, 17);
    std::vector<Eigen::MatrixXd> reversed;
    for (const auto& mat : logp)
      reversed.push_back(mat.rowwise().reverse());
    CHECK(m::loss_smooth(logp, 4.0) ==
          doctest::Approx(m::loss_smooth(reversed, 4.0)).epsilon(1e-12));
  }

  SUBCASE("detach_prev halves the gradient entries") {
    std::mt19937_64 rng(25);
    const auto logp = random_logp(rng, 1, 4, 9);
    std::vector<Eigen::MatrixXd> g_full, g_detached;
    const double a = m::loss_smooth(logp, 4.0, false, &g_full);
    const double b = m::loss_smooth(logp, 4.0, true, &g_detached);
    CHECK(a == b);  // value unchanged, only the gradient path differs
    // With detachment the first frame receives no gradient.
    CHECK(g_detached[0].col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g_full[0].col(0).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("total loss composition") {
  std::mt19937_64 rng(26);
  const int t_len = 14;

  // Random variant-B logits for both stages.
  std::vector<m::MstcnModel::StageLogits> logits(2);
  for (auto& st : logits) {
    st.human.resize(7, t_len);
    st.outcome.resize(5, t_len);
    st.robot.resize(3, t_len);
    hfd::nn::init_normal(st.human, 1.0, rng);
    hfd::nn::init_normal(st.outcome, 1.0, rng);
    hfd::nn::init_normal(st.robot, 1.0, rng);
  }
  m::SegTargets targets;
  targets.outcome = 2;
  for (int t = 0; t < t_len; ++t) {
    targets.human.push_back(static_cast<int>(rng() % 7));
    targets.robot.push_back(static_cast<int>(rng() % 3));
  }

  m::MstcnConfig config = tiny_config(m::MstcnVariant::B, 2, 4, 0);

  SUBCASE("dropping the robot head removes exactly its terms") {
    const auto full = m::loss_total(logits, targets, config);
    m::MstcnConfig no_robot = config;
    no_robot.head_robot = false;
    const auto reduced = m::loss_total(logits, targets, no_robot);
    CHECK(reduced.total ==
          doctest::Approx(full.outcome + full.human_segcls +
                          config.lambda_smooth * full.human_smooth)
              .epsilon(1e-12));
    CHECK(full.total == doctest::Approx(reduced.total + full.robot_segcls +
                                        config.lambda_smooth *
                                            full.robot_smooth)
                            .epsilon(1e-12));
  }

  SUBCASE("perfect constant predictions give exactly zero") {
    std::vector<m::MstcnModel::StageLogits> perfect(2);
    for (auto& st : perfect) {
      st.human = Eigen::MatrixXd::Constant(7, t_len, -500.0);
      st.outcome = Eigen::MatrixXd::Constant(5, t_len, -500.0);
      st.robot = Eigen::MatrixXd::Constant(3, t_len, -500.0);
    }
    m::SegTargets constant;
    constant.outcome = 3;
    constant.human.assign(static_cast<size_t>(t_len), 5);
    constant.robot.assign(static_cast<size_t>(t_len), 1);
    for (auto& st : perfect) {
      st.human.row(5).setConstant(500.0);
      st.outcome.row(3).setConstant(500.0);
      st.robot.row(1).setConstant(500.0);
    }
    const auto breakdown = m::loss_total(perfect, constant, config);
    CHECK(breakdown.total == 0.0);
  }

  SUBCASE("missing targets are rejected") {
    m::SegTargets incomplete;
    incomplete.outcome = -1;
    CHECK_THROWS_AS(m::loss_total(logits, incomplete, config),
                    hfd::MissingTarget);
    incomplete.outcome = 2;
    CHECK_THROWS_AS(m::loss_total(logits, incomplete, config),
                    hfd::MissingTarget);  // human track still empty
  }
}

TEST_CASE("model forward contracts") {
  m::MstcnConfig config = tiny_config(m::MstcnVariant::B, 3, 6, 7);
  m::MstcnModel model(config);
  const auto seq = make_seq(33, 100, 2);

  const auto logits = model.apply(seq);
  REQUIRE(logits.size() == 2);
  for (const auto& st : logits) {
    CHECK(st.human.rows() == 7);
    CHECK(st.outcome.rows() == 5);
    CHECK(st.robot.rows() == 3);
    CHECK(st.human.cols() == 33);
    CHECK(st.outcome.cols() == 33);
    CHECK(st.robot.cols() == 33);
  }

  SUBCASE("probability columns form a simplex") {
    const auto out = m::predict(model, seq);
    for (const auto& logp : {out.human_logp, out.outcome_logp, out.robot_logp})
      for (const auto& mat : logp)
        for (Eigen::Index t = 0; t < mat.cols(); ++t)
          CHECK(mat.col(t).array().exp().sum() ==
                doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out.human_track.size() == 33);
    CHECK(out.robot_track.size() == 33);
  }

  SUBCASE("training forward matches the pure path") {
    m::MstcnModel twin(config);
    const auto trained = twin.forward(seq);
    for (int s = 0; s < 2; ++s) {
      CHECK((trained[static_cast<size_t>(s)].human -
             logits[static_cast<size_t>(s)].human)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((trained[static_cast<size_t>(s)].outcome -
             logits[static_cast<size_t>(s)].outcome)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }

  SUBCASE("same seed reproduces bit-identical outputs") {
    m::MstcnModel twin(config);
    m::MstcnConfig other = config;
    other.seed = 8;
    m::MstcnModel different(other);
    const auto twin_logits = twin.apply(seq);
    CHECK((twin_logits[1].human - logits[1].human).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((different.apply(seq)[1].human - logits[1].human)
              .cwiseAbs()
              .maxCoeff() > 0.0);
  }

  SUBCASE("config validation") {
    m::MstcnConfig bad = config;
    bad.variant = m::MstcnVariant::A;  // robot head still on
    CHECK_THROWS_AS(m::MstcnModel{bad}, hfd::ConfigError);
    bad = config;
    bad.use_ft = bad.use_gripper = false;  // no modality at all
    CHECK_THROWS_AS(m::MstcnModel{bad}, hfd::ConfigError);
  }
}

TEST_CASE("stage-1 receptive field bound") {
  // 10 layers of dilation 2^l reach 2^10 - 1 frames per stage, so a
  // perturbation more than 2 * (2^10 - 1) frames away cannot move either
  // stage's output. Video-only input keeps the bound exact; the F-T
  // encoder would add its own temporal reach.
  m::MstcnConfig config;
  config.use_ft = false;
  config.use_gripper = false;
  config.channels = 8;
  config.seed = 9;
  m::MstcnModel model(config);

  const int t_len = 2100, probe = 26;
  const int far = probe + 2047;  // beyond the two-stage bound
  REQUIRE(far < t_len);

  f::FeatureSequence seq;
  seq.meta = {"rf", d::RobotPlatform::HSR, d::Task::R2H, "p01", "cube"};
  std::mt19937_64 rng(41);
  seq.backbone.resize(t_len, f::kBackboneWidth);
  hfd::nn::init_normal(seq.backbone, 1.0, rng);
  const auto before = model.apply(seq);

  auto perturbed = seq;
  perturbed.backbone.row(far).setConstant(250.0);
  const auto after = model.apply(perturbed);

  // Both stages untouched at the probe frame.
  CHECK((after[0].human.col(probe) - before[0].human.col(probe))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((after[1].human.col(probe) - before[1].human.col(probe))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Stage 1 alone reaches only 2^10 - 1 = 1023 frames.
  auto nearer = seq;
  nearer.backbone.row(probe + 1024).setConstant(250.0);
  const auto one_stage = model.apply(nearer);
  CHECK((one_stage[0].human.col(probe) - before[0].human.col(probe))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // A close perturbation does propagate.
  auto close = seq;
  close.backbone.row(probe + 50).setConstant(250.0);
  const auto moved = model.apply(close);
  CHECK((moved[0].human.col(probe) - before[0].human.col(probe))
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("loss gradients match finite differences on a tiny model") {
  m::MstcnConfig config = tiny_config(m::MstcnVariant::B, 2, 5, 11);
  config.ftg_channels = 6;
  m::MstcnModel model(config);
  const auto seq = make_seq(20, 102, 4);
  const auto targets = m::targets_from(seq, config);

  std::vector<hfd::nn::NamedParam> params;
  model.params(params);

  auto loss_and_backward = [&]() {
    const auto logits = model.forward(seq);
    std::vector<m::MstcnModel::StageLogits> grads;
    const auto breakdown = m::loss_total(logits, targets, config, &grads);
    hfd::nn::zero_grads(params);
    model.backward(grads);
    return breakdown.total;
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);
}

TEST_CASE("per-robot-action resampling") {
  const int kSegLen = 10;

  SUBCASE("already uniform lengths resample to the identity") {
    const auto seq = make_seq(3 * kSegLen, 103, 0);
    std::vector<d::RobotActionModel> robot;
    for (int t = 0; t < 3 * kSegLen; ++t)
      robot.push_back(static_cast<d::RobotActionModel>(t / kSegLen));
    m::ResampleMap map;
    const auto out = m::resample_per_robot_action(seq, robot, kSegLen, &map);
    REQUIRE(out.ft.rows() == 3 * kSegLen);
    CHECK((out.ft - seq.ft).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 3 * kSegLen; ++i) {
      CHECK(map.source_index[static_cast<size_t>(i)] == i);
      CHECK(map.inverse_index[static_cast<size_t>(i)] == i);
    }
    CHECK(out.labels->human_actions == seq.labels->human_actions);
  }

  SUBCASE("uneven segments follow the uniform-index oracle") {
    // Segment lengths 5, 23, 9 resampled to 10 frames each.
    std::vector<d::RobotActionModel> robot;
    const std::array<int, 3> lens = {5, 23, 9};
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < lens[static_cast<size_t>(a)]; ++i)
        robot.push_back(static_cast<d::RobotActionModel>(a));
    const int t_len = 5 + 23 + 9;
    auto seq = make_seq(t_len, 104, 1);
    // Overwrite labels so the robot track matches the segment layout.
    for (int t = 0; t < t_len; ++t)
      seq.labels->robot_actions[static_cast<size_t>(t)] =
          static_cast<d::RobotActionFull>(static_cast<int>(robot[static_cast<size_t>(t)]) + 1);

    m::ResampleMap map;
    const auto out = m::resample_per_robot_action(seq, robot, 10, &map);
    REQUIRE(out.ft.rows() == 30);
    REQUIRE(map.source_index.size() == 30);
    REQUIRE(map.inverse_index.size() == static_cast<size_t>(t_len));

    int base = 0;
    for (int a = 0; a < 3; ++a) {
      const int len = lens[static_cast<size_t>(a)];
      for (int j = 0; j < 10; ++j) {
        const int expect =
            base + static_cast<int>(std::lround(j * (len - 1) / 9.0));
        CHECK(map.source_index[static_cast<size_t>(a * 10 + j)] == expect);
      }
      base += len;
    }
    // Resampled rows equal the source rows.
    for (int j = 0; j < 30; ++j)
      CHECK((out.ft.row(j) -
             seq.ft.row(map.source_index[static_cast<size_t>(j)]))
                .cwiseAbs()
                .maxCoeff() == 0.0);

    // Inverse: nearest selected source index, ties to the earlier frame,
    // and every original frame is covered exactly once.
    base = 0;
    for (int a = 0; a < 3; ++a) {
      const int len = lens[static_cast<size_t>(a)];
      for (int i = 0; i < len; ++i) {
        int best = a * 10, best_dist = 1 << 30;
        for (int j = a * 10; j < (a + 1) * 10; ++j) {
          const int dist =
              std::abs(map.source_index[static_cast<size_t>(j)] - (base + i));
          if (dist < best_dist) {
            best_dist = dist;
            best = j;
          }
        }
        CHECK(map.inverse_index[static_cast<size_t>(base + i)] == best);
      }
      base += len;
    }
  }

  SUBCASE("missing transfer segment is rejected") {
    std::vector<d::RobotActionModel> robot(12, d::RobotActionModel::APPROACH);
    for (int i = 6; i < 12; ++i)
      robot[static_cast<size_t>(i)] = d::RobotActionModel::RETRACT;
    const auto seq = make_seq(12, 105, 0);
    CHECK_THROWS_AS(m::resample_per_robot_action(seq, robot, 10),
                    hfd::MissingSegment);
  }

  SUBCASE("out-of-order robot track is rejected") {
    std::vector<d::RobotActionModel> robot;
    for (int a : {0, 1, 0, 2})
      for (int i = 0; i < 5; ++i)
        robot.push_back(static_cast<d::RobotActionModel>(a));
    const auto seq = make_seq(20, 106, 0);
    CHECK_THROWS_AS(m::resample_per_robot_action(seq, robot, 10),
                    hfd::InvariantViolation);
  }
}

TEST_CASE("variant A prediction round-trip") {
  m::MstcnConfig config = tiny_config(m::MstcnVariant::A, 3, 6, 12);
  config.segment_length = 10;
  m::MstcnModel model(config);

  SUBCASE("uniform segments make the inverse mapping the identity") {
    const auto seq = make_seq(30, 107, 2);
    std::vector<d::RobotActionModel> robot;
    for (int t = 0; t < 30; ++t)
      robot.push_back(static_cast<d::RobotActionModel>(t / 10));
    const auto direct = m::predict(model, seq);
    const auto mapped = m::predict_resampled(model, seq, robot);
    REQUIRE(mapped.human_track.size() == 30);
    CHECK(mapped.human_track == direct.human_track);
    CHECK(mapped.outcome == direct.outcome);
  }

  SUBCASE("uneven segments still cover every original frame") {
    auto seq = make_seq(50, 108, 3);
    std::vector<d::RobotActionModel> robot;
    for (int t = 0; t < 50; ++t)
      robot.push_back(t < 7    ? d::RobotActionModel::APPROACH
                      : t < 40 ? d::RobotActionModel::TRANSFER
                               : d::RobotActionModel::RETRACT);
    const auto out = m::predict_resampled(model, seq, robot);
    CHECK(out.human_track.size() == 50);
    CHECK(out.human_logp.back().cols() == 30);  // resampled length
  }
}

TEST_CASE("uniform outcome head starts at 2 ln 5") {
  m::MstcnConfig config = tiny_config(m::MstcnVariant::A, 3, 8, 13);
  config.head_human = false;  // isolate the outcome term
  m::MstcnModel model(config);

  std::vector<hfd::nn::NamedParam> params;
  model.params(params);
  for (auto& p : params)
    if (p.name.find("head_outcome") != std::string::npos) p.value->setZero();

  const auto seq = make_seq(40, 109, 1);
  const auto logits = model.forward(seq);
  const auto breakdown =
      m::loss_total(logits, m::targets_from(seq, config), config);
  CHECK(breakdown.total ==
        doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("small model overfits a separable synthetic set") {
  m::MstcnConfig config = tiny_config(m::MstcnVariant::A, 4, 16, 14);
  m::MstcnModel model(config);

  std::vector<f::FeatureSequence> train;
  for (int i = 0; i < 20; ++i) train.push_back(make_seq(60, 200 + i, i % 5));

  m::SegTrainConfig train_config;
  train_config.max_epochs = 60;
  train_config.patience = 60;
  train_config.lr = 1e-3;
  const auto history = m::train_segmenter(model, train, train, train_config);

  REQUIRE(!history.train_loss.empty());
  CHECK(history.train_loss.back() < history.train_loss.front());

  long frames = 0, hits = 0;
  int outcome_hits = 0;
  for (const auto& seq : train) {
    const auto out = m::predict(model, seq);
    if (out.outcome == seq.labels->outcome) ++outcome_hits;
    for (size_t t = 0; t < out.human_track.size(); ++t) {
      ++frames;
      if (out.human_track[t] == seq.labels->human_actions[t]) ++hits;
    }
  }
  CHECK(outcome_hits == 20);
  CHECK(100.0 * hits / frames >= 95.0);
}

TEST_CASE("checkpoint round-trip preserves behavior") {
  const fs::path dir = fs::temp_directory_path() /
                       ("hfd_mstcn_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path path = dir / "model.hfda";

  m::MstcnConfig config = tiny_config(m::MstcnVariant::B, 3, 6, 15);
  m::MstcnModel model(config);
  const auto seq = make_seq(25, 110, 2);

  m::save_mstcn(path, model);
  auto loaded = m::load_mstcn(path);
  CHECK(loaded.config().variant == m::MstcnVariant::B);
  CHECK(loaded.config().channels == 6);

  const auto a = model.apply(seq), b = loaded.apply(seq);
  CHECK((a[1].human - b[1].human).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a[1].outcome - b[1].outcome).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a[1].robot - b[1].robot).cwiseAbs().maxCoeff() == 0.0);

  std::ofstream(path) << "not a checkpoint";
  CHECK_THROWS(m::load_mstcn(path));
  fs::remove_all(dir);
}
