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

#include <cmath>
#include <random>

#include <doctest.h>

#include "gradcheck.hpp"
#include "hfd/errors.hpp"
#include "hfd/nn/nn.hpp"

namespace nn = hfd::nn;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Reference convolution: direct quadruple loop over the definition.
Eigen::MatrixXd naive_conv(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                           const Eigen::MatrixXd& b, int kernel,
                           int dilation) {
  const auto out_ch = w.rows();
  const auto in_ch = x.rows();
  const auto len = x.cols();
  const int center = (kernel - 1) / 2;
  Eigen::MatrixXd y(out_ch, len);
  for (Eigen::Index o = 0; o < out_ch; ++o)
    for (Eigen::Index t = 0; t < len; ++t) {
      double acc = b(o, 0);
      for (int k = 0; k < kernel; ++k)
        for (Eigen::Index c = 0; c < in_ch; ++c) {
          const Eigen::Index src = t + static_cast<Eigen::Index>(k - center) *
                                           dilation;
          if (src >= 0 && src < len) acc += w(o, k * in_ch + c) * x(c, src);
        }
      y(o, t) = acc;
    }
  return y;
}

}  // namespace

TEST_CASE("conv1d matches the direct definition") {
  std::mt19937_64 rng(31);
  for (const auto& [kernel, dilation] :
       std::vector<std::pair<int, int>>{{1, 1}, {3, 1}, {3, 4}, {5, 2}}) {
    nn::Conv1d conv(3, 4, kernel, dilation);
    conv.init(rng);
    std::vector<nn::NamedParam> params;
    conv.params("conv", params);
    // Give the bias nonzero values so it participates in the check.
    nn::init_normal(*params[1].value, 0.5, rng);

    const Eigen::MatrixXd x = random_matrix(3, 17, rng);
    const Eigen::MatrixXd y = conv.apply(x);
    REQUIRE(y.rows() == 4);
    REQUIRE(y.cols() == 17);
    const Eigen::MatrixXd want =
        naive_conv(x, *params[0].value, *params[1].value, kernel, dilation);
    CHECK((y - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((conv.forward(x) - y).cwiseAbs().maxCoeff() == 0.0);
  }

  nn::Conv1d conv(3, 4, 3);
  CHECK_THROWS_AS(conv.apply(Eigen::MatrixXd::Zero(5, 10)), hfd::ShapeError);
  CHECK_THROWS_AS(nn::Conv1d(3, 4, 2), hfd::ConfigError);
}

TEST_CASE("conv1d gradients match finite differences") {
  std::mt19937_64 rng(32);
  nn::Conv1d conv(2, 3, 3, 2);
  conv.init(rng);
  Eigen::MatrixXd x = random_matrix(2, 9, rng);
  Eigen::MatrixXd gx_buffer = Eigen::MatrixXd::Zero(2, 9);
  const Eigen::MatrixXd target = random_matrix(3, 9, rng);

  std::vector<nn::NamedParam> params;
  conv.params("conv", params);
  params.push_back({"input", &x, &gx_buffer});

  auto loss_and_backward = [&]() {
    nn::zero_grads(params);
    const Eigen::MatrixXd y = conv.forward(x);
    const Eigen::MatrixXd r = y - target;
    gx_buffer += conv.backward(r);
    return 0.5 * r.squaredNorm();
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);
}

TEST_CASE("linear layer gradients and shapes") {
  std::mt19937_64 rng(33);
  nn::Linear fc(6, 4);
  fc.init(rng);
  Eigen::MatrixXd x = random_matrix(6, 1, rng);
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(6, 1);

  std::vector<nn::NamedParam> params;
  fc.params("fc", params);
  params.push_back({"input", &x, &gx});

  auto loss_and_backward = [&]() {
    nn::zero_grads(params);
    const Eigen::VectorXd y = fc.forward(x.col(0));
    Eigen::VectorXd grad;
    const double loss = nn::cross_entropy(y, 2, &grad);
    gx.col(0) += fc.backward(grad);
    return loss;
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);

  CHECK_THROWS_AS(fc.apply(Eigen::VectorXd::Zero(5)), hfd::ShapeError);
}

TEST_CASE("relu masks gradients") {
  nn::ReLU relu;
  Eigen::MatrixXd x(2, 3);
  x << -1, 0, 2, 3, -4, 5;
  const Eigen::MatrixXd y = relu.forward(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 2) == 2.0);
  CHECK(y(1, 0) == 3.0);

  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(2, 3);
  const Eigen::MatrixXd gx = relu.backward(g);
  CHECK(gx(0, 0) == 0.0);  // negative input
  CHECK(gx(0, 1) == 0.0);  // zero input
  CHECK(gx(0, 2) == 1.0);
  CHECK(gx(1, 1) == 0.0);
}

TEST_CASE("dropout scales and masks deterministically") {
  std::mt19937_64 rng(34);
  nn::Dropout drop(0.5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(20, 50);
  const Eigen::MatrixXd y = drop.forward(x, rng);
  int kept = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    CHECK((y.data()[i] == 0.0 || y.data()[i] == 2.0));
    if (y.data()[i] != 0.0) ++kept;
  }
  CHECK(kept > 350);  // ~500 expected
  CHECK(kept < 650);

  // Backward uses the same mask.
  const Eigen::MatrixXd g = drop.backward(x);
  CHECK((g - y).cwiseAbs().maxCoeff() == 0.0);

  // Identity in inference mode and at p = 0.
  CHECK((drop.apply(x) - x).cwiseAbs().maxCoeff() == 0.0);
  nn::Dropout off(0.0);
  CHECK((off.forward(x, rng) - x).cwiseAbs().maxCoeff() == 0.0);

  // Same seed reproduces the mask.
  std::mt19937_64 rng_a(77), rng_b(77);
  nn::Dropout da(0.3), db(0.3);
  CHECK((da.forward(x, rng_a) - db.forward(x, rng_b)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("gap averages over time and backpropagates") {
  std::mt19937_64 rng(35);
  Eigen::MatrixXd x = random_matrix(4, 7, rng);
  const Eigen::VectorXd pooled = nn::gap(x);
  for (int c = 0; c < 4; ++c)
    CHECK(pooled(c) == doctest::Approx(x.row(c).mean()));

  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(4, 7);
  const Eigen::VectorXd r = random_matrix(4, 1, rng).col(0);
  std::vector<nn::NamedParam> params = {{"x", &x, &gx}};
  auto loss_and_backward = [&]() {
    nn::zero_grads(params);
    const double loss = nn::gap(x).dot(r);
    gx += nn::gap_backward(r, x.cols());
    return loss;
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);
}

TEST_CASE("softmax and log-softmax are consistent") {
  std::mt19937_64 rng(36);
  const Eigen::MatrixXd logits = random_matrix(5, 9, rng, 3.0);
  const Eigen::MatrixXd p = nn::softmax_cols(logits);
  const Eigen::MatrixXd lp = nn::log_softmax_cols(logits);

  for (Eigen::Index t = 0; t < 9; ++t) {
    CHECK(p.col(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((p.col(t).array() > 0.0).all());
  }
  CHECK((lp.array().exp().matrix() - p).cwiseAbs().maxCoeff() < 1e-12);

  // Shift invariance.
  const Eigen::MatrixXd shifted_in =
      logits + Eigen::MatrixXd::Constant(5, 9, 123.0);
  CHECK((nn::softmax_cols(shifted_in) - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("log-softmax backward matches finite differences") {
  std::mt19937_64 rng(37);
  Eigen::MatrixXd logits = random_matrix(4, 6, rng);
  Eigen::MatrixXd glogits = Eigen::MatrixXd::Zero(4, 6);
  const Eigen::MatrixXd r = random_matrix(4, 6, rng);

  std::vector<nn::NamedParam> params = {{"logits", &logits, &glogits}};
  auto loss_and_backward = [&]() {
    nn::zero_grads(params);
    const Eigen::MatrixXd lp = nn::log_softmax_cols(logits);
    glogits += nn::log_softmax_cols_backward(logits, r);
    return lp.cwiseProduct(r).sum();
  };
  CHECK(max_rel_grad_error(loss_and_backward, params) < 1e-4);
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  const Eigen::VectorXd logits = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd grad;
  const double loss = nn::cross_entropy(logits, 3, &grad);
  CHECK(loss == doctest::Approx(std::log(5.0)));
  CHECK(grad(0) == doctest::Approx(0.2));
  CHECK(grad(3) == doctest::Approx(0.2 - 1.0));
  CHECK(grad.sum() == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(nn::cross_entropy(logits, 9), hfd::ShapeError);
}

TEST_CASE("sgd with momentum follows the hand-computed trajectory") {
  Eigen::MatrixXd p(1, 1), g(1, 1);
  p << 1.0;
  std::vector<nn::NamedParam> params = {{"p", &p, &g}};
  nn::SgdMomentum opt(0.1, 0.9);

  g << 0.5;
  opt.step(params);
  CHECK(p(0, 0) == doctest::Approx(0.95));  // v = -0.05
  g << 0.5;
  opt.step(params);
  CHECK(p(0, 0) == doctest::Approx(0.855));  // v = -0.095
}

TEST_CASE("adam first step is a signed unit step scaled by lr") {
  Eigen::MatrixXd p(1, 2), g(1, 2);
  p.setZero();
  std::vector<nn::NamedParam> params = {{"p", &p, &g}};
  nn::Adam opt(1e-3);
  g << 2.0, -0.01;
  opt.step(params);
  CHECK(p(0, 0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(p(0, 1) == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("optimizers minimize a quadratic") {
  std::mt19937_64 rng(38);
  const Eigen::MatrixXd target = random_matrix(3, 4, rng);

  for (int which = 0; which < 2; ++which) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4);
    Eigen::MatrixXd gx = x;
    std::vector<nn::NamedParam> params = {{"x", &x, &gx}};
    nn::SgdMomentum sgd(0.05, 0.9);
    nn::Adam adam(0.05);
    for (int it = 0; it < 400; ++it) {
      gx = x - target;
      if (which == 0)
        sgd.step(params);
      else
        adam.step(params);
    }
    CHECK((x - target).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("seeded init is reproducible") {
  nn::Conv1d a(4, 8, 3), b(4, 8, 3), c(4, 8, 3);
  std::mt19937_64 rng_a(99), rng_b(99), rng_c(100);
  a.init(rng_a);
  b.init(rng_b);
  c.init(rng_c);
  std::vector<nn::NamedParam> pa, pb, pc;
  a.params("x", pa);
  b.params("x", pb);
  c.params("x", pc);
  CHECK((*pa[0].value - *pb[0].value).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*pa[0].value - *pc[0].value).cwiseAbs().maxCoeff() > 0.0);
}
