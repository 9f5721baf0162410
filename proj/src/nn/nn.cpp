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

#include "hfd/nn/nn.hpp"

#include <cmath>

#include "hfd/errors.hpp"

namespace hfd::nn {

void init_normal(Eigen::MatrixXd& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

namespace {

// x shifted by s columns with zero fill: out.col(t) = x.col(t + s).
Eigen::MatrixXd shifted(const Eigen::MatrixXd& x, Eigen::Index s) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const Eigen::Index t0 = std::max<Eigen::Index>(0, -s);
  const Eigen::Index t1 = std::min<Eigen::Index>(x.cols(), x.cols() - s);
  if (t1 > t0)
    out.middleCols(t0, t1 - t0) = x.middleCols(t0 + s, t1 - t0);
  return out;
}

}  // namespace

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int dilation)
    : in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      dilation_(dilation) {
  if (in_ch_ <= 0 || out_ch_ <= 0 || kernel_ <= 0 || dilation_ <= 0)
    throw ConfigError("Conv1d: channel/kernel/dilation must be positive");
  if (kernel_ % 2 == 0)
    throw ConfigError("Conv1d: even kernels break same-padding");
  w_ = Eigen::MatrixXd::Zero(out_ch_, in_ch_ * kernel_);
  gw_ = w_;
  b_ = Eigen::MatrixXd::Zero(out_ch_, 1);
  gb_ = b_;
}

void Conv1d::init(std::mt19937_64& rng) {
  init_normal(w_, std::sqrt(2.0 / (in_ch_ * kernel_)), rng);
  b_.setZero();
}

Eigen::MatrixXd Conv1d::apply(const Eigen::MatrixXd& x) const {
  if (x.rows() != in_ch_)
    throw ShapeError("Conv1d: expected " + std::to_string(in_ch_) +
                     " channels, got " + std::to_string(x.rows()));
  Eigen::MatrixXd y = b_.replicate(1, x.cols());
  const int center = (kernel_ - 1) / 2;
  for (int k = 0; k < kernel_; ++k) {
    const Eigen::Index s = static_cast<Eigen::Index>(k - center) * dilation_;
    y.noalias() += w_.middleCols(static_cast<Eigen::Index>(k) * in_ch_, in_ch_) *
                   shifted(x, s);
  }
  return y;
}

Eigen::MatrixXd Conv1d::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  return apply(x);
}

Eigen::MatrixXd Conv1d::backward(const Eigen::MatrixXd& grad_y) {
  if (grad_y.rows() != out_ch_ || grad_y.cols() != x_.cols())
    throw ShapeError("Conv1d::backward: gradient shape mismatch");
  const int center = (kernel_ - 1) / 2;
  Eigen::MatrixXd grad_x = Eigen::MatrixXd::Zero(in_ch_, x_.cols());
  for (int k = 0; k < kernel_; ++k) {
    const Eigen::Index s = static_cast<Eigen::Index>(k - center) * dilation_;
    const Eigen::MatrixXd xs = shifted(x_, s);
    gw_.middleCols(static_cast<Eigen::Index>(k) * in_ch_, in_ch_).noalias() +=
        grad_y * xs.transpose();
    grad_x.noalias() +=
        shifted(w_.middleCols(static_cast<Eigen::Index>(k) * in_ch_, in_ch_)
                    .transpose() *
                    grad_y,
                -s);
  }
  gb_ += grad_y.rowwise().sum();
  return grad_x;
}

void Conv1d::params(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + "/w", &w_, &gw_});
  out.push_back({prefix + "/b", &b_, &gb_});
}

Linear::Linear(int in_features, int out_features)
    : in_(in_features), out_(out_features) {
  if (in_ <= 0 || out_ <= 0)
    throw ConfigError("Linear: feature counts must be positive");
  w_ = Eigen::MatrixXd::Zero(out_, in_);
  gw_ = w_;
  b_ = Eigen::MatrixXd::Zero(out_, 1);
  gb_ = b_;
}

void Linear::init(std::mt19937_64& rng) {
  init_normal(w_, std::sqrt(2.0 / in_), rng);
  b_.setZero();
}

Eigen::VectorXd Linear::apply(const Eigen::VectorXd& x) const {
  if (x.size() != in_)
    throw ShapeError("Linear: expected " + std::to_string(in_) +
                     " features, got " + std::to_string(x.size()));
  return w_ * x + b_.col(0);
}

Eigen::VectorXd Linear::forward(const Eigen::VectorXd& x) {
  x_ = x;
  return apply(x);
}

Eigen::VectorXd Linear::backward(const Eigen::VectorXd& grad_y) {
  gw_.noalias() += grad_y * x_.transpose();
  gb_.col(0) += grad_y;
  return w_.transpose() * grad_y;
}

void Linear::params(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + "/w", &w_, &gw_});
  out.push_back({prefix + "/b", &b_, &gb_});
}

Eigen::MatrixXd ReLU::apply(const Eigen::MatrixXd& x) const {
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd ReLU::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  return apply(x);
}

Eigen::MatrixXd ReLU::backward(const Eigen::MatrixXd& grad_y) const {
  return (x_.array() > 0.0).select(grad_y, 0.0);
}

Eigen::MatrixXd Dropout::forward(const Eigen::MatrixXd& x,
                                 std::mt19937_64& rng) {
  if (p_ <= 0.0) {
    mask_ = Eigen::MatrixXd::Ones(x.rows(), x.cols());
    return x;
  }
  std::bernoulli_distribution keep(1.0 - p_);
  mask_.resize(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - p_);
  for (Eigen::Index i = 0; i < mask_.size(); ++i)
    mask_.data()[i] = keep(rng) ? scale : 0.0;
  return x.cwiseProduct(mask_);
}

Eigen::MatrixXd Dropout::backward(const Eigen::MatrixXd& grad_y) const {
  return grad_y.cwiseProduct(mask_);
}

Eigen::VectorXd gap(const Eigen::MatrixXd& x) {
  if (x.cols() == 0) throw ShapeError("gap: empty time axis");
  return x.rowwise().mean();
}

Eigen::MatrixXd gap_backward(const Eigen::VectorXd& grad, Eigen::Index time) {
  return (grad / static_cast<double>(time)).replicate(1, time);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd z =
      (logits.array() - logits.maxCoeff()).exp().matrix();
  return z / z.sum();
}

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t)
    out.col(t) = softmax(logits.col(t));
  return out;
}

Eigen::MatrixXd log_softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const double mx = logits.col(t).maxCoeff();
    const double lse =
        std::log((logits.col(t).array() - mx).exp().sum()) + mx;
    out.col(t) = logits.col(t).array() - lse;
  }
  return out;
}

Eigen::MatrixXd log_softmax_cols_backward(const Eigen::MatrixXd& logits,
                                          const Eigen::MatrixXd& grad_logp) {
  // d logp(i)/d logit(j) = delta_ij - softmax(j)
  Eigen::MatrixXd grad(logits.rows(), logits.cols());
  const Eigen::MatrixXd p = softmax_cols(logits);
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const double total = grad_logp.col(t).sum();
    grad.col(t) = grad_logp.col(t) - total * p.col(t);
  }
  return grad;
}

Eigen::MatrixXd softmax_cols_backward(const Eigen::MatrixXd& probs,
                                      const Eigen::MatrixXd& grad_probs) {
  // d p(i)/d logit(j) = p(i) (delta_ij - p(j))
  Eigen::MatrixXd grad(probs.rows(), probs.cols());
  for (Eigen::Index t = 0; t < probs.cols(); ++t) {
    const double inner = probs.col(t).dot(grad_probs.col(t));
    grad.col(t) =
        (probs.col(t).array() * (grad_probs.col(t).array() - inner)).matrix();
  }
  return grad;
}

double cross_entropy(const Eigen::VectorXd& logits, int target,
                     Eigen::VectorXd* grad) {
  if (target < 0 || target >= logits.size())
    throw ShapeError("cross_entropy: target out of range");
  const double mx = logits.maxCoeff();
  const double lse = std::log((logits.array() - mx).exp().sum()) + mx;
  const double loss = lse - logits(target);
  if (grad) {
    *grad = (logits.array() - lse).exp().matrix();
    (*grad)(target) -= 1.0;
  }
  return loss;
}

void zero_grads(const std::vector<NamedParam>& params) {
  for (const auto& p : params) p.grad->setZero();
}

void SgdMomentum::step(const std::vector<NamedParam>& params) {
  for (const auto& p : params) {
    auto [it, inserted] = velocity_.try_emplace(
        p.name, Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    Eigen::MatrixXd& v = it->second;
    v = momentum_ * v - lr_ * (*p.grad);
    *p.value += v;
  }
}

void Adam::step(const std::vector<NamedParam>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& p : params) {
    auto [mi, m_new] = m_.try_emplace(
        p.name, Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    auto [vi, v_new] = v_.try_emplace(
        p.name, Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    Eigen::MatrixXd& m = mi->second;
    Eigen::MatrixXd& v = vi->second;
    m = beta1_ * m + (1.0 - beta1_) * (*p.grad);
    v = beta2_ * v + (1.0 - beta2_) * p.grad->cwiseProduct(*p.grad);
    const Eigen::MatrixXd m_hat = m / bc1;
    const Eigen::MatrixXd v_hat = v / bc2;
    p.value->array() -=
        lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

}  // namespace hfd::nn
