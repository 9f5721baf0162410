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

#include <Eigen/Core>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace hfd::nn {

// Sequences are channels x time matrices; clip-level vectors are column
// vectors. Layers cache activations in forward() for the matching
// backward(); apply() is the pure inference path, safe to call
// concurrently on a const layer.

struct NamedParam {
  std::string name;
  Eigen::MatrixXd* value;
  Eigen::MatrixXd* grad;
};

void init_normal(Eigen::MatrixXd& m, double stddev, std::mt19937_64& rng);

// Temporal convolution with zero same-padding: output time length equals
// input length for odd kernels. Weight layout: out x (in * kernel), taps
// ordered kernel-major per input channel.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(int in_channels, int out_channels, int kernel, int dilation = 1);

  // He-normal weights, zero bias.
  void init(std::mt19937_64& rng);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_y);

  void params(const std::string& prefix, std::vector<NamedParam>& out);

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int kernel() const { return kernel_; }
  int dilation() const { return dilation_; }

 private:
  int in_ch_ = 0;
  int out_ch_ = 0;
  int kernel_ = 1;
  int dilation_ = 1;
  Eigen::MatrixXd w_, gw_;  // out x (in * kernel)
  Eigen::MatrixXd b_, gb_;  // out x 1
  Eigen::MatrixXd x_;       // forward cache
};

// Fully connected layer on column vectors.
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features);

  void init(std::mt19937_64& rng);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x);
  Eigen::VectorXd backward(const Eigen::VectorXd& grad_y);

  void params(const std::string& prefix, std::vector<NamedParam>& out);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_ = 0;
  int out_ = 0;
  Eigen::MatrixXd w_, gw_;  // out x in
  Eigen::MatrixXd b_, gb_;  // out x 1
  Eigen::VectorXd x_;
};

class ReLU {
 public:
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_y) const;

 private:
  Eigen::MatrixXd x_;
};

// Inverted dropout: scales kept entries by 1/(1-p) at train time; apply()
// is the identity. p = 0 disables masking entirely.
class Dropout {
 public:
  explicit Dropout(double p = 0.0) : p_(p) {}

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return x; }
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, std::mt19937_64& rng);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_y) const;

  double rate() const { return p_; }

 private:
  double p_ = 0.0;
  Eigen::MatrixXd mask_;
};

// Global average pool over time: C x T -> C.
Eigen::VectorXd gap(const Eigen::MatrixXd& x);
Eigen::MatrixXd gap_backward(const Eigen::VectorXd& grad, Eigen::Index time);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits);
Eigen::MatrixXd log_softmax_cols(const Eigen::MatrixXd& logits);

// Gradient of a scalar loss w.r.t. logits given its gradient w.r.t. the
// per-column log-softmax outputs.
Eigen::MatrixXd log_softmax_cols_backward(const Eigen::MatrixXd& logits,
                                          const Eigen::MatrixXd& grad_logp);

// Gradient w.r.t. logits given the gradient w.r.t. the per-column softmax
// probabilities probs = softmax_cols(logits).
Eigen::MatrixXd softmax_cols_backward(const Eigen::MatrixXd& probs,
                                      const Eigen::MatrixXd& grad_probs);

// Softmax cross-entropy for one sample; writes d(loss)/d(logits) when
// grad is non-null.
double cross_entropy(const Eigen::VectorXd& logits, int target,
                     Eigen::VectorXd* grad = nullptr);

void zero_grads(const std::vector<NamedParam>& params);

class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum = 0.9) : lr_(lr), momentum_(momentum) {}

  void step(const std::vector<NamedParam>& params);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  double lr_;
  double momentum_;
  std::map<std::string, Eigen::MatrixXd> velocity_;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<NamedParam>& params);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::map<std::string, Eigen::MatrixXd> m_, v_;
};

}  // namespace hfd::nn
