// Copyright 2026 The qsense Authors
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

/**
 * @file network.hpp
 * @brief Q-value network: scaled dot-product self-attention over the gate
 * rows, mean pooling, then a ReLU MLP.
 *
 *   Q = X Wq, K = X Wk, V = X Wv
 *   A = softmax_rows(Q K^T / sqrt(d_k)) V
 *   z = [mean_rows(A); global_features]
 *   q = W3 relu(W2 relu(W1 z + b1) + b2) + b3
 *
 * Trailing all-zero rows of X (unused gate slots) have zero queries, keys
 * and values, so they are folded into one representative row with a
 * multiplicity. The result is identical to the dense computation.
 */
#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsense/circuit.hpp"

namespace qsense {

struct NetworkShape {
  std::size_t rows = 0;
  std::size_t row_width = 0;
  std::size_t global_dim = 4;
  std::size_t key_dim = 16;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;
  std::size_t actions = 0;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Dense reference attention over all rows; returns rows x key_dim.
/// `weights`, when given, receives the rows x rows softmax matrix.
Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wq,
                          const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                          Eigen::MatrixXd* weights = nullptr);

class QNetwork {
 public:
  // Parameter block order; also the serialization order.
  enum Block : std::size_t { kWq, kWk, kWv, kW1, kB1, kW2, kB2, kW3, kB3, kNumBlocks };

  QNetwork() = default;
  /// He-uniform hidden layers, Glorot-uniform attention and output, zero biases.
  QNetwork(const NetworkShape& shape, std::mt19937_64& rng);

  const NetworkShape& shape() const { return shape_; }
  std::vector<Eigen::MatrixXd>& blocks() { return blocks_; }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }
  static const char* block_name(std::size_t b);

  std::size_t parameter_count() const;
  double& parameter(std::size_t flat_index);
  double parameter(std::size_t flat_index) const;

  Eigen::VectorXd forward(const EncodedState& s) const;
  /// actions x batch.
  Eigen::MatrixXd forward_batch(std::span<const EncodedState* const> batch) const;
  /// Gradients of sum_b <dq[:, b], q(s_b)> with respect to every block.
  std::vector<Eigen::MatrixXd> backward(std::span<const EncodedState* const> batch,
                                        const Eigen::MatrixXd& dq) const;

  /// Same shape and bit-identical parameters.
  friend bool operator==(const QNetwork& a, const QNetwork& b);

 private:
  void check(const EncodedState& s) const;

  NetworkShape shape_;
  std::vector<Eigen::MatrixXd> blocks_;
};

/// Adam with bias correction; the learning rate is supplied per step.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const QNetwork& net, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  void step(QNetwork& net, const std::vector<Eigen::MatrixXd>& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace qsense
