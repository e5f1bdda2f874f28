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

#include "qsense/network.hpp"

#include <cmath>
#include <stdexcept>

namespace qsense {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  // Fill in row-major order so the draw sequence is layout-independent.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// Attention state for one sample on the compressed rows.
struct AttentionCache {
  Eigen::MatrixXd x;       // effective rows x row_width
  Eigen::VectorXd count;   // multiplicity of each effective row
  Eigen::MatrixXd q, k, v; // effective rows x key_dim
  Eigen::MatrixXd p;       // effective rows x effective rows, rows sum to 1
  Eigen::VectorXd pooled;  // key_dim
};

AttentionCache attend(const EncodedState& s, const std::vector<Eigen::MatrixXd>& blocks) {
  const RowMajorMap full(s.gate_matrix.data(), static_cast<Eigen::Index>(s.rows),
                         static_cast<Eigen::Index>(s.row_width));
  Eigen::Index used = full.rows();
  while (used > 0 && full.row(used - 1).isZero(0.0)) --used;
  const Eigen::Index padding = full.rows() - used;
  const Eigen::Index eff = used + (padding > 0 ? 1 : 0);

  AttentionCache c;
  c.x = Eigen::MatrixXd::Zero(eff, full.cols());
  c.x.topRows(used) = full.topRows(used);
  c.count = Eigen::VectorXd::Ones(eff);
  if (padding > 0) c.count(eff - 1) = static_cast<double>(padding);

  const auto& wq = blocks[QNetwork::kWq];
  const auto& wk = blocks[QNetwork::kWk];
  const auto& wv = blocks[QNetwork::kWv];
  c.q = c.x * wq;
  c.k = c.x * wk;
  c.v = c.x * wv;
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  Eigen::MatrixXd scores = (c.q * c.k.transpose()) * scale;
  c.p.resize(eff, eff);
  for (Eigen::Index i = 0; i < eff; ++i) {
    const double mx = scores.row(i).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(i).array() - mx).exp().matrix();
    e.array() *= c.count.transpose().array();
    c.p.row(i) = e / e.sum();
  }
  const Eigen::MatrixXd out = c.p * c.v;
  c.pooled = (out.transpose() * c.count) / static_cast<double>(full.rows());
  return c;
}

}  // namespace

Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wq,
                          const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                          Eigen::MatrixXd* weights) {
  const Eigen::MatrixXd q = x * wq;
  const Eigen::MatrixXd k = x * wk;
  const Eigen::MatrixXd v = x * wv;
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  Eigen::MatrixXd p = (q * k.transpose()) * scale;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  if (weights) *weights = p;
  return p * v;
}

QNetwork::QNetwork(const NetworkShape& shape, std::mt19937_64& rng) : shape_(shape) {
  if (shape.rows == 0 || shape.row_width == 0 || shape.key_dim == 0 ||
      shape.hidden1 == 0 || shape.hidden2 == 0 || shape.actions == 0)
    throw std::invalid_argument("network dimensions must be positive");
  const auto w = static_cast<Eigen::Index>(shape.row_width);
  const auto dk = static_cast<Eigen::Index>(shape.key_dim);
  const auto in = static_cast<Eigen::Index>(shape.key_dim + shape.global_dim);
  const auto h1 = static_cast<Eigen::Index>(shape.hidden1);
  const auto h2 = static_cast<Eigen::Index>(shape.hidden2);
  const auto a = static_cast<Eigen::Index>(shape.actions);
  const double glorot = std::sqrt(6.0 / static_cast<double>(w + dk));
  blocks_.resize(kNumBlocks);
  blocks_[kWq] = uniform_matrix(w, dk, glorot, rng);
  blocks_[kWk] = uniform_matrix(w, dk, glorot, rng);
  blocks_[kWv] = uniform_matrix(w, dk, glorot, rng);
  blocks_[kW1] = uniform_matrix(h1, in, std::sqrt(6.0 / static_cast<double>(in)), rng);
  blocks_[kB1] = Eigen::MatrixXd::Zero(h1, 1);
  blocks_[kW2] = uniform_matrix(h2, h1, std::sqrt(6.0 / static_cast<double>(h1)), rng);
  blocks_[kB2] = Eigen::MatrixXd::Zero(h2, 1);
  blocks_[kW3] = uniform_matrix(a, h2, std::sqrt(6.0 / static_cast<double>(h2 + a)), rng);
  blocks_[kB3] = Eigen::MatrixXd::Zero(a, 1);
}

const char* QNetwork::block_name(std::size_t b) {
  static constexpr const char* kNames[] = {"wq", "wk", "wv", "w1", "b1",
                                           "w2", "b2", "w3", "b3"};
  return b < kNumBlocks ? kNames[b] : "?";
}

bool operator==(const QNetwork& a, const QNetwork& b) {
  if (!(a.shape_ == b.shape_) || a.blocks_.size() != b.blocks_.size()) return false;
  for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
    if (a.blocks_[i].rows() != b.blocks_[i].rows() ||
        a.blocks_[i].cols() != b.blocks_[i].cols() || a.blocks_[i] != b.blocks_[i])
      return false;
  }
  return true;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.size());
  return n;
}

double& QNetwork::parameter(std::size_t flat_index) {
  for (auto& b : blocks_) {
    const auto sz = static_cast<std::size_t>(b.size());
    if (flat_index < sz) return b.data()[flat_index];
    flat_index -= sz;
  }
  throw std::out_of_range("parameter index out of range");
}

double QNetwork::parameter(std::size_t flat_index) const {
  return const_cast<QNetwork*>(this)->parameter(flat_index);
}

void QNetwork::check(const EncodedState& s) const {
  if (s.rows != shape_.rows || s.row_width != shape_.row_width ||
      s.gate_matrix.size() != s.rows * s.row_width || shape_.global_dim != 4)
    throw std::invalid_argument("encoded state does not match the network shape");
}

Eigen::VectorXd QNetwork::forward(const EncodedState& s) const {
  const EncodedState* one[] = {&s};
  return forward_batch(one).col(0);
}

Eigen::MatrixXd QNetwork::forward_batch(std::span<const EncodedState* const> batch) const {
  const auto dk = static_cast<Eigen::Index>(shape_.key_dim);
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd z(dk + 4, bsz);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const EncodedState& s = *batch[static_cast<std::size_t>(b)];
    check(s);
    z.col(b).head(dk) = attend(s, blocks_).pooled;
    for (Eigen::Index g = 0; g < 4; ++g) z(dk + g, b) = s.global_features[static_cast<std::size_t>(g)];
  }
  Eigen::MatrixXd h1 = (blocks_[kW1] * z).colwise() + blocks_[kB1].col(0);
  h1 = h1.cwiseMax(0.0);
  Eigen::MatrixXd h2 = (blocks_[kW2] * h1).colwise() + blocks_[kB2].col(0);
  h2 = h2.cwiseMax(0.0);
  return (blocks_[kW3] * h2).colwise() + blocks_[kB3].col(0);
}

std::vector<Eigen::MatrixXd> QNetwork::backward(std::span<const EncodedState* const> batch,
                                                const Eigen::MatrixXd& dq) const {
  const auto dk = static_cast<Eigen::Index>(shape_.key_dim);
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  if (dq.rows() != static_cast<Eigen::Index>(shape_.actions) || dq.cols() != bsz)
    throw std::invalid_argument("output gradient has the wrong shape");

  std::vector<AttentionCache> caches;
  caches.reserve(batch.size());
  Eigen::MatrixXd z(dk + 4, bsz);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const EncodedState& s = *batch[static_cast<std::size_t>(b)];
    check(s);
    caches.push_back(attend(s, blocks_));
    z.col(b).head(dk) = caches.back().pooled;
    for (Eigen::Index g = 0; g < 4; ++g) z(dk + g, b) = s.global_features[static_cast<std::size_t>(g)];
  }
  const Eigen::MatrixXd a1 = (blocks_[kW1] * z).colwise() + blocks_[kB1].col(0);
  const Eigen::MatrixXd h1 = a1.cwiseMax(0.0);
  const Eigen::MatrixXd a2 = (blocks_[kW2] * h1).colwise() + blocks_[kB2].col(0);
  const Eigen::MatrixXd h2 = a2.cwiseMax(0.0);

  std::vector<Eigen::MatrixXd> g(kNumBlocks);
  g[kW3] = dq * h2.transpose();
  g[kB3] = dq.rowwise().sum();
  const Eigen::MatrixXd d2 =
      ((blocks_[kW3].transpose() * dq).array() * (a2.array() > 0.0).cast<double>()).matrix();
  g[kW2] = d2 * h1.transpose();
  g[kB2] = d2.rowwise().sum();
  const Eigen::MatrixXd d1 =
      ((blocks_[kW2].transpose() * d2).array() * (a1.array() > 0.0).cast<double>()).matrix();
  g[kW1] = d1 * z.transpose();
  g[kB1] = d1.rowwise().sum();
  const Eigen::MatrixXd dz = blocks_[kW1].transpose() * d1;

  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const double m = static_cast<double>(shape_.rows);
  g[kWq] = Eigen::MatrixXd::Zero(blocks_[kWq].rows(), dk);
  g[kWk] = Eigen::MatrixXd::Zero(blocks_[kWk].rows(), dk);
  g[kWv] = Eigen::MatrixXd::Zero(blocks_[kWv].rows(), dk);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const AttentionCache& c = caches[static_cast<std::size_t>(b)];
    const Eigen::VectorXd dpooled = dz.col(b).head(dk);
    // Each effective row i stands for count(i) identical output rows.
    const Eigen::MatrixXd d_out = (c.count / m) * dpooled.transpose();
    const Eigen::MatrixXd dp = d_out * c.v.transpose();
    const Eigen::MatrixXd dv = c.p.transpose() * d_out;
    const Eigen::VectorXd row_dot = (dp.array() * c.p.array()).rowwise().sum();
    const Eigen::MatrixXd ds =
        (c.p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
    const Eigen::MatrixXd dqm = ds * c.k;
    const Eigen::MatrixXd dkm = ds.transpose() * c.q;
    g[kWq].noalias() += c.x.transpose() * dqm;
    g[kWk].noalias() += c.x.transpose() * dkm;
    g[kWv].noalias() += c.x.transpose() * dv;
  }
  return g;
}

AdamOptimizer::AdamOptimizer(const QNetwork& net, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& b : net.blocks()) {
    m_.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
  }
}

void AdamOptimizer::step(QNetwork& net, const std::vector<Eigen::MatrixXd>& grads, double lr) {
  auto& blocks = net.blocks();
  if (grads.size() != blocks.size() || m_.size() != blocks.size())
    throw std::invalid_argument("gradient blocks do not match the network");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
    blocks[i].array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace qsense
