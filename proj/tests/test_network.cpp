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

#include <cmath>
#include <random>

#include "doctest.h"
#include "qsense/network.hpp"

using namespace qsense;

namespace {

NetworkShape small_shape(std::size_t rows, std::size_t width) {
  NetworkShape s;
  s.rows = rows;
  s.row_width = width;
  s.key_dim = 6;
  s.hidden1 = 12;
  s.hidden2 = 10;
  s.actions = 5;
  return s;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// `used` leading rows filled, the rest zero.
EncodedState random_state(std::size_t rows, std::size_t width, std::size_t used, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  EncodedState s;
  s.rows = rows;
  s.row_width = width;
  s.gate_matrix.assign(rows * width, 0.0);
  for (std::size_t i = 0; i < used * width; ++i) s.gate_matrix[i] = u(rng);
  for (auto& g : s.global_features) g = 0.5 * (u(rng) + 1.0);
  return s;
}

Eigen::MatrixXd as_matrix(const EncodedState& s) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.row_width));
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.row_width; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s.at(r, c);
  return x;
}

// Hand-rolled scores, softmax and weighted sum, one row at a time.
Eigen::MatrixXd reference_attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wq,
                                    const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv) {
  const Eigen::Index m = x.rows();
  const Eigen::Index dk = wq.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, dk);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> score(static_cast<std::size_t>(m));
    double top = -1e300;
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < dk; ++k) {
        double q = 0.0;
        double kk = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          q += x(i, c) * wq(c, k);
          kk += x(j, c) * wk(c, k);
        }
        s += q * kk;
      }
      score[static_cast<std::size_t>(j)] = s / std::sqrt(static_cast<double>(dk));
      top = std::max(top, score[static_cast<std::size_t>(j)]);
    }
    double z = 0.0;
    for (auto& s : score) z += (s = std::exp(s - top));
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index k = 0; k < dk; ++k) {
        double v = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) v += x(j, c) * wv(c, k);
        out(i, k) += score[static_cast<std::size_t>(j)] / z * v;
      }
    }
  }
  return out;
}

// Network output through the dense reference attention.
Eigen::VectorXd dense_forward(const QNetwork& net, const EncodedState& s) {
  const auto& b = net.blocks();
  const Eigen::MatrixXd a =
      attention(as_matrix(s), b[QNetwork::kWq], b[QNetwork::kWk], b[QNetwork::kWv]);
  Eigen::VectorXd z(a.cols() + 4);
  z.head(a.cols()) = a.colwise().mean().transpose();
  for (int i = 0; i < 4; ++i) z(a.cols() + i) = s.global_features[static_cast<std::size_t>(i)];
  const Eigen::VectorXd h1 = (b[QNetwork::kW1] * z + b[QNetwork::kB1]).cwiseMax(0.0);
  const Eigen::VectorXd h2 = (b[QNetwork::kW2] * h1 + b[QNetwork::kB2]).cwiseMax(0.0);
  return b[QNetwork::kW3] * h2 + b[QNetwork::kB3];
}

}  // namespace

TEST_CASE("single-row attention returns the value row") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = random_matrix(1, 7, rng);
  const Eigen::MatrixXd wq = random_matrix(7, 4, rng);
  const Eigen::MatrixXd wk = random_matrix(7, 4, rng);
  const Eigen::MatrixXd wv = random_matrix(7, 4, rng);
  Eigen::MatrixXd w;
  const Eigen::MatrixXd out = attention(x, wq, wk, wv, &w);
  CHECK(w(0, 0) == 1.0);
  CHECK((out - x * wv).norm() < 1e-15);
}

TEST_CASE("identical rows share attention evenly") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd row = random_matrix(1, 5, rng);
  Eigen::MatrixXd x(2, 5);
  x << row, row;
  Eigen::MatrixXd w;
  attention(x, random_matrix(5, 3, rng), random_matrix(5, 3, rng), random_matrix(5, 3, rng), &w);
  CHECK(w(0, 0) == doctest::Approx(0.5));
  CHECK(w(0, 1) == doctest::Approx(0.5));
  CHECK(w(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("attention matches the hand-rolled reference") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd x = random_matrix(4, 9, rng);
    const Eigen::MatrixXd wq = random_matrix(9, 16, rng) * 0.3;
    const Eigen::MatrixXd wk = random_matrix(9, 16, rng) * 0.3;
    const Eigen::MatrixXd wv = random_matrix(9, 16, rng);
    Eigen::MatrixXd w;
    const Eigen::MatrixXd out = attention(x, wq, wk, wv, &w);
    CHECK((out - reference_attention(x, wq, wk, wv)).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax rows sum to one for extreme inputs") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = random_matrix(6, 5, rng) * 50.0;
  Eigen::MatrixXd w;
  attention(x, random_matrix(5, 4, rng), random_matrix(5, 4, rng), random_matrix(5, 4, rng), &w);
  for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-9);
  CHECK(w.allFinite());
}

TEST_CASE("folded zero rows give the dense result") {
  std::mt19937_64 rng(5);
  const NetworkShape shape = small_shape(12, 9);
  const QNetwork net(shape, rng);
  for (std::size_t used : {0, 1, 3, 11, 12}) {
    const EncodedState s = random_state(12, 9, used, rng);
    CHECK((net.forward(s) - dense_forward(net, s)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("a zero output layer gives zero Q-values") {
  std::mt19937_64 rng(6);
  QNetwork net(small_shape(5, 9), rng);
  net.blocks()[QNetwork::kW3].setZero();
  net.blocks()[QNetwork::kB3].setZero();
  for (int t = 0; t < 5; ++t) CHECK(net.forward(random_state(5, 9, 3, rng)).isZero(0.0));
}

TEST_CASE("forward is deterministic and seeded") {
  std::mt19937_64 a(7);
  std::mt19937_64 b(7);
  const QNetwork na(small_shape(5, 9), a);
  const QNetwork nb(small_shape(5, 9), b);
  CHECK(na == nb);
  std::mt19937_64 rng(8);
  const EncodedState s = random_state(5, 9, 2, rng);
  CHECK(na.forward(s) == na.forward(s));
  CHECK(na.forward(s) == nb.forward(s));
}

TEST_CASE("default shape and parameter count") {
  std::mt19937_64 rng(9);
  NetworkShape s;
  s.rows = 15;
  s.row_width = 13;
  s.actions = 16;
  const QNetwork net(s, rng);
  const std::size_t want = 3 * 13 * 16 + (20 * 256 + 256) + (256 * 128 + 128) + (128 * 16 + 16);
  CHECK(net.parameter_count() == want);
  CHECK(net.forward(encode_state(Circuit(2, 15, {Gate::h(0)}), 0, 0)).size() == 16);
  CHECK_THROWS(net.forward(encode_state(Circuit(3, 15), 0, 0)));
}

TEST_CASE("batched forward matches single forward") {
  std::mt19937_64 rng(10);
  const QNetwork net(small_shape(6, 9), rng);
  std::vector<EncodedState> states;
  for (std::size_t u = 0; u < 6; ++u) states.push_back(random_state(6, 9, u, rng));
  std::vector<const EncodedState*> ptrs;
  for (const auto& s : states) ptrs.push_back(&s);
  const Eigen::MatrixXd q = net.forward_batch(ptrs);
  for (std::size_t i = 0; i < states.size(); ++i)
    CHECK((q.col(static_cast<Eigen::Index>(i)) - net.forward(states[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(11);
  QNetwork net(small_shape(7, 9), rng);
  // Non-zero biases so every block is exercised away from zero.
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto b : {QNetwork::kB1, QNetwork::kB2, QNetwork::kB3})
    for (Eigen::Index i = 0; i < net.blocks()[b].size(); ++i) net.blocks()[b](i) = g(rng);

  std::vector<EncodedState> states = {random_state(7, 9, 2, rng), random_state(7, 9, 7, rng),
                                      random_state(7, 9, 4, rng)};
  std::vector<const EncodedState*> ptrs;
  for (const auto& s : states) ptrs.push_back(&s);
  const Eigen::MatrixXd dq = random_matrix(5, 3, rng);
  auto loss = [&](const QNetwork& n) { return (n.forward_batch(ptrs).array() * dq.array()).sum(); };

  const auto grads = net.backward(ptrs, dq);
  std::vector<double> flat;
  for (const auto& b : grads)
    for (Eigen::Index i = 0; i < b.size(); ++i) flat.push_back(b.data()[i]);
  REQUIRE(flat.size() == net.parameter_count());

  // Two parameters from every block, plus random ones.
  std::vector<std::size_t> picks;
  std::size_t offset = 0;
  for (const auto& b : net.blocks()) {
    const auto size = static_cast<std::size_t>(b.size());
    picks.push_back(offset);
    picks.push_back(offset + size / 2);
    offset += size;
  }
  std::uniform_int_distribution<std::size_t> any(0, net.parameter_count() - 1);
  while (picks.size() < 20) picks.push_back(any(rng));

  const double h = 1e-5;
  for (std::size_t p : picks) {
    QNetwork plus = net;
    QNetwork minus = net;
    plus.parameter(p) += h;
    minus.parameter(p) -= h;
    const double fd = (loss(plus) - loss(minus)) / (2 * h);
    const double an = flat[p];
    INFO("parameter " << p);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-8);
  }
}

TEST_CASE("Adam moves parameters against the gradient") {
  std::mt19937_64 rng(12);
  QNetwork net(small_shape(3, 9), rng);
  const QNetwork before = net;
  AdamOptimizer adam(net);
  std::vector<Eigen::MatrixXd> grads;
  for (const auto& b : net.blocks()) grads.push_back(Eigen::MatrixXd::Ones(b.rows(), b.cols()));
  adam.step(net, grads, 1e-3);
  CHECK(adam.steps() == 1);
  // First bias-corrected step is exactly lr * sign(g).
  for (std::size_t b = 0; b < net.blocks().size(); ++b)
    CHECK(((before.blocks()[b] - net.blocks()[b]).array() - 1e-3).abs().maxCoeff() < 1e-9);
}
