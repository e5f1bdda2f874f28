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

#include "qsense/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsense {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t k, std::mt19937_64& rng) const {
  if (k > items_.size()) throw std::invalid_argument("sample larger than the buffer");
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Transition*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&items_[idx[i]]);
  }
  return out;
}

PlateauScheduler::PlateauScheduler(PlateauConfig cfg, double lr) : cfg_(cfg), lr_(lr) {}

double PlateauScheduler::update(double episode_reward) {
  rewards_.push_back(episode_reward);
  const std::size_t w = std::min(cfg_.window, rewards_.size());
  double mean = 0.0;
  for (std::size_t i = rewards_.size() - w; i < rewards_.size(); ++i) mean += rewards_[i];
  mean /= static_cast<double>(w);
  if (!has_best_ || mean > best_) {
    best_ = mean;
    has_best_ = true;
    stale_ = 0;
  } else if (++stale_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    stale_ = 0;
  }
  return lr_;
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0))
    throw std::invalid_argument("epsilon bounds must satisfy 0 <= min <= start <= 1");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
    throw std::invalid_argument("epsilon_decay must be in (0, 1]");
  if (batch_size == 0 || min_batch == 0 || min_batch > batch_size)
    throw std::invalid_argument("batch sizes must satisfy 0 < min_batch <= batch_size");
  if (!(learning_rate > 0.0) || !(plateau.min_lr > 0.0) || plateau.min_lr > learning_rate)
    throw std::invalid_argument("learning rates must satisfy 0 < min_lr <= learning_rate");
  if (!(plateau.factor > 0.0 && plateau.factor < 1.0))
    throw std::invalid_argument("plateau factor must be in (0, 1)");
  if (plateau.window == 0) throw std::invalid_argument("plateau window must be positive");
  if (target_sync == 0) throw std::invalid_argument("target_sync must be positive");
  if (replay_capacity < batch_size) throw std::invalid_argument("replay capacity below batch size");
  if (key_dim == 0 || hidden1 == 0 || hidden2 == 0)
    throw std::invalid_argument("layer sizes must be positive");
}

std::size_t argmax(const Eigen::VectorXd& q) {
  if (q.size() == 0) throw std::invalid_argument("argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = i;
  return static_cast<std::size_t>(best);
}

std::size_t epsilon_greedy(const Eigen::VectorXd& q, double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(q.size()) - 1);
    return pick(rng);
  }
  return argmax(q);
}

namespace {

NetworkShape with_layers(NetworkShape shape, const AgentConfig& cfg) {
  shape.key_dim = cfg.key_dim;
  shape.hidden1 = cfg.hidden1;
  shape.hidden2 = cfg.hidden2;
  return shape;
}

QNetwork make_network(const NetworkShape& shape, const AgentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  return QNetwork(with_layers(shape, cfg), rng);
}

}  // namespace

DqnAgent::DqnAgent(const NetworkShape& shape, AgentConfig cfg)
    : cfg_(cfg),
      rng_(cfg.seed),
      main_(make_network(shape, cfg_, rng_)),
      target_(main_),
      adam_(main_, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon),
      buffer_(cfg.replay_capacity),
      scheduler_(cfg.plateau, cfg.learning_rate),
      epsilon_(cfg.epsilon_start) {}

std::size_t DqnAgent::select_action(const EncodedState& s) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t a;
  if (coin(rng_) < epsilon_) {
    std::uniform_int_distribution<std::size_t> pick(0, main_.shape().actions - 1);
    a = pick(rng_);
  } else {
    a = argmax(main_.forward(s));
  }
  ++selects_;
  epsilon_ = std::max(cfg_.epsilon_start * std::pow(cfg_.epsilon_decay, static_cast<double>(selects_)),
                      cfg_.epsilon_min);
  return a;
}

std::size_t DqnAgent::greedy_action(const EncodedState& s) const {
  return argmax(main_.forward(s));
}

void DqnAgent::remember(Transition t) { buffer_.push(std::move(t)); }

double DqnAgent::train() {
  if (buffer_.size() < cfg_.train_start || buffer_.size() < cfg_.min_batch) return -1.0;
  const std::size_t k = std::min(cfg_.batch_size, buffer_.size());
  const auto batch = buffer_.sample(k, rng_);
  return train_step(batch);
}

Eigen::VectorXd DqnAgent::targets(std::span<const Transition* const> batch) const {
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  Eigen::VectorXd y(bsz);
  std::vector<const EncodedState*> next;
  std::vector<Eigen::Index> live;
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    y(b) = t.reward;
    if (!t.done) {
      next.push_back(&t.next_state);
      live.push_back(b);
    }
  }
  if (next.empty()) return y;
  const Eigen::MatrixXd q_target = target_.forward_batch(next);
  const Eigen::MatrixXd q_main =
      cfg_.single_dqn_target ? Eigen::MatrixXd() : main_.forward_batch(next);
  for (std::size_t j = 0; j < live.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    double bootstrap;
    if (cfg_.single_dqn_target) {
      bootstrap = q_target.col(col).maxCoeff();
    } else {
      const auto a = static_cast<Eigen::Index>(argmax(q_main.col(col)));
      bootstrap = q_target(a, col);
    }
    y(live[j]) += cfg_.gamma * bootstrap;
  }
  return y;
}

double DqnAgent::train_step(std::span<const Transition* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  const Eigen::VectorXd y = targets(batch);
  std::vector<const EncodedState*> states;
  states.reserve(batch.size());
  for (const Transition* t : batch) states.push_back(&t->state);
  const Eigen::MatrixXd q = main_.forward_batch(states);

  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), bsz);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const auto a = static_cast<Eigen::Index>(batch[static_cast<std::size_t>(b)]->action);
    if (a >= q.rows()) throw std::out_of_range("transition action out of range");
    const double err = q(a, b) - y(b);
    loss += err * err;
    dq(a, b) = 2.0 * err / static_cast<double>(bsz);
  }
  loss /= static_cast<double>(bsz);

  adam_.step(main_, main_.backward(states, dq), scheduler_.lr());
  ++train_steps_;
  if (train_steps_ % cfg_.target_sync == 0) sync_target();
  return loss;
}

void DqnAgent::end_episode(double total_reward) { scheduler_.update(total_reward); }

}  // namespace qsense
