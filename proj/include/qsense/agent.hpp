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
 * @file agent.hpp
 * @brief Double DQN: replay buffer, epsilon-greedy selection, target
 * network and a plateau learning-rate schedule.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "qsense/circuit.hpp"
#include "qsense/network.hpp"

namespace qsense {

struct Transition {
  EncodedState state;
  std::size_t action = 0;
  double reward = 0.0;
  EncodedState next_state;
  bool done = false;
};

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 2000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  /// `k` distinct transitions chosen uniformly. Throws if k > size().
  std::vector<const Transition*> sample(std::size_t k, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct PlateauConfig {
  double factor = 0.5;
  std::size_t patience = 20;
  double min_lr = 1e-5;
  std::size_t window = 10;
};

/// Halves the learning rate when the best windowed mean episode reward has
/// not improved for `patience` episodes.
class PlateauScheduler {
 public:
  PlateauScheduler() = default;
  PlateauScheduler(PlateauConfig cfg, double lr);

  /// Records one episode reward and returns the learning rate to use next.
  double update(double episode_reward);
  double lr() const { return lr_; }

 private:
  PlateauConfig cfg_;
  double lr_ = 1e-3;
  std::vector<double> rewards_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t stale_ = 0;
};

struct AgentConfig {
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.999;
  double epsilon_min = 0.01;
  std::size_t batch_size = 64;
  std::size_t min_batch = 16;
  std::size_t train_start = 64;
  double learning_rate = 1e-3;
  std::size_t target_sync = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  PlateauConfig plateau;
  std::size_t replay_capacity = 2000;
  /// y = r + gamma max_a Q_target(s', a) instead of the decoupled target.
  bool single_dqn_target = false;
  std::size_t key_dim = 16;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Index of the largest entry; the lowest index wins exact ties.
std::size_t argmax(const Eigen::VectorXd& q);

/// Uniform action with probability epsilon, otherwise argmax(q).
std::size_t epsilon_greedy(const Eigen::VectorXd& q, double epsilon, std::mt19937_64& rng);

class DqnAgent {
 public:
  /// Layer sizes come from `cfg`; only the input and output dimensions of
  /// `shape` are used.
  DqnAgent(const NetworkShape& shape, AgentConfig cfg);

  const AgentConfig& config() const { return cfg_; }
  const QNetwork& main() const { return main_; }
  const QNetwork& target() const { return target_; }
  QNetwork& main() { return main_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  double epsilon() const { return epsilon_; }
  double learning_rate() const { return scheduler_.lr(); }
  std::size_t train_steps() const { return train_steps_; }
  std::size_t select_count() const { return selects_; }

  /// Epsilon-greedy choice, then epsilon decays one step.
  std::size_t select_action(const EncodedState& s);
  std::size_t greedy_action(const EncodedState& s) const;

  void remember(Transition t);
  /// Samples a batch when enough transitions are stored and trains on it.
  /// Returns the loss, or a negative value when no update happened.
  double train();
  /// One gradient step on the given transitions; returns the mean squared
  /// error on the taken actions before the update.
  double train_step(std::span<const Transition* const> batch);
  /// Per-transition regression targets for `batch`.
  Eigen::VectorXd targets(std::span<const Transition* const> batch) const;

  /// Records an episode reward for the learning-rate schedule.
  void end_episode(double total_reward);
  void sync_target() { target_ = main_; }

 private:
  AgentConfig cfg_;
  std::mt19937_64 rng_;
  QNetwork main_;
  QNetwork target_;
  AdamOptimizer adam_;
  ReplayBuffer buffer_;
  PlateauScheduler scheduler_;
  double epsilon_;
  std::size_t selects_ = 0;
  std::size_t train_steps_ = 0;
};

}  // namespace qsense
