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
 * @file env.hpp
 * @brief Circuit-editing MDP driven by the DDQN agent.
 *
 * Each step applies one edit, simplifies, re-injects entanglement when it
 * drops below the adaptive threshold, recomputes metrics and pays the
 * weighted metric deltas as reward. Depth and gate deltas are normalized by
 * the episode's starting depth and gate count.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qsense/circuit.hpp"
#include "qsense/metrics.hpp"
#include "qsense/passes.hpp"
#include "qsense/simulator.hpp"

namespace qsense {

enum class ActionType {
  AddH,
  AddRX,
  AddRZ,
  AddCX,
  AddCZ,
  AddSWAP,
  AddCRX,
  RemoveLastOnQubit,
  SwapAdjacentCommuting,
  Inject,
  Boost,
  Stop,
};

/// `qubit` is the target qubit for single-qubit adds and removal, and the
/// lower qubit of the adjacent pair (q, q+1) for two-qubit adds.
struct Action {
  ActionType type = ActionType::Stop;
  int qubit = -1;
  friend bool operator==(const Action&, const Action&) = default;
};

/// 3n single-qubit adds, 4(n-1) adjacent-pair adds, n removals, then
/// swap, inject, boost and stop: 8n actions.
std::size_t action_space_size(int n_qubits);
Action decode_action(std::size_t index, int n_qubits);
std::size_t encode_action(const Action& a, int n_qubits);
std::string to_string(const Action& a);

struct RewardWeights {
  double qfi = 50.0;
  double depth = 30.0;
  double entropy = 10.0;
  double gates = 10.0;
  /// Optional penalty on growth of the accumulated gate error; off by default.
  double error = 0.0;
};

struct EnvConfig {
  int n_qubits = 2;
  std::size_t max_gates = 0;  // 0 -> default_max_gates(n_qubits)
  std::size_t max_steps = 100;
  RewardWeights weights;
  double initial_threshold = 0.7;
  double threshold_min = 0.5;
  double threshold_max = 0.9;
  double threshold_scale = 0.9;
  double ema_decay = 0.99;
  std::size_t patience = 50;
  std::size_t stability_window = 10;
  double entropy_tolerance = 1e-3;
  double capacity_penalty = -10.0;
  bool noise = false;
  NoiseModel noise_model;
  std::uint64_t seed = 0;
  SimLimits limits;

  std::size_t resolved_max_gates() const {
    return max_gates == 0 ? default_max_gates(n_qubits) : max_gates;
  }
  /// Throws std::invalid_argument, or ResourceLimitError for register sizes
  /// beyond the simulator ceilings.
  void validate() const;
};

/// Reward of one transition.
double reward(const MetricsRecord& prev, const MetricsRecord& cur,
              std::size_t depth_baseline, std::size_t gates_baseline,
              const RewardWeights& w);

/// theta = clamp(scale * EMA(entropy), min, max), starting at `initial`.
class AdaptiveThreshold {
 public:
  AdaptiveThreshold() = default;
  explicit AdaptiveThreshold(const EnvConfig& cfg);
  double value() const;
  double update(double entropy);

 private:
  double scale_ = 0.9, lo_ = 0.5, hi_ = 0.9, decay_ = 0.99;
  double ema_ = 0.7 / 0.9;
};

struct HistoryEntry {
  double cumulative_reward = 0.0;
  double entropy = 0.0;
  std::vector<Gate> gates;
};

/// True when the best cumulative reward is at least `patience` entries old,
/// the entropy moved less than `tolerance` over the last `window` entries
/// and the gate list did not change over them.
bool check_convergence(std::span<const HistoryEntry> history, std::size_t patience,
                       std::size_t window, double tolerance);

struct StepInfo {
  MetricsRecord metrics;
  bool boosted = false;
  bool injected = false;
  std::size_t simplified_gates_removed = 0;
  bool capacity_violation = false;
  bool converged = false;
};

struct StepOutcome {
  EncodedState next_state;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class EpisodeDone : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  /// Starts an episode from `initial`, or from a seeded random circuit.
  EncodedState reset(std::optional<Circuit> initial = std::nullopt);
  StepOutcome step(std::size_t action_index);
  StepOutcome step(const Action& a);

  const EnvConfig& config() const { return cfg_; }
  std::size_t action_count() const { return action_space_size(cfg_.n_qubits); }
  const Circuit& circuit() const { return circuit_; }
  const MetricsRecord& metrics() const { return metrics_; }
  const MetricsRecord& initial_metrics() const { return initial_metrics_; }
  double threshold() const { return threshold_.value(); }
  bool done() const { return done_; }
  std::size_t steps() const { return steps_; }
  double episode_return() const { return return_; }
  EncodedState observe() const;

  /// Gate count uniform in [M/4, M/2], gates, qubits and angles uniform.
  Circuit random_circuit();
  /// Entropy under the configured backend (noisy when noise is on).
  double entropy_of(const Circuit& c) const;
  MetricsRecord evaluate(const Circuit& c) const;

 private:
  EnvConfig cfg_;
  std::mt19937_64 rng_;
  Circuit circuit_;
  MetricsRecord metrics_;
  MetricsRecord initial_metrics_;
  AdaptiveThreshold threshold_;
  std::vector<HistoryEntry> history_;
  std::size_t steps_ = 0;
  double return_ = 0.0;
  bool done_ = true;
};

}  // namespace qsense
