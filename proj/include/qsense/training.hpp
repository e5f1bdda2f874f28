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
 * @file training.hpp
 * @brief Training loop, greedy rollouts, agent-backed pipelines and agent
 * files.
 */
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qsense/agent.hpp"
#include "qsense/env.hpp"
#include "qsense/passes.hpp"

namespace qsense {

struct EpisodeLog {
  std::size_t episode = 0;
  double total_reward = 0.0;
  std::size_t steps = 0;
  MetricsRecord initial;
  MetricsRecord final;
  /// (D_in - D) / D_in and (G_in - G) / G_in against the reset circuit.
  double depth_reduction = 0.0;
  double gate_reduction = 0.0;
  double epsilon = 0.0;
  double learning_rate = 0.0;
  /// Mean training loss over the episode; 0 when no update happened.
  double mean_loss = 0.0;
};

/// Network dimensions for an environment.
NetworkShape network_shape(const EnvConfig& env, const AgentConfig& agent = {});

struct TrainingResult {
  DqnAgent agent;
  std::vector<EpisodeLog> episodes;
};

using EpisodeCallback = std::function<void(const EpisodeLog&)>;

/// Runs `episodes` episodes of epsilon-greedy interaction with one training
/// update per step once the buffer holds `train_start` transitions.
TrainingResult run_training(const EnvConfig& env_cfg, const AgentConfig& agent_cfg,
                            std::size_t episodes, const EpisodeCallback& on_episode = {});

struct RolloutResult {
  Circuit circuit;
  MetricsRecord metrics;
  double best_return = 0.0;
  std::size_t steps = 0;
};

/// Greedy episode from `start`; returns the circuit at the highest cumulative
/// reward seen, the start included.
RolloutResult agent_rollout(const QNetwork& net, const EnvConfig& env_cfg, const Circuit& start);

/// "agent": a greedy rollout.
Pipeline agent_pipeline(std::shared_ptr<const QNetwork> net, EnvConfig env_cfg);
/// "agent+simplify": a greedy rollout followed by simplify.
Pipeline agent_simplify_pipeline(std::shared_ptr<const QNetwork> net, EnvConfig env_cfg);

/// Table-style run summary. Initial and final values come from the episode
/// with the highest total reward; reductions are percentages.
struct RunSummary {
  std::size_t episodes = 0;
  std::size_t best_episode = 0;
  double initial_qfi = 0.0;
  double final_qfi = 0.0;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
  double max_depth_reduction = 0.0;
  double avg_depth_reduction = 0.0;
  double max_gate_reduction = 0.0;
  double avg_gate_reduction = 0.0;
};

/// Throws std::invalid_argument on an empty log.
RunSummary summarize_run(std::span<const EpisodeLog> log);

/// Trailing mean over up to `window` values ending at each index.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Binary agent file: magic, version, a JSON configuration string, then for
/// each parameter block its shape and row-major values.
void save_agent(const std::string& path, const QNetwork& net, const std::string& config_json);

struct LoadedAgent {
  QNetwork net;
  std::string config_json;
};

/// Throws std::runtime_error on a missing, truncated or foreign file.
LoadedAgent load_agent(const std::string& path);

}  // namespace qsense
