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

#include "qsense/training.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qsense {

NetworkShape network_shape(const EnvConfig& env, const AgentConfig& agent) {
  NetworkShape s;
  s.rows = env.resolved_max_gates();
  s.row_width = encoded_row_width(env.n_qubits);
  s.global_dim = 4;
  s.key_dim = agent.key_dim;
  s.hidden1 = agent.hidden1;
  s.hidden2 = agent.hidden2;
  s.actions = action_space_size(env.n_qubits);
  return s;
}

TrainingResult run_training(const EnvConfig& env_cfg, const AgentConfig& agent_cfg,
                            std::size_t episodes, const EpisodeCallback& on_episode) {
  Environment env(env_cfg);
  TrainingResult result{DqnAgent(network_shape(env_cfg, agent_cfg), agent_cfg), {}};
  DqnAgent& agent = result.agent;
  result.episodes.reserve(episodes);

  for (std::size_t ep = 0; ep < episodes; ++ep) {
    EncodedState s = env.reset();
    double loss_sum = 0.0;
    std::size_t updates = 0;
    while (!env.done()) {
      const std::size_t a = agent.select_action(s);
      StepOutcome out = env.step(a);
      agent.remember({s, a, out.reward, out.next_state, out.done});
      const double loss = agent.train();
      if (loss >= 0.0) {
        loss_sum += loss;
        ++updates;
      }
      s = std::move(out.next_state);
    }

    EpisodeLog log;
    log.episode = ep + 1;
    log.total_reward = env.episode_return();
    log.steps = env.steps();
    log.initial = env.initial_metrics();
    log.final = env.metrics();
    log.depth_reduction = depth_ratio(log.initial.depth, log.final.depth).value;
    log.gate_reduction = gate_ratio(log.initial.gates, log.final.gates).value;
    agent.end_episode(log.total_reward);
    log.epsilon = agent.epsilon();
    log.learning_rate = agent.learning_rate();
    log.mean_loss = updates ? loss_sum / static_cast<double>(updates) : 0.0;
    if (on_episode) on_episode(log);
    result.episodes.push_back(std::move(log));
  }
  return result;
}

RolloutResult agent_rollout(const QNetwork& net, const EnvConfig& env_cfg, const Circuit& start) {
  Environment env(env_cfg);
  EncodedState s = env.reset(start);
  RolloutResult best{env.circuit(), env.metrics(), 0.0, 0};
  while (!env.done()) {
    StepOutcome out = env.step(argmax(net.forward(s)));
    if (env.episode_return() > best.best_return) {
      best.circuit = env.circuit();
      best.metrics = env.metrics();
      best.best_return = env.episode_return();
    }
    s = std::move(out.next_state);
  }
  best.steps = env.steps();
  return best;
}

Pipeline agent_pipeline(std::shared_ptr<const QNetwork> net, EnvConfig env_cfg) {
  if (!net) throw std::invalid_argument("agent pipeline needs a network");
  return {"agent", [net, env_cfg](const Circuit& c) {
            return agent_rollout(*net, env_cfg, c).circuit;
          }};
}

Pipeline agent_simplify_pipeline(std::shared_ptr<const QNetwork> net, EnvConfig env_cfg) {
  if (!net) throw std::invalid_argument("agent pipeline needs a network");
  return {"agent+simplify", [net, env_cfg](const Circuit& c) {
            return simplify(agent_rollout(*net, env_cfg, c).circuit).circuit;
          }};
}

RunSummary summarize_run(std::span<const EpisodeLog> log) {
  if (log.empty()) throw std::invalid_argument("cannot summarize an empty run");
  RunSummary s;
  s.episodes = log.size();
  const EpisodeLog* best = &log.front();
  double depth_sum = 0.0, gate_sum = 0.0;
  s.max_depth_reduction = log.front().depth_reduction;
  s.max_gate_reduction = log.front().gate_reduction;
  for (const EpisodeLog& e : log) {
    if (e.total_reward > best->total_reward) best = &e;
    s.max_depth_reduction = std::max(s.max_depth_reduction, e.depth_reduction);
    s.max_gate_reduction = std::max(s.max_gate_reduction, e.gate_reduction);
    depth_sum += e.depth_reduction;
    gate_sum += e.gate_reduction;
  }
  const double count = static_cast<double>(log.size());
  s.best_episode = best->episode;
  s.initial_qfi = best->initial.qfi_norm;
  s.final_qfi = best->final.qfi_norm;
  s.initial_entropy = best->initial.entropy_norm;
  s.final_entropy = best->final.entropy_norm;
  s.max_depth_reduction *= 100.0;
  s.max_gate_reduction *= 100.0;
  s.avg_depth_reduction = 100.0 * depth_sum / count;
  s.avg_gate_reduction = 100.0 * gate_sum / count;
  return s;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'S', 'A', 'G', 'E', 'N', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("agent file is truncated");
  return v;
}

}  // namespace

void save_agent(const std::string& path, const QNetwork& net, const std::string& config_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write agent file " + path);
  os.write(kMagic.data(), kMagic.size());
  put(os, kVersion);
  const NetworkShape& sh = net.shape();
  for (std::size_t v : {sh.rows, sh.row_width, sh.global_dim, sh.key_dim, sh.hidden1,
                        sh.hidden2, sh.actions})
    put(os, static_cast<std::uint64_t>(v));
  put(os, static_cast<std::uint64_t>(config_json.size()));
  os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  put(os, static_cast<std::uint64_t>(net.blocks().size()));
  for (const auto& b : net.blocks()) {
    put(os, static_cast<std::uint64_t>(b.rows()));
    put(os, static_cast<std::uint64_t>(b.cols()));
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) put(os, b(r, c));
  }
  if (!os) throw std::runtime_error("failed writing agent file " + path);
}

LoadedAgent load_agent(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open agent file " + path);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error(path + " is not an agent file");
  if (get<std::uint32_t>(is) != kVersion)
    throw std::runtime_error(path + " has an unsupported agent file version");

  NetworkShape sh;
  for (std::size_t* f : {&sh.rows, &sh.row_width, &sh.global_dim, &sh.key_dim, &sh.hidden1,
                         &sh.hidden2, &sh.actions})
    *f = static_cast<std::size_t>(get<std::uint64_t>(is));
  const auto json_len = get<std::uint64_t>(is);
  if (json_len > (std::uint64_t{1} << 24)) throw std::runtime_error("agent file is corrupt");
  LoadedAgent out;
  out.config_json.resize(json_len);
  is.read(out.config_json.data(), static_cast<std::streamsize>(json_len));
  if (!is) throw std::runtime_error("agent file is truncated");

  std::mt19937_64 rng(0);
  out.net = QNetwork(sh, rng);
  auto& blocks = out.net.blocks();
  if (get<std::uint64_t>(is) != blocks.size())
    throw std::runtime_error("agent file has the wrong number of blocks");
  for (auto& b : blocks) {
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    if (rows != static_cast<std::uint64_t>(b.rows()) || cols != static_cast<std::uint64_t>(b.cols()))
      throw std::runtime_error("agent file block shape does not match its header");
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = get<double>(is);
  }
  return out;
}

}  // namespace qsense
