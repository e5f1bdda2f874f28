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
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "qsense/agent.hpp"
#include "qsense/training.hpp"

using namespace qsense;

namespace {

// One-row encodings of a small discrete state space.
EncodedState one_hot(std::size_t state, std::size_t states) {
  EncodedState s;
  s.rows = 1;
  s.row_width = states;
  s.gate_matrix.assign(states, 0.0);
  s.gate_matrix[state] = 1.0;
  return s;
}

NetworkShape tiny_shape(std::size_t states, std::size_t actions) {
  NetworkShape s;
  s.rows = 1;
  s.row_width = states;
  s.key_dim = 8;
  s.hidden1 = 32;
  s.hidden2 = 32;
  s.actions = actions;
  return s;
}

AgentConfig tiny_config(std::uint64_t seed) {
  AgentConfig cfg;
  cfg.seed = seed;
  cfg.key_dim = 8;
  cfg.hidden1 = 32;
  cfg.hidden2 = 32;
  return cfg;
}

Transition make_transition(std::size_t id) {
  Transition t;
  t.action = id;
  return t;
}

}  // namespace

TEST_CASE("replay buffer evicts the oldest transitions") {
  ReplayBuffer buf(2000);
  for (std::size_t i = 0; i < 2500; ++i) {
    buf.push(make_transition(i));
    CHECK(buf.size() <= 2000);
  }
  CHECK(buf.size() == 2000);
  CHECK(buf[0].action == 500);
  CHECK(buf[1999].action == 2499);
  std::mt19937_64 rng(1);
  const auto batch = buf.sample(64, rng);
  std::set<std::size_t> ids;
  for (const auto* t : batch) {
    ids.insert(t->action);
    CHECK(t->action >= 500);
  }
  CHECK(ids.size() == 64);
  CHECK_THROWS(buf.sample(2001, rng));
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buf(10);
  for (std::size_t i = 0; i < 10; ++i) buf.push(make_transition(i));
  std::mt19937_64 rng(2);
  std::vector<int> counts(10, 0);
  for (int t = 0; t < 10000; ++t)
    for (const auto* x : buf.sample(3, rng)) ++counts[x->action];
  for (int c : counts) CHECK(std::abs(c - 3000) < 3 * std::sqrt(30000 * 0.1 * 0.9));
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Eigen::VectorXd q(3);
  q << 0.0, 5.0, 5.0;
  CHECK(argmax(q) == 1);
  std::mt19937_64 rng(3);
  CHECK(epsilon_greedy(q, 0.0, rng) == 1);
}

TEST_CASE("epsilon one picks actions uniformly") {
  std::mt19937_64 rng(4);
  const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
  std::vector<int> counts(10, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[epsilon_greedy(q, 1.0, rng)];
  double chi2 = 0.0;
  const double expect = draws / 10.0;
  for (int c : counts) {
    chi2 += (c - expect) * (c - expect) / expect;
    CHECK(std::abs(c - expect) < 3 * std::sqrt(draws * 0.1 * 0.9));
  }
  // 9 degrees of freedom, p = 0.001.
  CHECK(chi2 < 27.88);
}

TEST_CASE("epsilon decays geometrically to its floor") {
  DqnAgent agent(tiny_shape(3, 4), tiny_config(5));
  const EncodedState s = one_hot(0, 3);
  CHECK(agent.epsilon() == 1.0);
  for (int t = 0; t < 1000; ++t) agent.select_action(s);
  CHECK(agent.epsilon() == doctest::Approx(std::pow(0.999, 1000)).epsilon(1e-12));
  CHECK(agent.epsilon() == doctest::Approx(0.3677).epsilon(1e-3));
  double prev = agent.epsilon();
  for (int t = 0; t < 5000; ++t) {
    agent.select_action(s);
    const double want = std::max(std::pow(0.999, 1001.0 + t), 0.01);
    CHECK(agent.epsilon() == doctest::Approx(want).epsilon(1e-12));
    CHECK(agent.epsilon() <= prev);
    prev = agent.epsilon();
  }
  CHECK(agent.epsilon() == 0.01);
}

TEST_CASE("terminal targets are the reward") {
  DqnAgent agent(tiny_shape(3, 2), tiny_config(6));
  agent.main().blocks()[QNetwork::kW3].setZero();
  agent.main().blocks()[QNetwork::kB3].setZero();
  Transition t{one_hot(0, 3), 1, 1.0, one_hot(1, 3), true};
  const Transition* batch[] = {&t};
  CHECK(agent.targets(batch)(0) == 1.0);
  CHECK(agent.train_step(batch) == doctest::Approx(1.0));
}

TEST_CASE("non-terminal targets use the decoupled argmax") {
  DqnAgent agent(tiny_shape(3, 4), tiny_config(7));
  agent.main().blocks()[QNetwork::kB3](2) += 3.0;  // main prefers action 2
  Transition t{one_hot(0, 3), 1, 0.5, one_hot(1, 3), false};
  const Transition* batch[] = {&t};
  const Eigen::VectorXd qt = agent.target().forward(t.next_state);
  const std::size_t a = argmax(agent.main().forward(t.next_state));
  CHECK(a == 2);
  CHECK(agent.targets(batch)(0) == doctest::Approx(0.5 + 0.95 * qt(2)).epsilon(1e-14));

  AgentConfig single = tiny_config(7);
  single.single_dqn_target = true;
  DqnAgent s(tiny_shape(3, 4), single);
  const Eigen::VectorXd qs = s.target().forward(t.next_state);
  CHECK(s.targets(batch)(0) == doctest::Approx(0.5 + 0.95 * qs.maxCoeff()).epsilon(1e-14));
}

TEST_CASE("the tabular update rule arithmetic") {
  const double q = 0.0;
  const double alpha = 0.1;
  const double y = 1.0 + 0.95 * 2.0;
  CHECK(q + alpha * (y - q) == doctest::Approx(0.29));
}

TEST_CASE("target network syncs every 100 training steps") {
  DqnAgent agent(tiny_shape(3, 2), tiny_config(8));
  const QNetwork initial = agent.target();
  Transition t{one_hot(0, 3), 0, 1.0, one_hot(1, 3), false};
  std::vector<const Transition*> batch(16, &t);
  for (int i = 0; i < 99; ++i) agent.train_step(batch);
  CHECK(agent.train_steps() == 99);
  CHECK(agent.target() == initial);
  CHECK_FALSE(agent.main() == agent.target());
  agent.train_step(batch);
  CHECK(agent.main() == agent.target());
  const QNetwork snap = agent.target();
  agent.train_step(batch);
  CHECK(agent.target() == snap);
  CHECK_THROWS(agent.train_step(std::span<const Transition* const>{}));
}

TEST_CASE("train waits for the buffer to fill") {
  DqnAgent agent(tiny_shape(3, 2), tiny_config(9));
  for (std::size_t i = 0; i < 63; ++i) agent.remember({one_hot(0, 3), 0, 0.0, one_hot(1, 3), false});
  CHECK(agent.train() < 0.0);
  agent.remember({one_hot(0, 3), 0, 0.0, one_hot(1, 3), false});
  CHECK(agent.train() >= 0.0);
  CHECK(agent.train_steps() == 1);
}

TEST_CASE("plateau scheduler") {
  SUBCASE("improving rewards keep the rate") {
    PlateauScheduler s({}, 1e-3);
    for (int i = 0; i < 100; ++i) CHECK(s.update(static_cast<double>(i)) == 1e-3);
  }
  SUBCASE("twenty stagnant episodes halve it") {
    PlateauScheduler s({}, 1e-3);
    s.update(1.0);
    for (int i = 0; i < 19; ++i) CHECK(s.update(1.0) == 1e-3);
    CHECK(s.update(1.0) == doctest::Approx(5e-4));
  }
  SUBCASE("repeated stagnation floors at the minimum") {
    PlateauScheduler s({}, 1e-3);
    double prev = 1e-3;
    for (int i = 0; i < 1000; ++i) {
      const double lr = s.update(0.0);
      CHECK(lr <= prev);
      CHECK(lr >= 1e-5);
      prev = lr;
    }
    CHECK(prev == 1e-5);
  }
}

TEST_CASE("Q-values converge on a deterministic chain") {
  // States 0..4, actions left/right; reaching state 4 pays 1 and ends.
  const std::size_t n = 5;
  const double gamma = 0.95;
  auto next_state = [&](std::size_t s, std::size_t a) {
    return a == 1 ? s + 1 : (s == 0 ? 0 : s - 1);
  };
  // Value iteration oracle.
  std::vector<std::array<double, 2>> qstar(n, {0.0, 0.0});
  for (int it = 0; it < 500; ++it) {
    for (std::size_t s = 0; s + 1 < n; ++s) {
      for (std::size_t a = 0; a < 2; ++a) {
        const std::size_t s2 = next_state(s, a);
        qstar[s][a] = s2 == n - 1 ? 1.0 : gamma * std::max(qstar[s2][0], qstar[s2][1]);
      }
    }
  }
  AgentConfig cfg = tiny_config(10);
  DqnAgent agent(tiny_shape(n, 2), cfg);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> start(0, n - 2);
  std::uniform_int_distribution<std::size_t> act(0, 1);
  std::size_t s = start(rng);
  for (int step = 0; step < 5000; ++step) {
    const std::size_t a = act(rng);
    const std::size_t s2 = next_state(s, a);
    const bool done = s2 == n - 1;
    agent.remember({one_hot(s, n), a, done ? 1.0 : 0.0, one_hot(s2, n), done});
    agent.train();
    s = done ? start(rng) : s2;
  }
  for (std::size_t st = 0; st + 1 < n; ++st) {
    const Eigen::VectorXd q = agent.main().forward(one_hot(st, n));
    for (std::size_t a = 0; a < 2; ++a) {
      INFO("state " << st << " action " << a);
      CHECK(std::abs(q(static_cast<Eigen::Index>(a)) - qstar[st][a]) < 0.05);
    }
  }
}

TEST_CASE("double targets overestimate less than single targets") {
  // State 0: action 0 ends with reward 0, any other action moves to state 1.
  // State 1: every action ends with reward N(-0.1, 1). True Q(0, a>0) = -0.095.
  const std::size_t actions = 8;
  const double gamma = 0.95;
  const double truth = gamma * -0.1;
  auto bias = [&](bool single, std::uint64_t seed) {
    AgentConfig cfg = tiny_config(seed);
    cfg.single_dqn_target = single;
    DqnAgent agent(tiny_shape(2, actions), cfg);
    std::mt19937_64 rng(seed * 7919 + 1);
    std::normal_distribution<double> noise(-0.1, 1.0);
    std::uniform_int_distribution<std::size_t> act(0, actions - 1);
    for (int step = 0; step < 1500; ++step) {
      const std::size_t a = act(rng);
      if (step % 2 == 0) {
        if (a == 0)
          agent.remember({one_hot(0, 2), 0, 0.0, one_hot(0, 2), true});
        else
          agent.remember({one_hot(0, 2), a, 0.0, one_hot(1, 2), false});
      } else {
        agent.remember({one_hot(1, 2), a, noise(rng), one_hot(1, 2), true});
      }
      agent.train();
    }
    const Eigen::VectorXd q = agent.main().forward(one_hot(0, 2));
    double mean = 0.0;
    for (std::size_t a = 1; a < actions; ++a) mean += q(static_cast<Eigen::Index>(a));
    return mean / static_cast<double>(actions - 1) - truth;
  };
  double single_bias = 0.0;
  double double_bias = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    single_bias += bias(true, seed) / 20.0;
    double_bias += bias(false, seed) / 20.0;
  }
  MESSAGE("single bias " << single_bias << ", double bias " << double_bias);
  CHECK(double_bias <= single_bias);
}

TEST_CASE("training smoke run and determinism") {
  EnvConfig env;
  env.n_qubits = 2;
  env.seed = 3;
  env.max_steps = 20;
  AgentConfig agent = tiny_config(4);
  const auto one = run_training(env, agent, 1);
  REQUIRE(one.episodes.size() == 1);
  CHECK(one.agent.buffer().size() > 0);
  CHECK(one.episodes[0].steps >= 1);

  const auto a = run_training(env, agent, 8);
  const auto b = run_training(env, agent, 8);
  REQUIRE(a.episodes.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a.episodes[i].total_reward == b.episodes[i].total_reward);
    CHECK(a.episodes[i].final.qfi_norm == b.episodes[i].final.qfi_norm);
    CHECK(a.episodes[i].epsilon == b.episodes[i].epsilon);
    CHECK(a.episodes[i].mean_loss == b.episodes[i].mean_loss);
  }
  CHECK(a.agent.main() == b.agent.main());
  for (std::size_t i = 1; i < 8; ++i) {
    CHECK(a.episodes[i].learning_rate <= a.episodes[i - 1].learning_rate);
    CHECK(a.episodes[i].epsilon <= a.episodes[i - 1].epsilon);
  }
}

TEST_CASE("agent files round-trip") {
  EnvConfig env;
  env.n_qubits = 3;
  std::mt19937_64 rng(12);
  const QNetwork net(network_shape(env, tiny_config(0)), rng);
  const auto path = (std::filesystem::temp_directory_path() / "qsense_agent_roundtrip.bin").string();
  save_agent(path, net, R"({"qubits":3})");
  const LoadedAgent back = load_agent(path);
  CHECK(back.net == net);
  CHECK(back.config_json == R"({"qubits":3})");
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    REQUIRE(f != nullptr);
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS(load_agent(path));
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS(load_agent(path));
  std::filesystem::remove(path);
  CHECK_THROWS(load_agent(path));
}

TEST_CASE("greedy rollouts never return worse than the start") {
  EnvConfig env;
  env.n_qubits = 2;
  std::mt19937_64 rng(13);
  const QNetwork net(network_shape(env, tiny_config(0)), rng);
  const Circuit start(2, 15, {Gate::h(0), Gate::h(0), Gate::rx(1, 1.0)});
  const RolloutResult r = agent_rollout(net, env, start);
  CHECK(r.best_return >= 0.0);
  CHECK(r.circuit.size() <= 15);
}

TEST_CASE("run summaries use the best-reward episode") {
  std::vector<EpisodeLog> log(3);
  for (std::size_t i = 0; i < 3; ++i) {
    log[i].episode = i + 1;
    log[i].total_reward = i == 1 ? 9.0 : 1.0;
    log[i].initial.qfi_norm = 0.1 * static_cast<double>(i);
    log[i].final.qfi_norm = 0.5 + 0.1 * static_cast<double>(i);
    log[i].depth_reduction = 0.1 * static_cast<double>(i + 1);
    log[i].gate_reduction = 0.2;
  }
  const RunSummary s = summarize_run(log);
  CHECK(s.best_episode == 2);
  CHECK(s.final_qfi == doctest::Approx(0.6));
  CHECK(s.initial_qfi == doctest::Approx(0.1));
  CHECK(s.max_depth_reduction == doctest::Approx(30.0));
  CHECK(s.avg_depth_reduction == doctest::Approx(20.0));
  CHECK(s.avg_gate_reduction == doctest::Approx(20.0));
  CHECK_THROWS(summarize_run(std::span<const EpisodeLog>{}));

  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(moving_average(v, 2) == std::vector<double>{1, 1.5, 2.5, 3.5});
}
