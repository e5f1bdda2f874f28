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

#include "qsense/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsense {

namespace {

constexpr double kNewRotation = std::numbers::pi / 2.0;

}  // namespace

std::size_t action_space_size(int n_qubits) {
  return 8 * static_cast<std::size_t>(n_qubits);
}

Action decode_action(std::size_t index, int n_qubits) {
  const auto n = static_cast<std::size_t>(n_qubits);
  const std::size_t pairs = n - 1;
  if (index >= action_space_size(n_qubits))
    throw std::out_of_range("action index " + std::to_string(index) + " out of range");
  static constexpr ActionType kOne[] = {ActionType::AddH, ActionType::AddRX,
                                        ActionType::AddRZ};
  static constexpr ActionType kTwo[] = {ActionType::AddCX, ActionType::AddCZ,
                                        ActionType::AddSWAP, ActionType::AddCRX};
  if (index < 3 * n) return {kOne[index / n], static_cast<int>(index % n)};
  index -= 3 * n;
  if (index < 4 * pairs) return {kTwo[index / pairs], static_cast<int>(index % pairs)};
  index -= 4 * pairs;
  if (index < n) return {ActionType::RemoveLastOnQubit, static_cast<int>(index)};
  index -= n;
  static constexpr ActionType kTail[] = {ActionType::SwapAdjacentCommuting,
                                         ActionType::Inject, ActionType::Boost,
                                         ActionType::Stop};
  return {kTail[index], -1};
}

std::size_t encode_action(const Action& a, int n_qubits) {
  const auto n = static_cast<std::size_t>(n_qubits);
  const std::size_t pairs = n - 1;
  const auto q = static_cast<std::size_t>(a.qubit);
  auto check = [&](std::size_t limit) {
    if (a.qubit < 0 || q >= limit) throw std::out_of_range("action qubit out of range");
  };
  switch (a.type) {
    case ActionType::AddH: check(n); return q;
    case ActionType::AddRX: check(n); return n + q;
    case ActionType::AddRZ: check(n); return 2 * n + q;
    case ActionType::AddCX: check(pairs); return 3 * n + q;
    case ActionType::AddCZ: check(pairs); return 3 * n + pairs + q;
    case ActionType::AddSWAP: check(pairs); return 3 * n + 2 * pairs + q;
    case ActionType::AddCRX: check(pairs); return 3 * n + 3 * pairs + q;
    case ActionType::RemoveLastOnQubit: check(n); return 3 * n + 4 * pairs + q;
    case ActionType::SwapAdjacentCommuting: return 4 * n + 4 * pairs;
    case ActionType::Inject: return 4 * n + 4 * pairs + 1;
    case ActionType::Boost: return 4 * n + 4 * pairs + 2;
    case ActionType::Stop: return 4 * n + 4 * pairs + 3;
  }
  throw std::logic_error("unhandled action type");
}

std::string to_string(const Action& a) {
  switch (a.type) {
    case ActionType::AddH: return "add_h(" + std::to_string(a.qubit) + ")";
    case ActionType::AddRX: return "add_rx(" + std::to_string(a.qubit) + ")";
    case ActionType::AddRZ: return "add_rz(" + std::to_string(a.qubit) + ")";
    case ActionType::AddCX: return "add_cx(" + std::to_string(a.qubit) + "," + std::to_string(a.qubit + 1) + ")";
    case ActionType::AddCZ: return "add_cz(" + std::to_string(a.qubit) + "," + std::to_string(a.qubit + 1) + ")";
    case ActionType::AddSWAP: return "add_swap(" + std::to_string(a.qubit) + "," + std::to_string(a.qubit + 1) + ")";
    case ActionType::AddCRX: return "add_crx(" + std::to_string(a.qubit) + "," + std::to_string(a.qubit + 1) + ")";
    case ActionType::RemoveLastOnQubit: return "remove_last(" + std::to_string(a.qubit) + ")";
    case ActionType::SwapAdjacentCommuting: return "swap_commuting";
    case ActionType::Inject: return "inject";
    case ActionType::Boost: return "boost";
    case ActionType::Stop: return "stop";
  }
  return "?";
}

void EnvConfig::validate() const {
  if (n_qubits < 2) throw std::invalid_argument("the environment needs at least 2 qubits");
  if (n_qubits > limits.max_statevector_qubits)
    throw ResourceLimitError("statevector simulation limited to " +
                             std::to_string(limits.max_statevector_qubits) + " qubits");
  if (noise && n_qubits > limits.max_density_qubits)
    throw ResourceLimitError("density-matrix simulation limited to " +
                             std::to_string(limits.max_density_qubits) + " qubits");
  if (resolved_max_gates() < 2) throw std::invalid_argument("max_gates must be at least 2");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  if (!(threshold_min >= 0.0 && threshold_min <= threshold_max && threshold_max <= 1.0))
    throw std::invalid_argument("threshold bounds must satisfy 0 <= min <= max <= 1");
  if (!(initial_threshold >= 0.0 && initial_threshold <= 1.0))
    throw std::invalid_argument("entanglement threshold must lie in [0, 1]");
  if (!(threshold_scale > 0.0)) throw std::invalid_argument("threshold scale must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0))
    throw std::invalid_argument("EMA decay must lie in [0, 1)");
  if (noise) noise_model.validate();
}

double reward(const MetricsRecord& prev, const MetricsRecord& cur,
              std::size_t depth_baseline, std::size_t gates_baseline,
              const RewardWeights& w) {
  const double d_in = static_cast<double>(std::max<std::size_t>(depth_baseline, 1));
  const double g_in = static_cast<double>(std::max<std::size_t>(gates_baseline, 1));
  const double d_depth = (static_cast<double>(prev.depth) - static_cast<double>(cur.depth)) / d_in;
  const double d_gates = (static_cast<double>(prev.gates) - static_cast<double>(cur.gates)) / g_in;
  return w.qfi * (cur.qfi_norm - prev.qfi_norm) + w.depth * d_depth +
         w.entropy * (cur.entropy_norm - prev.entropy_norm) + w.gates * d_gates -
         w.error * (cur.accumulated_error - prev.accumulated_error);
}

AdaptiveThreshold::AdaptiveThreshold(const EnvConfig& cfg)
    : scale_(cfg.threshold_scale),
      lo_(cfg.threshold_min),
      hi_(cfg.threshold_max),
      decay_(cfg.ema_decay),
      ema_(cfg.initial_threshold / cfg.threshold_scale) {}

double AdaptiveThreshold::value() const { return std::clamp(scale_ * ema_, lo_, hi_); }

double AdaptiveThreshold::update(double entropy) {
  ema_ = decay_ * ema_ + (1.0 - decay_) * entropy;
  return value();
}

bool check_convergence(std::span<const HistoryEntry> history, std::size_t patience,
                       std::size_t window, double tolerance) {
  if (history.empty()) return false;
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i].cumulative_reward > history[best].cumulative_reward) best = i;
  const std::size_t last = history.size() - 1;
  if (last - best < patience) return false;
  if (last < window) return false;
  if (std::abs(history[last].entropy - history[last - window].entropy) >= tolerance) return false;
  for (std::size_t i = last - window; i < last; ++i)
    if (history[i].gates != history[last].gates) return false;
  return true;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  threshold_ = AdaptiveThreshold(cfg_);
}

Circuit Environment::random_circuit() {
  const int n = cfg_.n_qubits;
  const std::size_t m = cfg_.resolved_max_gates();
  const std::size_t lo = std::max<std::size_t>(m / 4, 1);
  const std::size_t hi = std::max(lo, m / 2);
  std::uniform_int_distribution<std::size_t> count_dist(lo, hi);
  std::uniform_int_distribution<std::size_t> kind_dist(0, kNumGateKinds - 1);
  std::uniform_int_distribution<int> qubit_dist(0, n - 1);
  std::uniform_int_distribution<int> other_dist(0, n - 2);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);

  const std::size_t count = count_dist(rng_);
  std::vector<Gate> gates;
  gates.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto kind = static_cast<GateKind>(kind_dist(rng_));
    Gate g{kind, {qubit_dist(rng_), -1}, 0.0};
    if (arity(kind) == 2) {
      const int other = other_dist(rng_);
      g.qubits[1] = other >= g.qubits[0] ? other + 1 : other;
    }
    if (has_angle(kind)) g.angle = canonical_angle(angle_dist(rng_));
    gates.push_back(g);
  }
  return Circuit(n, m, std::move(gates));
}

double Environment::entropy_of(const Circuit& c) const {
  if (cfg_.noise) return entropy_noisy(run_noisy(c, cfg_.noise_model, cfg_.limits));
  return entropy(run(c, cfg_.limits));
}

MetricsRecord Environment::evaluate(const Circuit& c) const {
  // QFI always comes from the ideal state.
  const Statevector psi = run(c, cfg_.limits);
  MetricsRecord m;
  m.qfi_norm = qfi(psi);
  m.entropy_norm = cfg_.noise ? entropy_noisy(run_noisy(c, cfg_.noise_model, cfg_.limits))
                              : entropy(psi);
  m.depth = depth(c);
  m.gates = c.size();
  m.layer_entropies = layer_entropies(c, cfg_.limits);
  m.accumulated_error = accumulated_error(c, cfg_.noise_model);
  return m;
}

EncodedState Environment::observe() const {
  const auto& le = metrics_.layer_entropies;
  double avg = 0.0;
  for (double v : le) avg += v;
  if (!le.empty()) avg /= static_cast<double>(le.size());
  return encode_state(circuit_, avg, metrics_.entropy_norm);
}

EncodedState Environment::reset(std::optional<Circuit> initial) {
  if (initial) {
    if (initial->n_qubits() != cfg_.n_qubits)
      throw std::invalid_argument("initial circuit has " +
                                  std::to_string(initial->n_qubits()) +
                                  " qubits, environment expects " +
                                  std::to_string(cfg_.n_qubits));
    circuit_ = initial->with_max_gates(cfg_.resolved_max_gates());
  } else {
    circuit_ = random_circuit();
  }
  metrics_ = evaluate(circuit_);
  initial_metrics_ = metrics_;
  threshold_ = AdaptiveThreshold(cfg_);
  history_.clear();
  steps_ = 0;
  return_ = 0.0;
  done_ = false;
  return observe();
}

StepOutcome Environment::step(std::size_t action_index) {
  return step(decode_action(action_index, cfg_.n_qubits));
}

StepOutcome Environment::step(const Action& a) {
  if (done_) throw EpisodeDone("step() called on a finished episode; call reset()");
  StepOutcome out;
  const MetricsRecord prev = metrics_;
  const std::size_t m = cfg_.resolved_max_gates();
  const int n = cfg_.n_qubits;
  auto entropy_fn = [this](const Circuit& c) { return entropy_of(c); };

  Circuit next = circuit_;
  bool stop = false;
  bool violation = false;
  auto add = [&](const Gate& g) {
    if (next.size() >= m)
      violation = true;
    else
      next.append(g);
  };

  switch (a.type) {
    case ActionType::AddH: add(Gate::h(a.qubit)); break;
    case ActionType::AddRX: add(Gate::rx(a.qubit, kNewRotation)); break;
    case ActionType::AddRZ: add(Gate::rz(a.qubit, kNewRotation)); break;
    case ActionType::AddCX: add(Gate::cx(a.qubit, a.qubit + 1)); break;
    case ActionType::AddCZ: add(Gate::cz(a.qubit, a.qubit + 1)); break;
    case ActionType::AddSWAP: add(Gate::swap(a.qubit, a.qubit + 1)); break;
    case ActionType::AddCRX: add(Gate::crx(a.qubit, a.qubit + 1, kNewRotation)); break;
    case ActionType::RemoveLastOnQubit: {
      if (a.qubit < 0 || a.qubit >= n) throw std::out_of_range("action qubit out of range");
      for (std::size_t i = next.size(); i-- > 0;) {
        if (next[i].acts_on(a.qubit)) {
          next.erase(i);
          break;
        }
      }
      break;
    }
    case ActionType::SwapAdjacentCommuting: {
      std::vector<Gate> gates = next.gates();
      for (std::size_t i = 0; i + 1 < gates.size(); ++i) {
        if (gates[i].overlaps(gates[i + 1]) && gates[i] != gates[i + 1] &&
            commutes(gates[i], gates[i + 1])) {
          std::swap(gates[i], gates[i + 1]);
          next.assign(std::move(gates));
          break;
        }
      }
      break;
    }
    case ActionType::Inject: {
      if (next.size() + 2 > m) {
        violation = true;
        break;
      }
      const InjectionSite site = weakest_injection_site(next);
      next = inject_entanglement(next, site.layer, site.a, site.b);
      out.info.injected = true;
      break;
    }
    case ActionType::Boost: {
      if (next.size() + 2 > m && entropy_of(next) < threshold_.value()) {
        violation = true;
        break;
      }
      auto boosted = boost_entanglement(next, threshold_.value(), entropy_fn);
      out.info.boosted = boosted.boosted;
      next = std::move(boosted.circuit);
      break;
    }
    case ActionType::Stop: stop = true; break;
  }

  double r = 0.0;
  if (stop || violation) {
    // Circuit unchanged: the metric deltas are zero.
    if (violation) r = cfg_.capacity_penalty;
    out.info.capacity_violation = violation;
  } else {
    const auto simplified = simplify(next, {100, false});
    out.info.simplified_gates_removed = next.size() - simplified.circuit.size();
    next = simplified.circuit;
    if (next.size() + 2 <= m && entropy_of(next) < threshold_.value()) {
      auto boosted = boost_entanglement(next, threshold_.value(), entropy_fn);
      out.info.boosted = out.info.boosted || boosted.boosted;
      next = std::move(boosted.circuit);
    }
    circuit_ = std::move(next);
    metrics_ = evaluate(circuit_);
    r = reward(prev, metrics_, initial_metrics_.depth, initial_metrics_.gates, cfg_.weights);
  }

  threshold_.update(metrics_.entropy_norm);
  ++steps_;
  return_ += r;
  history_.push_back({return_, metrics_.entropy_norm, circuit_.gates()});
  out.info.converged =
      check_convergence(history_, cfg_.patience, cfg_.stability_window, cfg_.entropy_tolerance);
  done_ = stop || violation || steps_ >= cfg_.max_steps || out.info.converged;

  out.reward = r;
  out.done = done_;
  out.info.metrics = metrics_;
  out.next_state = observe();
  return out;
}

}  // namespace qsense
