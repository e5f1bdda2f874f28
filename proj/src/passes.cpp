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

#include "qsense/passes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "qsense/simulator.hpp"

namespace qsense {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleTol = 1e-12;
// Safety net for apply_rules; every ruleset here strictly shrinks the circuit
// or moves a single-qubit gate left.
constexpr std::size_t kMaxRewrites = 1'000'000;

bool is_identity_angle(double a) { return a < kAngleTol || kTwoPi - a < kAngleTol; }

bool same_support(const Gate& a, const Gate& b) {
  return a.num_qubits() == b.num_qubits() && a.qubits == b.qubits;
}

bool symmetric_support(const Gate& a, const Gate& b) {
  return a.num_qubits() == 2 && b.num_qubits() == 2 &&
         a.qubits[0] == b.qubits[1] && a.qubits[1] == b.qubits[0];
}

bool is_diagonal(GateKind k) { return k == GateKind::RZ || k == GateKind::CZ; }

// Single-qubit `one` commutes with two-qubit `two` under the ruleset.
bool commutes_through(const Gate& one, const Gate& two) {
  const int q = one.qubits[0];
  if (!two.acts_on(q)) return true;
  if (is_diagonal(one.kind) && is_diagonal(two.kind)) return true;
  if (one.kind == GateKind::RZ &&
      (two.kind == GateKind::CX || two.kind == GateKind::CRX) && two.qubits[0] == q)
    return true;
  if (one.kind == GateKind::RX && two.kind == GateKind::CX && two.qubits[1] == q)
    return true;
  return false;
}

std::vector<RewriteRule> make_cancellation_rules() {
  auto self_inverse = [](GateKind kind, bool symmetric) {
    return [kind, symmetric](const Gate& a,
                             const Gate& b) -> std::optional<std::vector<Gate>> {
      if (a.kind != kind || b.kind != kind) return std::nullopt;
      if (same_support(a, b) || (symmetric && symmetric_support(a, b)))
        return std::vector<Gate>{};
      return std::nullopt;
    };
  };
  return {
      {"cancel-h", self_inverse(GateKind::H, false)},
      {"cancel-cx", self_inverse(GateKind::CX, false)},
      {"cancel-cz", self_inverse(GateKind::CZ, true)},
      {"cancel-swap", self_inverse(GateKind::SWAP, true)},
  };
}

std::vector<RewriteRule> make_merge_rules() {
  auto single_axis = [](GateKind kind) {
    return [kind](const Gate& a, const Gate& b) -> std::optional<std::vector<Gate>> {
      if (a.kind != kind || b.kind != kind || !same_support(a, b)) return std::nullopt;
      // Rotations are 4pi-periodic; a 2pi wrap is a global sign.
      const double sum = canonical_angle(a.angle + b.angle);
      if (is_identity_angle(sum)) return std::vector<Gate>{};
      Gate g = a;
      g.angle = sum;
      return std::vector<Gate>{g};
    };
  };
  auto controlled_rx = [](const Gate& a, const Gate& b) -> std::optional<std::vector<Gate>> {
    if (a.kind != GateKind::CRX || b.kind != GateKind::CRX || !same_support(a, b))
      return std::nullopt;
    // A controlled 2pi rotation is Z on the control, not a global phase,
    // so wrapped sums only merge when that leaves fewer gates.
    const double sum = a.angle + b.angle;
    if (sum < kAngleTol) return std::vector<Gate>{};
    if (std::abs(sum - kTwoPi) < kAngleTol)
      return std::vector<Gate>{Gate::rz(a.qubits[0], std::numbers::pi)};
    if (sum > kTwoPi) return std::nullopt;
    Gate g = a;
    g.angle = sum;
    return std::vector<Gate>{g};
  };
  return {
      {"merge-rx", single_axis(GateKind::RX)},
      {"merge-rz", single_axis(GateKind::RZ)},
      {"merge-crx", controlled_rx},
  };
}

std::vector<RewriteRule> make_commutation_rules() {
  return {
      {"commute-1q-left",
       [](const Gate& a, const Gate& b) -> std::optional<std::vector<Gate>> {
         if (a.num_qubits() != 2 || b.num_qubits() != 1) return std::nullopt;
         if (!commutes_through(b, a)) return std::nullopt;
         return std::vector<Gate>{b, a};
       }},
  };
}

// Index of the partner of gate i, or npos.
std::size_t partner_of(const std::vector<Gate>& gates, std::size_t i) {
  const Gate& first = gates[i];
  for (std::size_t j = i + 1; j < gates.size(); ++j) {
    if (!gates[j].overlaps(first)) continue;
    for (std::size_t k = i + 1; k < j; ++k)
      if (gates[k].overlaps(gates[j])) return std::string::npos;
    return j;
  }
  return std::string::npos;
}

Circuit drop_identity_rotations(const Circuit& c) {
  std::vector<Gate> out;
  out.reserve(c.size());
  for (const auto& g : c.gates())
    if (!(has_angle(g.kind) && g.angle < kAngleTol)) out.push_back(g);
  if (out.size() == c.size()) return c;
  return Circuit(c.n_qubits(), c.max_gates(), std::move(out));
}

}  // namespace

const std::vector<RewriteRule>& cancellation_rules() {
  static const auto rules = make_cancellation_rules();
  return rules;
}

const std::vector<RewriteRule>& merge_rules() {
  static const auto rules = make_merge_rules();
  return rules;
}

const std::vector<RewriteRule>& commutation_rules() {
  static const auto rules = make_commutation_rules();
  return rules;
}

bool commutes(const Gate& a, const Gate& b) {
  if (!a.overlaps(b) || a == b) return true;
  if (is_diagonal(a.kind) && is_diagonal(b.kind)) return true;
  if (a.num_qubits() == 1 && b.num_qubits() == 2) return commutes_through(a, b);
  if (a.num_qubits() == 2 && b.num_qubits() == 1) return commutes_through(b, a);
  return false;
}

Circuit apply_rules(const Circuit& c, std::span<const RewriteRule> rules) {
  std::vector<Gate> gates = c.gates();
  for (std::size_t rewrites = 0; rewrites < kMaxRewrites; ++rewrites) {
    bool fired = false;
    for (std::size_t i = 0; i < gates.size() && !fired; ++i) {
      const std::size_t j = partner_of(gates, i);
      if (j == std::string::npos) continue;
      for (const auto& rule : rules) {
        auto replacement = rule.rewrite(gates[i], gates[j]);
        if (!replacement) continue;
        gates.erase(gates.begin() + static_cast<std::ptrdiff_t>(j));
        gates.erase(gates.begin() + static_cast<std::ptrdiff_t>(i));
        gates.insert(gates.begin() + static_cast<std::ptrdiff_t>(i),
                     replacement->begin(), replacement->end());
        fired = true;
        break;
      }
    }
    if (!fired) break;
  }
  return Circuit(c.n_qubits(), c.max_gates(), std::move(gates));
}

Circuit cancel_inverse_pairs(const Circuit& c) {
  return apply_rules(c, cancellation_rules());
}

Circuit merge_rotations(const Circuit& c) {
  return drop_identity_rotations(apply_rules(drop_identity_rotations(c), merge_rules()));
}

Circuit commute_normalize(const Circuit& c) {
  return apply_rules(c, commutation_rules());
}

SimplifyResult simplify(const Circuit& c, const SimplifyOptions& opts) {
  SimplifyResult result{c, {}};
  PassReport& rep = result.report;
  rep.pass_name = "simplify";
  rep.gates_before = c.size();
  rep.depth_before = depth(c);

  Circuit cur = c;
  std::size_t cur_depth = rep.depth_before;
  for (;;) {
    if (rep.iterations == opts.max_iterations) {
      rep.iteration_cap_reached = true;
      break;
    }
    ++rep.iterations;
    Circuit cand = cancel_inverse_pairs(merge_rotations(commute_normalize(cur)));
    std::size_t cand_depth = depth(cand);
    if (cand != cur && cand.size() <= cur.size() && cand_depth <= cur_depth) {
      cur = std::move(cand);
      cur_depth = cand_depth;
      continue;
    }
    cand = cancel_inverse_pairs(merge_rotations(cur));
    if (cand != cur) {
      cur = std::move(cand);
      cur_depth = depth(cur);
      continue;
    }
    break;
  }

  rep.gates_after = cur.size();
  rep.depth_after = cur_depth;
  rep.fidelity_check = std::numeric_limits<double>::quiet_NaN();
  if (opts.verify_fidelity && c.n_qubits() <= SimLimits{}.max_statevector_qubits)
    rep.fidelity_check = fidelity_up_to_phase(run(c), run(cur));
  result.circuit = std::move(cur);
  return result;
}

Circuit inject_entanglement(const Circuit& c, std::size_t layer_index, int a, int b) {
  if (a == b) throw CircuitError("injection needs two distinct qubits");
  const auto lay = layers(c);
  if (layer_index > lay.size())
    throw CircuitError("injection layer " + std::to_string(layer_index) +
                       " beyond depth " + std::to_string(lay.size()));
  if (c.size() + 2 > c.max_gates())
    throw CircuitError("injection would exceed the gate capacity");
  const std::size_t pos = layer_index < lay.size() ? lay[layer_index].front() : c.size();
  Circuit out = c;
  out.insert(pos, Gate::h(a));
  out.insert(pos + 1, Gate::cx(a, b));
  return out;
}

double circuit_entropy(const Circuit& c) { return entropy(run(c)); }

InjectionSite weakest_injection_site(const Circuit& c) {
  const auto per_layer = layer_entropies(c);
  const auto per_qubit = qubit_entropies(run(c));
  InjectionSite site;
  if (!per_layer.empty())
    site.layer = static_cast<std::size_t>(
        std::min_element(per_layer.begin(), per_layer.end()) - per_layer.begin());
  site.a = static_cast<int>(std::min_element(per_qubit.begin(), per_qubit.end()) -
                            per_qubit.begin());
  site.b = site.a + 1 < c.n_qubits() ? site.a + 1 : site.a - 1;
  return site;
}

BoostResult boost_entanglement(const Circuit& c, double threshold,
                               const EntropyFn& entropy_fn) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("boost threshold must lie in [0, 1]");
  BoostResult res{c, false, 0, -1, -1};
  const double before = entropy_fn(c);
  if (!(before < threshold)) return res;

  const int n = c.n_qubits();
  const auto per_layer = layer_entropies(c);
  const auto per_qubit = qubit_entropies(run(c));

  // Candidate layers ordered by entropy then index; the append slot last.
  std::vector<std::size_t> layer_order(per_layer.size());
  std::iota(layer_order.begin(), layer_order.end(), 0);
  std::stable_sort(layer_order.begin(), layer_order.end(),
                   [&](std::size_t x, std::size_t y) { return per_layer[x] < per_layer[y]; });
  layer_order.push_back(per_layer.size());

  std::vector<int> qubit_order(static_cast<std::size_t>(n));
  std::iota(qubit_order.begin(), qubit_order.end(), 0);
  std::stable_sort(qubit_order.begin(), qubit_order.end(), [&](int x, int y) {
    return per_qubit[static_cast<std::size_t>(x)] < per_qubit[static_cast<std::size_t>(y)];
  });

  const InjectionSite site = weakest_injection_site(c);
  const std::size_t weakest = site.layer;
  const int j = site.a;
  const int nb = site.b;
  Circuit primary = inject_entanglement(c, weakest, j, nb);
  auto take = [&](Circuit circ, std::size_t layer, int a, int b) {
    res.circuit = std::move(circ);
    res.boosted = true;
    res.layer = layer;
    res.qubit_a = a;
    res.qubit_b = b;
    return res;
  };
  if (entropy_fn(primary) > before) return take(std::move(primary), weakest, j, nb);

  for (std::size_t layer : layer_order) {
    for (int q : qubit_order) {
      for (int other : {q + 1, q - 1}) {
        if (other < 0 || other >= n) continue;
        if (layer == weakest && q == j && other == nb) continue;
        Circuit cand = inject_entanglement(c, layer, q, other);
        if (entropy_fn(cand) > before) return take(std::move(cand), layer, q, other);
      }
    }
  }
  return take(std::move(primary), weakest, j, nb);
}

double improvement_score(const MetricsRecord& before, const MetricsRecord& after,
                         const ScoreWeights& w) {
  const double dq = after.qfi_norm - before.qfi_norm;
  const double ds = after.entropy_norm - before.entropy_norm;
  const double dd = depth_ratio(before.depth, after.depth).value;
  const double dg = gate_ratio(before.gates, after.gates).value;
  return w.qfi * dq + w.depth * dd + w.entropy * ds + w.gates * dg;
}

PortfolioResult portfolio_optimize(const Circuit& c, std::span<const Pipeline> pipelines,
                                   const ScoreWeights& weights) {
  if (pipelines.empty()) throw std::invalid_argument("portfolio needs at least one pipeline");
  const NoiseModel nm;
  PortfolioResult res;
  res.input_metrics = compute_metrics(c, nm);
  std::size_t best = 0;
  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    PipelineOutcome o;
    o.name = pipelines[i].name;
    o.circuit = pipelines[i].run(c);
    o.metrics = compute_metrics(o.circuit, nm);
    o.score = improvement_score(res.input_metrics, o.metrics, weights);
    res.outcomes.push_back(std::move(o));
    if (i == 0) continue;
    const auto& b = res.outcomes[best];
    const auto& cur = res.outcomes[i];
    bool better = cur.score > b.score + 1e-12;
    if (!better && std::abs(cur.score - b.score) <= 1e-12) {
      better = cur.metrics.gates < b.metrics.gates ||
               (cur.metrics.gates == b.metrics.gates && cur.metrics.depth < b.metrics.depth);
    }
    if (better) best = i;
  }
  res.circuit = res.outcomes[best].circuit;
  res.chosen = res.outcomes[best].name;
  return res;
}

Pipeline identity_pipeline() {
  return {"identity", [](const Circuit& c) { return c; }};
}

Pipeline simplify_pipeline() {
  return {"simplify", [](const Circuit& c) { return simplify(c, {100, false}).circuit; }};
}

}  // namespace qsense
