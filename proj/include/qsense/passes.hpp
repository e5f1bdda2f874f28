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
 * @file passes.hpp
 * @brief Deterministic circuit rewriting.
 *
 * All peephole rules look at a pair (first, second) where `second` is the
 * next gate after `first` sharing a qubit with it, and no gate in between
 * touches `second`'s qubits. A matching rule replaces the pair in place of
 * `first`. Scans restart from the left after every rewrite, so results do
 * not depend on anything but the input gate list.
 *
 * Simplification never changes the state produced from |0...0> beyond a
 * global phase. Injection and boosting deliberately do.
 */
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsense/circuit.hpp"
#include "qsense/metrics.hpp"

namespace qsense {

struct RewriteRule {
  std::string name;
  std::function<std::optional<std::vector<Gate>>(const Gate& first,
                                                 const Gate& second)>
      rewrite;
};

const std::vector<RewriteRule>& cancellation_rules();
const std::vector<RewriteRule>& merge_rules();
const std::vector<RewriteRule>& commutation_rules();

/// True when the two gates commute under the fixed commutation ruleset
/// (diagonal pairs, Z rotations on controls, X rotations on CX targets,
/// disjoint supports).
bool commutes(const Gate& a, const Gate& b);

/// Applies `rules` leftmost-first until none fires.
Circuit apply_rules(const Circuit& c, std::span<const RewriteRule> rules);

Circuit cancel_inverse_pairs(const Circuit& c);
/// Fuses same-axis rotations and drops identity rotations.
Circuit merge_rotations(const Circuit& c);
/// Moves single-qubit gates left past two-qubit gates they commute with.
Circuit commute_normalize(const Circuit& c);

struct PassReport {
  std::string pass_name;
  std::size_t gates_before = 0;
  std::size_t gates_after = 0;
  std::size_t depth_before = 0;
  std::size_t depth_after = 0;
  /// |<before|after>|^2 of the produced states; NaN when not verified.
  double fidelity_check = 0.0;
  std::size_t iterations = 0;
  bool iteration_cap_reached = false;
};

struct SimplifyOptions {
  std::size_t max_iterations = 100;
  bool verify_fidelity = true;
};

struct SimplifyResult {
  Circuit circuit;
  PassReport report;
};

/// commute -> merge -> cancel to a fixed point. A round is kept only if it
/// does not grow the gate count or the depth; otherwise the round is redone
/// without commutation.
SimplifyResult simplify(const Circuit& c, const SimplifyOptions& opts = {});

/// Inserts H(a), CX(a, b) before the first gate of ASAP layer
/// `layer_index`; layer_index == depth(c) appends.
Circuit inject_entanglement(const Circuit& c, std::size_t layer_index, int a,
                            int b);

struct InjectionSite {
  std::size_t layer = 0;
  int a = 0;
  int b = 1;
};

/// Weakest ASAP layer (lowest entropy, lowest index on ties; 0 when empty)
/// and the least entangled qubit paired with its right-hand neighbour, or
/// the left one for the last qubit.
InjectionSite weakest_injection_site(const Circuit& c);

using EntropyFn = std::function<double(const Circuit&)>;

/// Ideal-statevector entropy of the circuit's output.
double circuit_entropy(const Circuit& c);

struct BoostResult {
  Circuit circuit;
  bool boosted = false;
  std::size_t layer = 0;
  int qubit_a = -1;
  int qubit_b = -1;
};

/// One injection when entropy(c) < threshold. The target is the weakest
/// layer and the least entangled qubit with its right-hand neighbour (left
/// for the last qubit); if that placement does not raise the entropy, other
/// placements are tried in order of increasing layer and qubit entropy and
/// the first that helps is taken.
BoostResult boost_entanglement(const Circuit& c, double threshold,
                               const EntropyFn& entropy_fn = circuit_entropy);

struct Pipeline {
  std::string name;
  std::function<Circuit(const Circuit&)> run;
};

/// Multi-objective score weights, in the order qfi, depth, entropy, gates.
struct ScoreWeights {
  double qfi = 50.0;
  double depth = 30.0;
  double entropy = 10.0;
  double gates = 10.0;
};

/// w_q dQFI + w_d (D_in - D)/D_in + w_s dS + w_g (G_in - G)/G_in.
double improvement_score(const MetricsRecord& before, const MetricsRecord& after,
                         const ScoreWeights& w);

struct PipelineOutcome {
  std::string name;
  Circuit circuit;
  MetricsRecord metrics;
  double score = 0.0;
};

struct PortfolioResult {
  Circuit circuit;
  std::string chosen;
  MetricsRecord input_metrics;
  std::vector<PipelineOutcome> outcomes;
};

/// Runs each pipeline on a copy of c and keeps the best score; ties go to
/// fewer gates, then lower depth, then pipeline order.
PortfolioResult portfolio_optimize(const Circuit& c,
                                   std::span<const Pipeline> pipelines,
                                   const ScoreWeights& weights = {});

Pipeline identity_pipeline();
Pipeline simplify_pipeline();

}  // namespace qsense
