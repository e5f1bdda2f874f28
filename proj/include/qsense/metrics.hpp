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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qsense/circuit.hpp"
#include "qsense/simulator.hpp"

namespace qsense {

/// Snapshot of a circuit's sensing and cost figures. Normalized fields are
/// clamped into [0, 1].
struct MetricsRecord {
  double qfi_norm = 0.0;
  double entropy_norm = 0.0;
  std::size_t depth = 0;
  std::size_t gates = 0;
  std::vector<double> layer_entropies;
  double accumulated_error = 0.0;
};

/// Normalized quantum Fisher information of the collective phase
/// exp(-i theta sum_j Z_j / 2): 4 Var(G) / n^2. Throws if psi is not
/// normalized.
double qfi(const Statevector& psi);

/// Same quantity from the literal derivative formula
/// 4 (<d psi|d psi> - |<d psi|psi>|^2) / n^2 with a central difference of
/// step h at theta.
double qfi_finite_difference(const Statevector& psi, double theta, double h);

/// Von Neumann entropy in bits from a spectrum; eigenvalues below 1e-12
/// count as zero.
double entropy_bits(std::span<const double> eigenvalues);

/// Single-qubit marginal entropies S(rho_j), j = 0..n-1.
std::vector<double> qubit_entropies(const Statevector& psi);
std::vector<double> qubit_entropies(const DensityMatrix& rho);

/// Mean single-qubit entropy. Requires n >= 2.
double entropy(const Statevector& psi);
/// The mixed-state variant; classical mixing also raises it.
double entropy_noisy(const DensityMatrix& rho);

/// Entropy after each ASAP layer; length depth(c).
std::vector<double> layer_entropies(const Circuit& c,
                                    const SimLimits& limits = {});

struct Ratio {
  double value = 0.0;
  bool degenerate = false;  // zero baseline
};
/// (d_in - d_out) / d_in.
Ratio depth_ratio(std::size_t d_in, std::size_t d_out);
/// (g_in - g_out) / g_in.
Ratio gate_ratio(std::size_t g_in, std::size_t g_out);

/// 1 - prod(1 - p_g) over the gates.
double accumulated_error(const Circuit& c, const NoiseModel& nm);

/// Full record from the ideal statevector.
MetricsRecord compute_metrics(const Circuit& c, const NoiseModel& nm,
                              const SimLimits& limits = {});

}  // namespace qsense
