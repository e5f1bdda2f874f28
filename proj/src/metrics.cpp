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

#include "qsense/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace qsense {

namespace {

constexpr double kNormTol = 1e-8;
constexpr double kClampTol = 1e-9;

double clamp_unit(double x, const char* what) {
  if (x < -kClampTol || x > 1.0 + kClampTol || !std::isfinite(x))
    throw std::logic_error(std::string(what) + " left [0, 1]: " + std::to_string(x));
  return std::clamp(x, 0.0, 1.0);
}

// Eigenvalue of G = sum_j Z_j / 2 on basis state `i`.
double collective_z(std::size_t i, int n) {
  return 0.5 * (n - 2 * std::popcount(i));
}

void require_normalized(const Statevector& psi) {
  if (std::abs(psi.norm() - 1.0) > kNormTol)
    throw std::invalid_argument("state is not normalized");
}

}  // namespace

double qfi(const Statevector& psi) {
  require_normalized(psi);
  const int n = psi.n_qubits();
  double mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < psi.dim(); ++i) {
    const double p = std::norm(psi[i]);
    const double g = collective_z(i, n);
    mean += p * g;
    second += p * g * g;
  }
  const double var = second - mean * mean;
  return clamp_unit(4.0 * var / (static_cast<double>(n) * n), "qfi");
}

double qfi_finite_difference(const Statevector& psi, double theta, double h) {
  require_normalized(psi);
  const int n = psi.n_qubits();
  // psi(t) = exp(-i t G) psi is diagonal in the computational basis.
  auto evolved = [&](double t) {
    std::vector<cplx> out(psi.dim());
    for (std::size_t i = 0; i < psi.dim(); ++i)
      out[i] = std::polar(1.0, -t * collective_z(i, n)) * psi[i];
    return out;
  };
  const auto plus = evolved(theta + h);
  const auto minus = evolved(theta - h);
  const auto center = evolved(theta);
  double dd = 0.0;
  cplx dpsi_psi{0.0, 0.0};
  for (std::size_t i = 0; i < psi.dim(); ++i) {
    const cplx d = (plus[i] - minus[i]) / (2.0 * h);
    dd += std::norm(d);
    dpsi_psi += std::conj(d) * center[i];
  }
  const double q = 4.0 * (dd - std::norm(dpsi_psi));
  return q / (static_cast<double>(n) * n);
}

double entropy_bits(std::span<const double> eigenvalues) {
  double s = 0.0;
  for (double l : eigenvalues)
    if (l > 1e-12) s -= l * std::log2(l);
  return s;
}

std::vector<double> qubit_entropies(const Statevector& psi) {
  const int n = psi.n_qubits();
  std::vector<double> out(static_cast<std::size_t>(n));
  // Single-qubit marginals straight from the amplitudes.
  for (int q = 0; q < n; ++q) {
    const std::size_t bit = std::size_t{1} << q;
    double p0 = 0.0, p1 = 0.0;
    cplx off{0.0, 0.0};
    for (std::size_t i = 0; i < psi.dim(); ++i) {
      if (i & bit) continue;
      p0 += std::norm(psi[i]);
      p1 += std::norm(psi[i | bit]);
      off += psi[i] * std::conj(psi[i | bit]);
    }
    const double mean = 0.5 * (p0 + p1);
    const double rad = std::sqrt(0.25 * (p0 - p1) * (p0 - p1) + std::norm(off));
    const double ev[2] = {mean - rad, mean + rad};
    out[static_cast<std::size_t>(q)] = clamp_unit(entropy_bits(ev), "qubit entropy");
  }
  return out;
}

std::vector<double> qubit_entropies(const DensityMatrix& rho) {
  const int n = rho.n_qubits();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    const auto ev = reduced_density(rho, {q}).eigenvalues();
    out[static_cast<std::size_t>(q)] = clamp_unit(entropy_bits(ev), "qubit entropy");
  }
  return out;
}

double entropy(const Statevector& psi) {
  if (psi.n_qubits() < 2)
    throw std::invalid_argument("entanglement entropy needs at least 2 qubits");
  require_normalized(psi);
  const auto s = qubit_entropies(psi);
  double total = 0.0;
  for (double v : s) total += v;
  return clamp_unit(total / static_cast<double>(s.size()), "entropy");
}

double entropy_noisy(const DensityMatrix& rho) {
  if (rho.n_qubits() < 2)
    throw std::invalid_argument("entanglement entropy needs at least 2 qubits");
  const auto s = qubit_entropies(rho);
  double total = 0.0;
  for (double v : s) total += v;
  return clamp_unit(total / static_cast<double>(s.size()), "entropy");
}

std::vector<double> layer_entropies(const Circuit& c, const SimLimits& limits) {
  if (c.n_qubits() > limits.max_statevector_qubits)
    throw ResourceLimitError("statevector simulation limited to " +
                             std::to_string(limits.max_statevector_qubits) +
                             " qubits");
  const auto lay = layers(c);
  std::vector<double> out;
  out.reserve(lay.size());
  Statevector psi(c.n_qubits());
  for (const auto& layer : lay) {
    for (std::size_t idx : layer) apply_gate_inplace(psi, c[idx]);
    out.push_back(entropy(psi));
  }
  return out;
}

Ratio depth_ratio(std::size_t d_in, std::size_t d_out) {
  if (d_in == 0) return {0.0, true};
  return {(static_cast<double>(d_in) - static_cast<double>(d_out)) /
              static_cast<double>(d_in),
          false};
}

Ratio gate_ratio(std::size_t g_in, std::size_t g_out) {
  if (g_in == 0) return {0.0, true};
  return {(static_cast<double>(g_in) - static_cast<double>(g_out)) /
              static_cast<double>(g_in),
          false};
}

double accumulated_error(const Circuit& c, const NoiseModel& nm) {
  double survive = 1.0;
  for (const auto& g : c.gates()) survive *= 1.0 - (g.num_qubits() == 2 ? nm.p2 : nm.p1);
  return std::clamp(1.0 - survive, 0.0, 1.0);
}

MetricsRecord compute_metrics(const Circuit& c, const NoiseModel& nm,
                              const SimLimits& limits) {
  const Statevector psi = run(c, limits);
  MetricsRecord m;
  m.qfi_norm = qfi(psi);
  m.entropy_norm = entropy(psi);
  m.depth = depth(c);
  m.gates = c.size();
  m.layer_entropies = layer_entropies(c, limits);
  m.accumulated_error = accumulated_error(c, nm);
  return m;
}

}  // namespace qsense
