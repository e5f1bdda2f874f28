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
 * @file simulator.hpp
 * @brief Exact statevector and density-matrix simulation.
 *
 * Basis convention: qubit 0 is the least significant bit of a basis index,
 * so CX(0,1) maps |01> (index 1) to |11> (index 3).
 *
 * Two-qubit gate matrices are written in the local basis
 * 2 * bit(qubits[0]) + bit(qubits[1]), i.e. control first, which gives the
 * textbook CX = [[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]].
 *
 * Density matrices are stored row-major as a 2n-qubit vector: column bits
 * occupy the low n bits, row bits the high n bits. A single-qubit operator K
 * acts as rho -> K rho K^dagger by applying K to bit (q + n) and conj(K) to
 * bit q, which lets both backends share the same kernels.
 */
#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsense/circuit.hpp"

namespace qsense {

using cplx = std::complex<double>;

/// Raised when a simulation would exceed the configured qubit ceiling.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimLimits {
  int max_statevector_qubits = 20;
  int max_density_qubits = 10;
};

class Statevector {
 public:
  /// |0...0> on n qubits.
  explicit Statevector(int n_qubits);
  Statevector(int n_qubits, std::vector<cplx> amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const cplx> amplitudes() const { return amps_; }
  std::span<cplx> amplitudes() { return amps_; }
  const cplx& operator[](std::size_t i) const { return amps_[i]; }
  cplx& operator[](std::size_t i) { return amps_[i]; }

  double norm() const;
  std::vector<double> probabilities() const;

 private:
  int n_qubits_;
  std::vector<cplx> amps_;
};

class DensityMatrix {
 public:
  /// |0...0><0...0| on n qubits.
  explicit DensityMatrix(int n_qubits);
  static DensityMatrix from_statevector(const Statevector& psi);
  static DensityMatrix from_matrix(const Eigen::MatrixXcd& m);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return dim_; }
  const cplx& operator()(std::size_t r, std::size_t c) const {
    return data_[r * dim_ + c];
  }
  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  cplx trace() const;
  Eigen::MatrixXcd to_eigen() const;
  /// Ascending eigenvalues (Hermitian solver).
  std::vector<double> eigenvalues() const;

 private:
  int n_qubits_;
  std::size_t dim_;
  std::vector<cplx> data_;
};

/// Gate error and relaxation parameters. Times in microseconds.
struct NoiseModel {
  double p1 = 0.001;
  double p2 = 0.01;
  double p_meas = 0.02;
  double t1 = 50.0;
  double t2 = 70.0;
  double t_1q = 0.05;
  double t_2q = 0.3;

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
  /// All channels switched off (infinite T1/T2, zero probabilities).
  static NoiseModel noiseless();
};

using Matrix2c = Eigen::Matrix2cd;

/// 2x2 for single-qubit kinds, 4x4 for two-qubit kinds.
Eigen::MatrixXcd gate_matrix(const Gate& g);

Statevector apply_gate(Statevector psi, const Gate& g);
void apply_gate_inplace(Statevector& psi, const Gate& g);

Statevector run(const Circuit& c, const SimLimits& limits = {});
/// Runs gates [begin, end) on an existing state.
void run_range(Statevector& psi, const Circuit& c, std::size_t begin,
               std::size_t end);

// Kraus sets. Each satisfies sum K^dagger K = I.
std::vector<Matrix2c> depolarizing_kraus(double p);
std::vector<Matrix2c> amplitude_damping_kraus(double gamma);
std::vector<Matrix2c> phase_damping_kraus(double lambda);

struct RelaxationRates {
  double gamma;   // amplitude damping probability
  double lambda;  // residual pure dephasing probability
};
RelaxationRates relaxation_rates(const NoiseModel& nm, double duration);

/// rho -> U rho U^dagger for one gate.
void apply_unitary(DensityMatrix& rho, const Gate& g);
/// rho -> sum_k K_k rho K_k^dagger on qubit q.
void apply_channel(DensityMatrix& rho, int q, std::span<const Matrix2c> kraus);

/// Unitary followed, on every touched qubit, by depolarizing then thermal
/// relaxation.
DensityMatrix run_noisy(const Circuit& c, const NoiseModel& nm,
                        const SimLimits& limits = {});

/// Partial trace keeping `keep`; kept qubit keep[i] (sorted) becomes bit i.
DensityMatrix reduced_density(const Statevector& psi, std::vector<int> keep);
DensityMatrix reduced_density(const DensityMatrix& rho, std::vector<int> keep);

/// |<a|b>|^2.
double fidelity_up_to_phase(const Statevector& a, const Statevector& b);

/// Computational-basis sampling with independent readout bit flips of
/// probability p_meas. Keys are bitstrings with qubit 0 rightmost.
std::map<std::string, std::size_t> sample_counts(
    std::span<const double> probabilities, int n_qubits, std::size_t shots,
    double p_meas, std::mt19937_64& rng);
std::vector<double> diagonal_probabilities(const DensityMatrix& rho);

}  // namespace qsense
