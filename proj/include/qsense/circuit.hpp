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

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qsense {

/// Thrown for malformed circuits, gates and circuit documents.
class CircuitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The gate alphabet. The declaration order is the one-hot column order of
/// the agent's state encoding.
enum class GateKind { H, RX, RZ, CX, CZ, SWAP, CRX };

inline constexpr std::size_t kNumGateKinds = 7;

constexpr std::size_t arity(GateKind k) {
  switch (k) {
    case GateKind::H:
    case GateKind::RX:
    case GateKind::RZ:
      return 1;
    default:
      return 2;
  }
}

constexpr bool has_angle(GateKind k) {
  return k == GateKind::RX || k == GateKind::RZ || k == GateKind::CRX;
}

std::string_view to_string(GateKind k);
/// Lower-case schema name ("h", "rx", ...). Throws CircuitError if unknown.
GateKind gate_kind_from_string(std::string_view name);

/// Reduces an angle into [0, 2pi).
double canonical_angle(double theta);

/// One gate application. For controlled gates qubits = {control, target}.
/// `angle` is meaningful only when has_angle(kind) and is kept canonical;
/// for the other kinds it is always 0.
struct Gate {
  GateKind kind = GateKind::H;
  std::array<int, 2> qubits{0, -1};
  double angle = 0.0;

  static Gate h(int q) { return {GateKind::H, {q, -1}, 0.0}; }
  static Gate rx(int q, double theta) {
    return {GateKind::RX, {q, -1}, canonical_angle(theta)};
  }
  static Gate rz(int q, double theta) {
    return {GateKind::RZ, {q, -1}, canonical_angle(theta)};
  }
  static Gate cx(int c, int t) { return {GateKind::CX, {c, t}, 0.0}; }
  static Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, 0.0}; }
  static Gate swap(int a, int b) { return {GateKind::SWAP, {a, b}, 0.0}; }
  static Gate crx(int c, int t, double theta) {
    return {GateKind::CRX, {c, t}, canonical_angle(theta)};
  }

  std::size_t num_qubits() const { return arity(kind); }
  bool acts_on(int q) const {
    return qubits[0] == q || (num_qubits() == 2 && qubits[1] == q);
  }
  bool overlaps(const Gate& other) const {
    for (std::size_t i = 0; i < other.num_qubits(); ++i)
      if (acts_on(other.qubits[i])) return true;
    return false;
  }

  friend bool operator==(const Gate&, const Gate&) = default;
};

std::string to_string(const Gate& g);

/// Default gate capacity for an n-qubit circuit: 2->15, 3->30, 5->60,
/// 8->90, 10->120; other sizes take the next larger tabulated entry, and
/// sizes above 10 get 12n.
std::size_t default_max_gates(int n_qubits);

/// An ordered gate list over a fixed register. Every mutating member
/// re-establishes the invariants (valid qubits, size <= max_gates).
class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int n_qubits, std::size_t max_gates = 0,
                   std::vector<Gate> gates = {});

  int n_qubits() const { return n_qubits_; }
  std::size_t max_gates() const { return max_gates_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }
  bool full() const { return gates_.size() >= max_gates_; }
  const Gate& operator[](std::size_t i) const { return gates_[i]; }

  Circuit& append(const Gate& g);
  Circuit& insert(std::size_t pos, const Gate& g);
  Circuit& erase(std::size_t pos);
  /// Replaces the whole gate list (validated).
  Circuit& assign(std::vector<Gate> gates);
  Circuit with_max_gates(std::size_t max_gates) const;

  /// Throws CircuitError when `g` does not fit this register.
  void validate(const Gate& g) const;

  friend bool operator==(const Circuit&, const Circuit&) = default;

 private:
  int n_qubits_ = 1;
  std::size_t max_gates_ = 1;
  std::vector<Gate> gates_;
};

/// ASAP layering: each entry lists gate indices (ascending) of one layer.
std::vector<std::vector<std::size_t>> layers(const Circuit& c);
/// ASAP layer index of every gate.
std::vector<std::size_t> layer_of_gates(const Circuit& c);
std::size_t depth(const Circuit& c);
inline std::size_t gate_count(const Circuit& c) { return c.size(); }

/// Circuit JSON document, see README for the schema.
Circuit parse_circuit(std::string_view json_text);
std::string serialize_circuit(const Circuit& c);

Circuit load_circuit(const std::string& path);
void save_circuit(const Circuit& c, const std::string& path);

/// Agent observation: one row per gate slot plus four global features
/// [avg_layer_entanglement, current_entanglement, depth/M, gates/M].
struct EncodedState {
  std::size_t rows = 0;
  std::size_t row_width = 0;
  std::vector<double> gate_matrix;  // row-major rows x row_width
  std::array<double, 4> global_features{};

  double at(std::size_t r, std::size_t col) const {
    return gate_matrix[r * row_width + col];
  }
  friend bool operator==(const EncodedState&, const EncodedState&) = default;
};

inline constexpr std::size_t encoded_row_width(int n_qubits) {
  return kNumGateKinds + 2 * static_cast<std::size_t>(n_qubits) + 2;
}

EncodedState encode_state(const Circuit& c, double avg_layer_entanglement,
                          double current_entanglement);

}  // namespace qsense
