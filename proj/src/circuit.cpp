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

#include "qsense/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace qsense {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::array<std::string_view, kNumGateKinds> kGateNames = {
    "h", "rx", "rz", "cx", "cz", "swap", "crx"};

}  // namespace

std::string_view to_string(GateKind k) {
  return kGateNames[static_cast<std::size_t>(k)];
}

GateKind gate_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumGateKinds; ++i)
    if (kGateNames[i] == name) return static_cast<GateKind>(i);
  throw CircuitError("unknown gate kind '" + std::string(name) + "'");
}

double canonical_angle(double theta) {
  if (!std::isfinite(theta)) throw CircuitError("gate angle is not finite");
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number plus 2pi rounds to 2pi exactly.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

std::string to_string(const Gate& g) {
  std::ostringstream os;
  os << to_string(g.kind) << '(' << g.qubits[0];
  if (g.num_qubits() == 2) os << ',' << g.qubits[1];
  if (has_angle(g.kind)) os << ", " << g.angle;
  os << ')';
  return os.str();
}

std::size_t default_max_gates(int n_qubits) {
  static constexpr std::array<std::pair<int, std::size_t>, 5> kTable = {
      {{2, 15}, {3, 30}, {5, 60}, {8, 90}, {10, 120}}};
  for (const auto& [n, m] : kTable)
    if (n_qubits <= n) return m;
  return 12 * static_cast<std::size_t>(n_qubits);
}

Circuit::Circuit(int n_qubits, std::size_t max_gates, std::vector<Gate> gates)
    : n_qubits_(n_qubits),
      max_gates_(max_gates == 0 ? default_max_gates(n_qubits) : max_gates) {
  if (n_qubits < 1) throw CircuitError("n_qubits must be positive");
  assign(std::move(gates));
}

void Circuit::validate(const Gate& g) const {
  const auto arity_k = g.num_qubits();
  for (std::size_t i = 0; i < arity_k; ++i) {
    if (g.qubits[i] < 0 || g.qubits[i] >= n_qubits_)
      throw CircuitError("qubit index " + std::to_string(g.qubits[i]) +
                         " out of range for " + std::to_string(n_qubits_) +
                         " qubits");
  }
  if (arity_k == 2 && g.qubits[0] == g.qubits[1])
    throw CircuitError("two-qubit gate " + to_string(g) +
                       " acts twice on one qubit");
  if (arity_k == 1 && g.qubits[1] != -1)
    throw CircuitError("single-qubit gate carries a second qubit");
  if (!has_angle(g.kind) && g.angle != 0.0)
    throw CircuitError("gate " + std::string(to_string(g.kind)) +
                       " takes no angle");
  if (has_angle(g.kind) && !(g.angle >= 0.0 && g.angle < kTwoPi))
    throw CircuitError("gate angle is not canonical");
}

Circuit& Circuit::append(const Gate& g) { return insert(gates_.size(), g); }

Circuit& Circuit::insert(std::size_t pos, const Gate& g) {
  validate(g);
  if (gates_.size() >= max_gates_)
    throw CircuitError("circuit is at capacity (" +
                       std::to_string(max_gates_) + " gates)");
  if (pos > gates_.size()) throw CircuitError("insert position out of range");
  gates_.insert(gates_.begin() + static_cast<std::ptrdiff_t>(pos), g);
  return *this;
}

Circuit& Circuit::erase(std::size_t pos) {
  if (pos >= gates_.size()) throw CircuitError("erase position out of range");
  gates_.erase(gates_.begin() + static_cast<std::ptrdiff_t>(pos));
  return *this;
}

Circuit& Circuit::assign(std::vector<Gate> gates) {
  if (gates.size() > max_gates_)
    throw CircuitError("circuit has " + std::to_string(gates.size()) +
                       " gates, capacity is " + std::to_string(max_gates_));
  for (const auto& g : gates) validate(g);
  gates_ = std::move(gates);
  return *this;
}

Circuit Circuit::with_max_gates(std::size_t max_gates) const {
  return Circuit(n_qubits_, max_gates, gates_);
}

std::vector<std::size_t> layer_of_gates(const Circuit& c) {
  std::vector<std::size_t> next_free(static_cast<std::size_t>(c.n_qubits()), 0);
  std::vector<std::size_t> out;
  out.reserve(c.size());
  for (const auto& g : c.gates()) {
    std::size_t layer = 0;
    for (std::size_t i = 0; i < g.num_qubits(); ++i)
      layer = std::max(layer, next_free[static_cast<std::size_t>(g.qubits[i])]);
    for (std::size_t i = 0; i < g.num_qubits(); ++i)
      next_free[static_cast<std::size_t>(g.qubits[i])] = layer + 1;
    out.push_back(layer);
  }
  return out;
}

std::vector<std::vector<std::size_t>> layers(const Circuit& c) {
  const auto of = layer_of_gates(c);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < of.size(); ++i) {
    if (of[i] >= out.size()) out.resize(of[i] + 1);
    out[of[i]].push_back(i);
  }
  return out;
}

std::size_t depth(const Circuit& c) {
  const auto of = layer_of_gates(c);
  return of.empty() ? 0 : *std::max_element(of.begin(), of.end()) + 1;
}

Circuit parse_circuit(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CircuitError(std::string("malformed circuit JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CircuitError("circuit document must be an object");
  try {
    const auto& nq = doc.at("n_qubits");
    if (!nq.is_number_integer() || nq.get<long long>() < 1)
      throw CircuitError("n_qubits must be a positive integer");
    const int n = nq.get<int>();
    std::size_t max_gates = 0;
    if (doc.contains("max_gates")) {
      const auto& mg = doc["max_gates"];
      if (!mg.is_number_integer() || mg.get<long long>() < 1)
        throw CircuitError("max_gates must be a positive integer");
      max_gates = mg.get<std::size_t>();
    }
    const auto& jgates = doc.at("gates");
    if (!jgates.is_array()) throw CircuitError("gates must be an array");

    std::vector<Gate> gates;
    gates.reserve(jgates.size());
    for (const auto& jg : jgates) {
      if (!jg.is_object()) throw CircuitError("gate entries must be objects");
      const auto kind = gate_kind_from_string(jg.at("type").get<std::string>());
      const auto& jq = jg.at("qubits");
      if (!jq.is_array() || jq.size() != arity(kind))
        throw CircuitError("gate " + std::string(to_string(kind)) +
                           " expects " + std::to_string(arity(kind)) +
                           " qubit(s)");
      Gate g{kind, {-1, -1}, 0.0};
      for (std::size_t i = 0; i < jq.size(); ++i) {
        if (!jq[i].is_number_integer())
          throw CircuitError("qubit indices must be integers");
        g.qubits[i] = jq[i].get<int>();
      }
      if (has_angle(kind)) {
        if (!jg.contains("angle") || !jg["angle"].is_number())
          throw CircuitError("gate " + std::string(to_string(kind)) +
                             " requires a numeric angle");
        g.angle = canonical_angle(jg["angle"].get<double>());
      }
      gates.push_back(g);
    }
    // Capacity defaults to the per-size table but never rejects a document
    // that omits max_gates.
    if (max_gates == 0)
      max_gates = std::max(default_max_gates(n), std::max<std::size_t>(gates.size(), 1));
    return Circuit(n, max_gates, std::move(gates));
  } catch (const json::exception& e) {
    throw CircuitError(std::string("invalid circuit document: ") + e.what());
  }
}

std::string serialize_circuit(const Circuit& c) {
  using nlohmann::json;
  json doc;
  doc["n_qubits"] = c.n_qubits();
  doc["max_gates"] = c.max_gates();
  doc["gates"] = json::array();
  for (const auto& g : c.gates()) {
    json jg;
    jg["type"] = std::string(to_string(g.kind));
    if (g.num_qubits() == 1)
      jg["qubits"] = {g.qubits[0]};
    else
      jg["qubits"] = {g.qubits[0], g.qubits[1]};
    if (has_angle(g.kind)) jg["angle"] = g.angle;
    doc["gates"].push_back(std::move(jg));
  }
  return doc.dump();
}

Circuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CircuitError("cannot open circuit file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_circuit(buf.str());
}

void save_circuit(const Circuit& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CircuitError("cannot write circuit file '" + path + "'");
  out << serialize_circuit(c) << '\n';
}

EncodedState encode_state(const Circuit& c, double avg_layer_entanglement,
                          double current_entanglement) {
  if (c.size() > c.max_gates())
    throw CircuitError("circuit exceeds its gate capacity");
  const auto n = static_cast<std::size_t>(c.n_qubits());
  EncodedState s;
  s.rows = c.max_gates();
  s.row_width = encoded_row_width(c.n_qubits());
  s.gate_matrix.assign(s.rows * s.row_width, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Gate& g = c[i];
    double* row = s.gate_matrix.data() + i * s.row_width;
    row[static_cast<std::size_t>(g.kind)] = 1.0;
    row[kNumGateKinds + static_cast<std::size_t>(g.qubits[0])] = 1.0;
    if (g.num_qubits() == 2)
      row[kNumGateKinds + n + static_cast<std::size_t>(g.qubits[1])] = 1.0;
    if (has_angle(g.kind)) {
      row[s.row_width - 2] = std::sin(g.angle);
      row[s.row_width - 1] = std::cos(g.angle);
    }
  }
  const double m = static_cast<double>(c.max_gates());
  s.global_features = {std::clamp(avg_layer_entanglement, 0.0, 1.0),
                       std::clamp(current_entanglement, 0.0, 1.0),
                       static_cast<double>(depth(c)) / m,
                       static_cast<double>(c.size()) / m};
  return s;
}

}  // namespace qsense
