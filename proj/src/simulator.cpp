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

#include "qsense/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qsense {

namespace {

constexpr cplx kI{0.0, 1.0};

// In-place kernels over a register of `nbits` qubits stored as 2^nbits
// amplitudes. Matrices are row-major.
void kernel_1q(std::span<cplx> v, int bit, const cplx m[4]) {
  const std::size_t stride = std::size_t{1} << bit;
  const std::size_t n = v.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const cplx a0 = v[i];
      const cplx a1 = v[i + stride];
      v[i] = m[0] * a0 + m[1] * a1;
      v[i + stride] = m[2] * a0 + m[3] * a1;
    }
  }
}

// Local index 2*bit(hi_role) + bit(lo_role): `first` is the matrix's major
// qubit.
void kernel_2q(std::span<cplx> v, int first, int second, const cplx m[16]) {
  const std::size_t bf = std::size_t{1} << first;
  const std::size_t bs = std::size_t{1} << second;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & bf) || (i & bs)) continue;
    const std::size_t idx[4] = {i, i | bs, i | bf, i | bf | bs};
    const cplx a[4] = {v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]};
    for (int r = 0; r < 4; ++r)
      v[idx[r]] = m[4 * r] * a[0] + m[4 * r + 1] * a[1] +
                  m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
  }
}

// Permutation/diagonal fast paths keep the hot statevector loop cheap.
void apply_on(std::span<cplx> v, const Gate& g, int offset, bool conjugate) {
  const int q0 = g.qubits[0] + offset;
  const int q1 = g.num_qubits() == 2 ? g.qubits[1] + offset : -1;
  const std::size_t n = v.size();
  switch (g.kind) {
    case GateKind::CX: {
      const std::size_t bc = std::size_t{1} << q0;
      const std::size_t bt = std::size_t{1} << q1;
      for (std::size_t i = 0; i < n; ++i)
        if ((i & bc) && !(i & bt)) std::swap(v[i], v[i | bt]);
      return;
    }
    case GateKind::CZ: {
      const std::size_t mask = (std::size_t{1} << q0) | (std::size_t{1} << q1);
      for (std::size_t i = 0; i < n; ++i)
        if ((i & mask) == mask) v[i] = -v[i];
      return;
    }
    case GateKind::SWAP: {
      const std::size_t ba = std::size_t{1} << q0;
      const std::size_t bb = std::size_t{1} << q1;
      for (std::size_t i = 0; i < n; ++i)
        if ((i & ba) && !(i & bb)) std::swap(v[i], v[(i ^ ba) | bb]);
      return;
    }
    default:
      break;
  }
  const Eigen::MatrixXcd u = gate_matrix(g);
  if (g.num_qubits() == 1) {
    cplx m[4];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        m[2 * r + c] = conjugate ? std::conj(u(r, c)) : u(r, c);
    kernel_1q(v, q0, m);
  } else {
    cplx m[16];
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        m[4 * r + c] = conjugate ? std::conj(u(r, c)) : u(r, c);
    kernel_2q(v, q0, q1, m);
  }
}

void check_register(int n_qubits, const Gate& g) {
  for (std::size_t i = 0; i < g.num_qubits(); ++i)
    if (g.qubits[i] < 0 || g.qubits[i] >= n_qubits)
      throw std::invalid_argument("gate " + to_string(g) +
                                  " does not fit a " +
                                  std::to_string(n_qubits) + "-qubit state");
}

std::vector<int> normalized_keep(std::vector<int> keep, int n) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty() || static_cast<int>(keep.size()) >= n)
    throw std::invalid_argument(
        "reduced_density needs a non-empty proper subset of qubits");
  for (int q : keep)
    if (q < 0 || q >= n)
      throw std::invalid_argument("kept qubit index out of range");
  return keep;
}

// Splits a full basis index into (kept bits packed, environment bits packed).
struct BitSplit {
  std::vector<int> keep, env;
  std::size_t kept(std::size_t i) const {
    std::size_t out = 0;
    for (std::size_t k = 0; k < keep.size(); ++k)
      out |= ((i >> keep[k]) & 1u) << k;
    return out;
  }
  std::size_t environment(std::size_t i) const {
    std::size_t out = 0;
    for (std::size_t k = 0; k < env.size(); ++k)
      out |= ((i >> env[k]) & 1u) << k;
    return out;
  }
};

BitSplit make_split(const std::vector<int>& keep, int n) {
  BitSplit s;
  s.keep = keep;
  for (int q = 0; q < n; ++q)
    if (!std::binary_search(keep.begin(), keep.end(), q)) s.env.push_back(q);
  return s;
}

}  // namespace

Statevector::Statevector(int n_qubits)
    : n_qubits_(n_qubits), amps_(std::size_t{1} << n_qubits, cplx{0.0, 0.0}) {
  if (n_qubits < 1 || n_qubits > 30)
    throw std::invalid_argument("statevector qubit count out of range");
  amps_[0] = 1.0;
}

Statevector::Statevector(int n_qubits, std::vector<cplx> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (n_qubits < 1 || n_qubits > 30 || amps_.size() != (std::size_t{1} << n_qubits))
    throw std::invalid_argument("amplitude vector length must be 2^n");
}

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

std::vector<double> Statevector::probabilities() const {
  std::vector<double> p(amps_.size());
  for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
  return p;
}

DensityMatrix::DensityMatrix(int n_qubits)
    : n_qubits_(n_qubits), dim_(std::size_t{1} << n_qubits) {
  if (n_qubits < 1 || n_qubits > 14)
    throw std::invalid_argument("density matrix qubit count out of range");
  data_.assign(dim_ * dim_, cplx{0.0, 0.0});
  data_[0] = 1.0;
}

DensityMatrix DensityMatrix::from_statevector(const Statevector& psi) {
  DensityMatrix rho(psi.n_qubits());
  for (std::size_t r = 0; r < rho.dim_; ++r)
    for (std::size_t c = 0; c < rho.dim_; ++c)
      rho(r, c) = psi[r] * std::conj(psi[c]);
  return rho;
}

DensityMatrix DensityMatrix::from_matrix(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 2 || (m.rows() & (m.rows() - 1)))
    throw std::invalid_argument("density matrix must be square with 2^n rows");
  int n = 0;
  while ((Eigen::Index{1} << n) < m.rows()) ++n;
  DensityMatrix rho(n);
  for (std::size_t r = 0; r < rho.dim_; ++r)
    for (std::size_t c = 0; c < rho.dim_; ++c)
      rho(r, c) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return rho;
}

cplx DensityMatrix::trace() const {
  cplx t{0.0, 0.0};
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

Eigen::MatrixXcd DensityMatrix::to_eigen() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXcd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      m(r, c) = (*this)(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return m;
}

std::vector<double> DensityMatrix::eigenvalues() const {
  if (dim_ == 2) {
    // Closed form for the single-qubit marginals used on every step.
    const double a = (*this)(0, 0).real();
    const double d = (*this)(1, 1).real();
    const double b2 = std::norm((*this)(0, 1));
    const double mean = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b2);
    return {mean - rad, mean + rad};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

void NoiseModel::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  prob(p1, "p1");
  prob(p2, "p2");
  prob(p_meas, "p_meas");
  if (!(t1 > 0.0) || !(t2 > 0.0))
    throw std::invalid_argument("T1 and T2 must be positive");
  if (t2 > 2.0 * t1) throw std::invalid_argument("T2 must not exceed 2*T1");
  if (!(t_1q > 0.0) || !(t_2q > 0.0) || !std::isfinite(t_1q) || !std::isfinite(t_2q))
    throw std::invalid_argument("gate durations must be positive and finite");
}

NoiseModel NoiseModel::noiseless() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {0.0, 0.0, 0.0, inf, inf, 0.05, 0.3};
}

Eigen::MatrixXcd gate_matrix(const Gate& g) {
  using std::cos;
  using std::sin;
  const double h = g.angle / 2.0;
  switch (g.kind) {
    case GateKind::H: {
      const double s = std::numbers::sqrt2 / 2.0;
      Eigen::MatrixXcd m(2, 2);
      m << s, s, s, -s;
      return m;
    }
    case GateKind::RX: {
      Eigen::MatrixXcd m(2, 2);
      m << cos(h), -kI * sin(h), -kI * sin(h), cos(h);
      return m;
    }
    case GateKind::RZ: {
      Eigen::MatrixXcd m(2, 2);
      m << std::exp(-kI * h), 0.0, 0.0, std::exp(kI * h);
      return m;
    }
    case GateKind::CX: {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
      m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
      return m;
    }
    case GateKind::CZ: {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4);
      m(3, 3) = -1.0;
      return m;
    }
    case GateKind::SWAP: {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
      m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
      return m;
    }
    case GateKind::CRX: {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4);
      m(2, 2) = m(3, 3) = cos(h);
      m(2, 3) = m(3, 2) = -kI * sin(h);
      return m;
    }
  }
  throw std::logic_error("unhandled gate kind");
}

void apply_gate_inplace(Statevector& psi, const Gate& g) {
  check_register(psi.n_qubits(), g);
  if (g.num_qubits() == 2 && g.qubits[0] == g.qubits[1])
    throw std::invalid_argument("two-qubit gate on a single qubit");
  apply_on(psi.amplitudes(), g, 0, false);
}

Statevector apply_gate(Statevector psi, const Gate& g) {
  apply_gate_inplace(psi, g);
  return psi;
}

void run_range(Statevector& psi, const Circuit& c, std::size_t begin,
               std::size_t end) {
  if (psi.n_qubits() != c.n_qubits())
    throw std::invalid_argument("state and circuit sizes differ");
  for (std::size_t i = begin; i < end && i < c.size(); ++i)
    apply_on(psi.amplitudes(), c[i], 0, false);
}

Statevector run(const Circuit& c, const SimLimits& limits) {
  if (c.n_qubits() > limits.max_statevector_qubits)
    throw ResourceLimitError(
        "statevector simulation limited to " +
        std::to_string(limits.max_statevector_qubits) + " qubits");
  Statevector psi(c.n_qubits());
  run_range(psi, c, 0, c.size());
  return psi;
}

std::vector<Matrix2c> depolarizing_kraus(double p) {
  const double a = std::sqrt(1.0 - p);
  const double b = std::sqrt(p / 3.0);
  Matrix2c i, x, y, z;
  i << a, 0.0, 0.0, a;
  x << 0.0, b, b, 0.0;
  y << 0.0, -kI * b, kI * b, 0.0;
  z << b, 0.0, 0.0, -b;
  return {i, x, y, z};
}

std::vector<Matrix2c> amplitude_damping_kraus(double gamma) {
  Matrix2c k0, k1;
  k0 << 1.0, 0.0, 0.0, std::sqrt(1.0 - gamma);
  k1 << 0.0, std::sqrt(gamma), 0.0, 0.0;
  return {k0, k1};
}

std::vector<Matrix2c> phase_damping_kraus(double lambda) {
  Matrix2c k0, k1;
  k0 << 1.0, 0.0, 0.0, std::sqrt(1.0 - lambda);
  k1 << 0.0, 0.0, 0.0, std::sqrt(lambda);
  return {k0, k1};
}

RelaxationRates relaxation_rates(const NoiseModel& nm, double duration) {
  const double gamma = 1.0 - std::exp(-duration / nm.t1);
  // Coherences decay as exp(-t/T2) overall; amplitude damping already
  // supplies exp(-t/(2 T1)) of that.
  const double ratio = std::exp(-duration / nm.t2) / std::exp(-duration / (2.0 * nm.t1));
  const double lambda = std::clamp(1.0 - ratio * ratio, 0.0, 1.0);
  return {gamma, lambda};
}

void apply_unitary(DensityMatrix& rho, const Gate& g) {
  check_register(rho.n_qubits(), g);
  apply_on(rho.data(), g, rho.n_qubits(), false);
  apply_on(rho.data(), g, 0, true);
}

void apply_channel(DensityMatrix& rho, int q, std::span<const Matrix2c> kraus) {
  if (q < 0 || q >= rho.n_qubits())
    throw std::invalid_argument("channel qubit out of range");
  std::vector<cplx> acc(rho.data().size(), cplx{0.0, 0.0});
  std::vector<cplx> work(rho.data().size());
  const int n = rho.n_qubits();
  for (const auto& k : kraus) {
    std::copy(rho.data().begin(), rho.data().end(), work.begin());
    const cplx m[4] = {k(0, 0), k(0, 1), k(1, 0), k(1, 1)};
    const cplx mc[4] = {std::conj(m[0]), std::conj(m[1]), std::conj(m[2]),
                        std::conj(m[3])};
    kernel_1q(work, q + n, m);
    kernel_1q(work, q, mc);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
  }
  std::copy(acc.begin(), acc.end(), rho.data().begin());
}

DensityMatrix run_noisy(const Circuit& c, const NoiseModel& nm,
                        const SimLimits& limits) {
  if (c.n_qubits() > limits.max_density_qubits)
    throw ResourceLimitError(
        "density-matrix simulation limited to " +
        std::to_string(limits.max_density_qubits) + " qubits");
  nm.validate();
  DensityMatrix rho(c.n_qubits());
  const auto dep1 = depolarizing_kraus(nm.p1);
  const auto dep2 = depolarizing_kraus(nm.p2);
  const auto r1 = relaxation_rates(nm, nm.t_1q);
  const auto r2 = relaxation_rates(nm, nm.t_2q);
  const auto ad1 = amplitude_damping_kraus(r1.gamma);
  const auto pd1 = phase_damping_kraus(r1.lambda);
  const auto ad2 = amplitude_damping_kraus(r2.gamma);
  const auto pd2 = phase_damping_kraus(r2.lambda);
  for (const auto& g : c.gates()) {
    apply_unitary(rho, g);
    const bool two = g.num_qubits() == 2;
    const double p = two ? nm.p2 : nm.p1;
    const auto& rates = two ? r2 : r1;
    for (std::size_t i = 0; i < g.num_qubits(); ++i) {
      const int q = g.qubits[i];
      if (p > 0.0) apply_channel(rho, q, two ? dep2 : dep1);
      if (rates.gamma > 0.0) apply_channel(rho, q, two ? ad2 : ad1);
      if (rates.lambda > 0.0) apply_channel(rho, q, two ? pd2 : pd1);
    }
  }
  return rho;
}

DensityMatrix reduced_density(const Statevector& psi, std::vector<int> keep) {
  keep = normalized_keep(std::move(keep), psi.n_qubits());
  const BitSplit split = make_split(keep, psi.n_qubits());
  const std::size_t dk = std::size_t{1} << keep.size();
  const std::size_t de = std::size_t{1} << split.env.size();
  // Amplitudes reshaped as (kept x environment).
  std::vector<cplx> a(dk * de);
  for (std::size_t i = 0; i < psi.dim(); ++i)
    a[split.kept(i) * de + split.environment(i)] = psi[i];
  DensityMatrix out(static_cast<int>(keep.size()));
  for (std::size_t r = 0; r < dk; ++r) {
    for (std::size_t c = r; c < dk; ++c) {
      cplx s{0.0, 0.0};
      for (std::size_t e = 0; e < de; ++e) s += a[r * de + e] * std::conj(a[c * de + e]);
      out(r, c) = s;
      out(c, r) = std::conj(s);
    }
  }
  return out;
}

DensityMatrix reduced_density(const DensityMatrix& rho, std::vector<int> keep) {
  keep = normalized_keep(std::move(keep), rho.n_qubits());
  const BitSplit split = make_split(keep, rho.n_qubits());
  DensityMatrix out(static_cast<int>(keep.size()));
  out(0, 0) = 0.0;
  for (std::size_t r = 0; r < rho.dim(); ++r) {
    const std::size_t er = split.environment(r);
    const std::size_t kr = split.kept(r);
    for (std::size_t c = 0; c < rho.dim(); ++c) {
      if (split.environment(c) != er) continue;
      out(kr, split.kept(c)) += rho(r, c);
    }
  }
  return out;
}

double fidelity_up_to_phase(const Statevector& a, const Statevector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("fidelity of states with different dimensions");
  cplx ip{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) ip += std::conj(a[i]) * b[i];
  return std::clamp(std::norm(ip), 0.0, 1.0);
}

std::vector<double> diagonal_probabilities(const DensityMatrix& rho) {
  std::vector<double> p(rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) p[i] = std::max(0.0, rho(i, i).real());
  return p;
}

std::map<std::string, std::size_t> sample_counts(
    std::span<const double> probabilities, int n_qubits, std::size_t shots,
    double p_meas, std::mt19937_64& rng) {
  if (probabilities.size() != (std::size_t{1} << n_qubits))
    throw std::invalid_argument("probability vector length must be 2^n");
  std::discrete_distribution<std::size_t> draw(probabilities.begin(),
                                               probabilities.end());
  std::bernoulli_distribution flip(p_meas);
  std::map<std::string, std::size_t> counts;
  for (std::size_t s = 0; s < shots; ++s) {
    std::size_t outcome = draw(rng);
    for (int q = 0; q < n_qubits; ++q)
      if (flip(rng)) outcome ^= std::size_t{1} << q;
    std::string bits(static_cast<std::size_t>(n_qubits), '0');
    for (int q = 0; q < n_qubits; ++q)
      if ((outcome >> q) & 1u) bits[static_cast<std::size_t>(n_qubits - 1 - q)] = '1';
    ++counts[bits];
  }
  return counts;
}

}  // namespace qsense
