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
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qsense/metrics.hpp"
#include "qsense/simulator.hpp"

using namespace qsense;
using std::numbers::pi;
using cd = std::complex<double>;

namespace {

const double kR = 1.0 / std::sqrt(2.0);

Statevector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cd> a(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& x : a) {
    x = {g(rng), g(rng)};
    norm += std::norm(x);
  }
  for (auto& x : a) x /= std::sqrt(norm);
  return Statevector(n, a);
}

Gate random_gate(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> kind(0, kNumGateKinds - 1);
  std::uniform_int_distribution<int> q(0, n - 1);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi);
  const auto k = static_cast<GateKind>(kind(rng));
  Gate g{k, {q(rng), -1}, 0.0};
  if (arity(k) == 2) {
    do g.qubits[1] = q(rng);
    while (g.qubits[1] == g.qubits[0]);
  }
  if (has_angle(k)) g.angle = ang(rng);
  return g;
}

Circuit random_circuit(int n, std::size_t count, std::mt19937_64& rng) {
  Circuit c(n, std::max<std::size_t>(count, 1));
  for (std::size_t i = 0; i < count; ++i) c.append(random_gate(n, rng));
  return c;
}

double frobenius(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm(); }

Eigen::MatrixXcd projector(const Statevector& psi) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.dim()));
  for (std::size_t i = 0; i < psi.dim(); ++i) v(static_cast<Eigen::Index>(i)) = psi[i];
  return v * v.adjoint();
}

}  // namespace

TEST_CASE("standard gate matrices") {
  const auto h = gate_matrix(Gate::h(0));
  CHECK(std::abs(h(0, 0) - kR) < 1e-12);
  CHECK(std::abs(h(0, 1) - kR) < 1e-12);
  CHECK(std::abs(h(1, 0) - kR) < 1e-12);
  CHECK(std::abs(h(1, 1) + kR) < 1e-12);
  CHECK((gate_matrix(Gate::rx(0, 0.0)) - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
  Eigen::Matrix2cd rxpi;
  rxpi << 0, cd(0, -1), cd(0, -1), 0;
  CHECK((gate_matrix(Gate::rx(0, pi)) - rxpi).norm() < 1e-12);
  Eigen::Matrix2cd rz;
  rz << std::exp(cd(0, -0.35)), 0, 0, std::exp(cd(0, 0.35));
  CHECK((gate_matrix(Gate::rz(0, 0.7)) - rz).norm() < 1e-12);
}

TEST_CASE("every gate matrix is unitary") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto u = gate_matrix(random_gate(3, rng));
    CHECK((u * u.adjoint() - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).norm() < 1e-12);
  }
}

TEST_CASE("H then CX prepares a Bell state with qubit 0 as the low bit") {
  Statevector psi(2);
  psi = apply_gate(psi, Gate::h(0));
  CHECK(std::abs(psi[0] - kR) < 1e-12);
  CHECK(std::abs(psi[1] - kR) < 1e-12);
  CHECK(std::abs(psi[2]) < 1e-12);
  psi = apply_gate(psi, Gate::cx(0, 1));
  CHECK(std::abs(psi[0] - kR) < 1e-12);
  CHECK(std::abs(psi[3] - kR) < 1e-12);
  CHECK(std::abs(psi[1]) < 1e-12);
}

TEST_CASE("CX(0,1) maps |01> to |11>") {
  // Basis index 1: qubit 0 set.
  std::vector<cd> a(4, 0.0);
  a[1] = 1.0;
  const Statevector out = apply_gate(Statevector(2, a), Gate::cx(0, 1));
  CHECK(std::abs(out[3] - 1.0) < 1e-12);
}

TEST_CASE("two SWAPs restore a random state") {
  std::mt19937_64 rng(2);
  const Statevector psi = random_state(3, rng);
  const Statevector back = apply_gate(apply_gate(psi, Gate::swap(0, 2)), Gate::swap(0, 2));
  for (std::size_t i = 0; i < psi.dim(); ++i) CHECK(std::abs(back[i] - psi[i]) < 1e-12);
}

TEST_CASE("two-qubit gates honour control and target order") {
  // |q1 q0> = |10> is index 2; CX(1,0) flips qubit 0 -> index 3.
  std::vector<cd> a(4, 0.0);
  a[2] = 1.0;
  CHECK(std::abs(apply_gate(Statevector(2, a), Gate::cx(1, 0))[3] - 1.0) < 1e-12);
  CHECK(std::abs(apply_gate(Statevector(2, a), Gate::cx(0, 1))[2] - 1.0) < 1e-12);
  // CRX(pi) with the control set acts as -iX on the target.
  const Statevector c = apply_gate(Statevector(2, a), Gate::crx(1, 0, pi));
  CHECK(std::abs(c[3] - cd(0, -1)) < 1e-12);
}

TEST_CASE("run covers the textbook states") {
  const Statevector bell = run(Circuit(2, 15, {Gate::h(0), Gate::cx(0, 1)}));
  CHECK(std::abs(bell[0] - kR) < 1e-12);
  CHECK(std::abs(bell[3] - kR) < 1e-12);
  const Statevector zero = run(Circuit(3));
  CHECK(std::abs(zero[0] - 1.0) < 1e-12);
  const Statevector ghz = run(Circuit(3, 30, {Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2)}));
  CHECK(std::abs(ghz[0] - kR) < 1e-12);
  CHECK(std::abs(ghz[7] - kR) < 1e-12);
  for (std::size_t i = 1; i < 7; ++i) CHECK(std::abs(ghz[i]) < 1e-12);
}

TEST_CASE("norm is preserved on random circuits") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 40; ++t) {
    const Circuit c = random_circuit(2 + t % 7, 100, rng);
    CHECK(std::abs(run(c).norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("qubit limits are enforced") {
  CHECK_THROWS_AS(run(Circuit(3), SimLimits{2, 2}), ResourceLimitError);
  CHECK_THROWS_AS(run_noisy(Circuit(3), NoiseModel{}, SimLimits{20, 2}), ResourceLimitError);
  CHECK_THROWS_AS(run_noisy(Circuit(11), NoiseModel{}), ResourceLimitError);
}

TEST_CASE("noiseless RX(pi) gives |1><1|") {
  const DensityMatrix rho =
      run_noisy(Circuit(1, 5, {Gate::rx(0, pi)}), NoiseModel::noiseless());
  Eigen::Matrix2cd one = Eigen::Matrix2cd::Zero();
  one(1, 1) = 1.0;
  CHECK(frobenius(rho.to_eigen(), one) < 1e-10);
}

TEST_CASE("depolarized |+> has eigenvalues 1-2p/3 and 2p/3") {
  NoiseModel nm = NoiseModel::noiseless();
  nm.p1 = 0.1;
  const DensityMatrix rho = run_noisy(Circuit(1, 5, {Gate::h(0)}), nm);
  const auto ev = rho.eigenvalues();
  REQUIRE(ev.size() == 2);
  CHECK(ev[0] == doctest::Approx(0.2 / 3).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0 - 0.2 / 3).epsilon(1e-12));
  const double h = -(ev[0] * std::log2(ev[0]) + ev[1] * std::log2(ev[1]));
  CHECK(entropy_bits(ev) == doctest::Approx(h).epsilon(1e-12));
  CHECK(h == doctest::Approx(0.3534).epsilon(1e-3));
}

TEST_CASE("noisy runs keep density-matrix invariants") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 4;
    const Circuit c = n > 1 ? random_circuit(n, static_cast<std::size_t>(t % 12), rng)
                            : Circuit(1, 5, {Gate::h(0), Gate::rz(0, 0.4 * t)});
    const DensityMatrix rho = run_noisy(c, NoiseModel{});
    CHECK(std::abs(rho.trace() - cd(1.0, 0.0)) < 1e-10);
    const auto m = rho.to_eigen();
    CHECK((m - m.adjoint()).norm() < 1e-10);
    for (double e : rho.eigenvalues()) CHECK(e >= -1e-10);
  }
}

TEST_CASE("zero noise reproduces the pure-state projector") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Circuit c = random_circuit(2 + t % 4, 20, rng);
    const DensityMatrix rho = run_noisy(c, NoiseModel::noiseless());
    CHECK(frobenius(rho.to_eigen(), projector(run(c))) < 1e-10);
  }
}

TEST_CASE("Kraus sets are trace preserving") {
  auto check = [](const std::vector<Matrix2c>& ks) {
    Eigen::Matrix2cd sum = Eigen::Matrix2cd::Zero();
    for (const auto& k : ks) sum += k.adjoint() * k;
    CHECK((sum - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
  };
  for (double p : {0.0, 0.001, 0.3, 1.0}) {
    check(depolarizing_kraus(p));
    check(amplitude_damping_kraus(p));
    check(phase_damping_kraus(p));
  }
}

TEST_CASE("relaxation rates follow T1 and T2") {
  NoiseModel nm;
  const auto r = relaxation_rates(nm, 0.3);
  CHECK(r.gamma == doctest::Approx(1.0 - std::exp(-0.3 / 50.0)).epsilon(1e-14));
  const double ratio = std::exp(-0.3 / 70.0) / std::exp(-0.3 / 100.0);
  CHECK(r.lambda == doctest::Approx(1.0 - ratio * ratio).epsilon(1e-14));
  CHECK(r.lambda >= 0.0);
  const auto none = relaxation_rates(NoiseModel::noiseless(), 0.3);
  CHECK(none.gamma == 0.0);
  CHECK(none.lambda == 0.0);
}

TEST_CASE("relaxation decays coherence at the combined T2 rate") {
  // An idle-equivalent circuit: RZ(0) adds no rotation, only relaxation.
  NoiseModel nm = NoiseModel::noiseless();
  nm.t1 = 50.0;
  nm.t2 = 70.0;
  nm.t_1q = 5.0;
  const DensityMatrix rho = run_noisy(Circuit(1, 5, {Gate::h(0), Gate::rz(0, 0.0)}), nm);
  // Two gates of 5 us: off-diagonal 0.5 exp(-10/T2).
  CHECK(std::abs(rho(0, 1)) == doctest::Approx(0.5 * std::exp(-10.0 / 70.0)).epsilon(1e-12));
  // Excited population 0.5 exp(-5/T1) after the second gate plus the first.
  const double g = std::exp(-5.0 / 50.0);
  CHECK(rho(1, 1).real() == doctest::Approx(0.5 * g * g).epsilon(1e-12));
}

TEST_CASE("noise model validation") {
  NoiseModel nm;
  nm.p1 = 1.5;
  CHECK_THROWS_AS(nm.validate(), std::invalid_argument);
  nm = NoiseModel{};
  nm.t2 = 2 * nm.t1 + 1;
  CHECK_THROWS_AS(nm.validate(), std::invalid_argument);
  nm = NoiseModel{};
  nm.t_2q = 0.0;
  CHECK_THROWS_AS(nm.validate(), std::invalid_argument);
  CHECK_NOTHROW(NoiseModel{}.validate());
}

TEST_CASE("reduced density matrices") {
  const Statevector bell = run(Circuit(2, 15, {Gate::h(0), Gate::cx(0, 1)}));
  CHECK(frobenius(reduced_density(bell, {0}).to_eigen(), 0.5 * Eigen::Matrix2cd::Identity()) < 1e-12);

  const Statevector prod = run(Circuit(2, 15, {Gate::h(1)}));
  Eigen::Matrix2cd plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  CHECK(frobenius(reduced_density(prod, {1}).to_eigen(), plus) < 1e-12);

  const Statevector ghz = run(Circuit(3, 30, {Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2)}));
  Eigen::Matrix4cd mix = Eigen::Matrix4cd::Zero();
  mix(0, 0) = 0.5;
  mix(3, 3) = 0.5;
  CHECK(frobenius(reduced_density(ghz, {0, 1}).to_eigen(), mix) < 1e-12);
  CHECK(frobenius(reduced_density(DensityMatrix::from_statevector(ghz), {0, 1}).to_eigen(), mix) <
        1e-12);

  CHECK_THROWS(reduced_density(ghz, {}));
  CHECK_THROWS(reduced_density(ghz, {0, 1, 2}));
}

TEST_CASE("reduced density of a mixed state matches the pure path") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Statevector psi = random_state(4, rng);
    const DensityMatrix rho = DensityMatrix::from_statevector(psi);
    for (std::vector<int> keep : {std::vector<int>{0}, {3}, {1, 2}, {0, 3}, {0, 1, 3}}) {
      CHECK(frobenius(reduced_density(psi, keep).to_eigen(), reduced_density(rho, keep).to_eigen()) <
            1e-12);
    }
  }
}

TEST_CASE("fidelity up to phase") {
  std::mt19937_64 rng(9);
  const Statevector psi = random_state(3, rng);
  CHECK(fidelity_up_to_phase(psi, psi) == doctest::Approx(1.0).epsilon(1e-12));
  Statevector phased = psi;
  for (auto& a : phased.amplitudes()) a *= std::exp(cd(0, 1.234));
  CHECK(fidelity_up_to_phase(psi, phased) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_up_to_phase(Statevector(1), run(Circuit(1, 5, {Gate::h(0)}))) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS(fidelity_up_to_phase(Statevector(1), Statevector(2)));
}

TEST_CASE("sampling applies readout flips") {
  std::mt19937_64 rng(10);
  const std::vector<double> p = {1.0, 0.0, 0.0, 0.0};
  const auto clean = sample_counts(p, 2, 1000, 0.0, rng);
  REQUIRE(clean.size() == 1);
  CHECK(clean.at("00") == 1000);
  const auto noisy = sample_counts(p, 2, 20000, 0.1, rng);
  const double flipped = static_cast<double>(noisy.count("01") ? noisy.at("01") : 0) / 20000.0;
  CHECK(flipped == doctest::Approx(0.09).epsilon(0.15));
  const std::vector<double> one = {0.0, 1.0};
  CHECK(sample_counts(one, 1, 10, 0.0, rng).at("1") == 10);
}
