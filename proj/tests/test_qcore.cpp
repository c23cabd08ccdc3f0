#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "qdmft/circuit.hpp"
#include "qdmft/dense.hpp"
#include "qdmft/transpile.hpp"
#include "test_util.hpp"

using namespace qdmft;

TEST_CASE("circuit builders validate their arguments") {
  Circuit c(2);
  CHECK_THROWS(c.u1(2, 0.1));
  CHECK_THROWS(c.cnot(1, 1));
  c.measure(0);
  CHECK_THROWS(c.x(0));   // measurement is terminal for its qubit
  c.x(1);                 // the other qubit stays usable
  CHECK(c.has_measurement());
}

TEST_CASE("text round trip preserves ops") {
  Circuit c(3);
  c.u3(0, 0.7, -0.2, 1.1).cnot(0, 2).rz(1, 0.4).measure(2, Basis::Y);
  const Circuit back = from_text(to_text(c));
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.ops()[i].gate == c.ops()[i].gate);
    CHECK(back.ops()[i].qubits == c.ops()[i].qubits);
    for (int k = 0; k < 3; ++k)
      CHECK(back.ops()[i].angles[k] == doctest::Approx(c.ops()[i].angles[k]).epsilon(1e-15));
  }
  CHECK(back.ops()[3].basis == Basis::Y);
}

TEST_CASE("lowering rewrites the convenience gates") {
  Circuit c(1);
  c.h(0);
  Circuit l = lower_to_basis(c);
  REQUIRE(l.size() == 1);
  CHECK(l.ops()[0].gate == Gate::U2);
  CHECK(l.ops()[0].angles[0] == 0.0);
  CHECK(l.ops()[0].angles[1] == doctest::Approx(M_PI));

  Circuit r(1);
  r.rz(0, 0.37);
  l = lower_to_basis(r);
  REQUIRE(l.size() == 1);
  CHECK(l.ops()[0].gate == Gate::U1);
  CHECK(l.ops()[0].angles[0] == doctest::Approx(0.37));
}

TEST_CASE("lowering preserves the unitary up to phase") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Circuit c = testutil::random_circuit(3, 30, seed, true);
    const Circuit l = lower_to_basis(c);
    for (const Op& op : l.ops()) {
      const bool basis = op.gate == Gate::U1 || op.gate == Gate::U2 || op.gate == Gate::U3 ||
                         op.gate == Gate::Cnot || op.gate == Gate::Measure;
      CHECK(basis);
    }
    CHECK(phase_distance(dense_unitary(c), dense_unitary(l)) < 1e-12);
  }
}

TEST_CASE("dense unitary ground cases") {
  Circuit id2(2);
  CHECK((dense_unitary(id2) - Eigen::MatrixXcd::Identity(4, 4)).norm() == 0.0);

  // control q0, target q1; qubit 0 is the low bit, so indices 1 and 3 swap
  Circuit cx(2);
  cx.cnot(0, 1);
  Eigen::MatrixXcd u = dense_unitary(cx);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Zero(4, 4);
  expect(0, 0) = expect(2, 2) = expect(3, 1) = expect(1, 3) = 1;
  CHECK((u - expect).norm() < 1e-15);

  const double th = 0.9, ph = -0.4, la = 1.7;
  Eigen::Matrix2cd m = u3_matrix(th, ph, la);
  const cd i(0, 1);
  CHECK(std::abs(m(0, 0) - std::cos(th / 2)) < 1e-15);
  CHECK(std::abs(m(0, 1) + std::exp(i * la) * std::sin(th / 2)) < 1e-15);
  CHECK(std::abs(m(1, 0) - std::exp(i * ph) * std::sin(th / 2)) < 1e-15);
  CHECK(std::abs(m(1, 1) - std::exp(i * (ph + la)) * std::cos(th / 2)) < 1e-15);

  Circuit meas(1);
  meas.measure(0);
  CHECK_THROWS(dense_unitary(meas));
}

TEST_CASE("dense unitary is unitary on random circuits") {
  const Circuit c = testutil::random_circuit(4, 60, 77, true);
  const Eigen::MatrixXcd u = dense_unitary(c);
  CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("X on qubit k flips exactly bit k") {
  const int n = 4;
  for (int k = 0; k < n; ++k) {
    Circuit c(n);
    c.x(k);
    const Eigen::MatrixXcd u = dense_unitary(c);
    for (long col = 0; col < (1L << n); ++col) {
      const long row = col ^ (1L << k);
      CHECK(std::abs(u(row, col) - 1.0) < 1e-15);
    }
  }
}

TEST_CASE("inverse undoes a circuit") {
  Circuit u1c(1);
  u1c.u1(0, 0.8);
  CHECK(inverse(u1c).ops()[0].angles[0] == doctest::Approx(-0.8));

  Circuit cx(2);
  cx.cnot(1, 0);
  const Circuit cxi = inverse(cx);
  CHECK(cxi.ops()[0].gate == Gate::Cnot);
  CHECK(cxi.ops()[0].qubits == cx.ops()[0].qubits);

  const Circuit c = testutil::random_circuit(3, 20, 5, true);
  Circuit round(3);
  round.append(c).append(inverse(c));
  CHECK(phase_distance(dense_unitary(round), Eigen::MatrixXcd::Identity(8, 8)) < 1e-10);

  Circuit meas(1);
  meas.measure(0);
  CHECK_THROWS(inverse(meas));
}

TEST_CASE("cleanup merges, drops, and cancels") {
  Circuit merge(1);
  merge.rz(0, 0.3).rz(0, 0.2);
  Circuit m = cleanup_transpile(merge, 1e-4);
  REQUIRE(m.size() == 1);
  CHECK(m.ops()[0].angles[0] == doctest::Approx(0.5));

  Circuit cancel(2);
  cancel.cnot(0, 1).cnot(0, 1);
  CHECK(cleanup_transpile(cancel, 1e-4).size() == 0);

  Circuit tiny(2);
  tiny.h(1).rx(0, 1e-6).cnot(0, 1);
  Circuit t = cleanup_transpile(tiny, 1e-4);
  CHECK(t.size() == 2);
  CHECK((dense_unitary(t) - dense_unitary(tiny)).operatorNorm() < 1e-5);
}

TEST_CASE("cleanup is idempotent") {
  for (std::uint64_t seed : {3u, 4u}) {
    const Circuit c = testutil::random_circuit(3, 40, seed, true);
    const Circuit once = cleanup_transpile(c, 1e-4);
    const Circuit twice = cleanup_transpile(once, 1e-4);
    REQUIRE(twice.size() == once.size());
    CHECK(to_text(twice) == to_text(once));
  }
}

TEST_CASE("gate counts") {
  Circuit empty(2);
  GateCounts g = gate_counts(empty);
  CHECK(g.n_single == 0);
  CHECK(g.n_two == 0);
  CHECK(g.depth == 0);

  Circuit hc(2);
  hc.h(0).cnot(0, 1);
  g = gate_counts(hc);
  CHECK(g.n_single == 1);
  CHECK(g.n_two == 1);
  CHECK(g.depth == 2);

  // counts are additive under composition, depth subadditive
  const Circuit a = testutil::random_circuit(3, 25, 21);
  const Circuit b = testutil::random_circuit(3, 25, 22);
  Circuit ab(3);
  ab.append(a).append(b);
  const GateCounts ga = gate_counts(a), gb = gate_counts(b), gab = gate_counts(ab);
  CHECK(gab.n_single == ga.n_single + gb.n_single);
  CHECK(gab.n_two == ga.n_two + gb.n_two);
  CHECK(gab.depth <= ga.depth + gb.depth);
}
