#include "qdmft/statevector.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace qdmft {

namespace {
// Kernels go parallel only when the register is big enough to pay for it.
constexpr long kParallelAmps = 1L << 14;
}  // namespace

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > 26) throw std::invalid_argument("bad qubit count");
  amps_ = Eigen::VectorXcd::Zero(1L << n_qubits);
  amps_(0) = 1.0;
}

StateVector StateVector::from_amplitudes(Eigen::VectorXcd amps) {
  const long dim = amps.size();
  if (dim < 2 || (dim & (dim - 1)) != 0) throw std::invalid_argument("dimension not 2^n");
  int n = 0;
  while ((1L << n) < dim) ++n;
  if (std::abs(amps.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("state vector must be normalized");
  StateVector sv(n);
  sv.amps_ = std::move(amps);
  return sv;
}

void StateVector::apply_matrix_1q(const Eigen::Matrix2cd& m, int q) {
  const long dim = amps_.size(), bit = 1L << q;
  const cd m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
  cd* a = amps_.data();
#pragma omp parallel for schedule(static) if (dim >= kParallelAmps)
  for (long base = 0; base < dim; base += 2 * bit) {
    for (long off = base; off < base + bit; ++off) {
      const cd a0 = a[off], a1 = a[off + bit];
      a[off] = m00 * a0 + m01 * a1;
      a[off + bit] = m10 * a0 + m11 * a1;
    }
  }
}

void StateVector::apply_cnot(int control, int target) {
  const long dim = amps_.size(), cb = 1L << control, tb = 1L << target;
  cd* a = amps_.data();
#pragma omp parallel for schedule(static) if (dim >= kParallelAmps)
  for (long j = 0; j < dim; ++j) {
    if ((j & cb) && !(j & tb)) std::swap(a[j], a[j | tb]);
  }
}

void StateVector::apply(const Op& op) {
  if (op.gate == Gate::Measure)
    throw std::invalid_argument("statevector engine cannot execute measurements");
  if (op.qubits[0] < 0 || op.qubits[0] >= n_qubits_ ||
      (arity(op.gate) == 2 && (op.qubits[1] < 0 || op.qubits[1] >= n_qubits_)))
    throw std::invalid_argument("op qubit out of range");
  if (op.gate == Gate::Cnot)
    apply_cnot(op.control(), op.target());
  else
    apply_matrix_1q(gate_matrix(op), op.qubits[0]);
}

StateVector run_statevector(const Circuit& c, const StateVector& initial) {
  if (initial.n_qubits() != c.n_qubits())
    throw std::invalid_argument("initial state size mismatch");
  StateVector sv = initial;
  for (const Op& op : c.ops()) sv.apply(op);
  return sv;
}

StateVector run_statevector(const Circuit& c) {
  return run_statevector(c, StateVector(c.n_qubits()));
}

double expectation(const StateVector& psi, const std::string& paulis) {
  if (static_cast<int>(paulis.size()) != psi.n_qubits())
    throw std::invalid_argument("pauli string length mismatch");
  StateVector p = psi;
  const cd i(0, 1);
  Eigen::Matrix2cd m;
  for (int q = 0; q < psi.n_qubits(); ++q) {
    switch (paulis[q]) {
      case 'I': continue;
      case 'X': m << 0, 1, 1, 0; break;
      case 'Y': m << 0, -i, i, 0; break;
      case 'Z': m << 1, 0, 0, -1; break;
      default: throw std::invalid_argument("pauli string may contain only IXYZ");
    }
    p.apply_matrix_1q(m, q);
  }
  const cd val = psi.amps().dot(p.amps());
  return val.real();
}

namespace detail {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step over seed ^ rotated salt; cheap and well scrambled.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double binomial_estimate(double p, long shots, std::uint64_t seed) {
  if (shots <= 0) throw std::invalid_argument("shots must be positive");
  p = std::clamp(p, 0.0, 1.0);
  std::mt19937_64 rng(seed);
  std::binomial_distribution<long> dist(shots, p);
  const long k = dist(rng);
  return 2.0 * static_cast<double>(k) / static_cast<double>(shots) - 1.0;
}

}  // namespace detail

double sample_expectation(const StateVector& psi, int qubit, Basis basis, long shots,
                          std::uint64_t seed) {
  std::string paulis(psi.n_qubits(), 'I');
  paulis[qubit] = (basis == Basis::Z) ? 'Z' : 'Y';
  const double p = 0.5 * (1.0 + expectation(psi, paulis));
  return detail::binomial_estimate(p, shots, seed);
}

}  // namespace qdmft
