#include "qdmft/density.hpp"

#include <map>
#include <stdexcept>

namespace qdmft {

namespace {
constexpr long kParallelDim = 256;

long deposit_rest(long rest, long bl, long bh) {
  // Scatters `rest` bits around the two reserved pair bits.
  long out = 0, src = 1;
  for (long dst = 1; src <= rest || dst <= (bl | bh); dst <<= 1) {
    if (dst == bl || dst == bh) continue;
    if (rest & src) out |= dst;
    src <<= 1;
  }
  return out;
}

KrausChannel dephase_channel(Basis basis) {
  KrausChannel ch;
  ch.arity = 1;
  Eigen::Matrix2cd p0, p1;
  if (basis == Basis::Z) {
    p0 << 1, 0, 0, 0;
    p1 << 0, 0, 0, 1;
  } else {
    const cd i(0, 1);
    // Projectors on the sigma_y eigenstates.
    p0 << 0.5, -0.5 * i, 0.5 * i, 0.5;
    p1 << 0.5, 0.5 * i, -0.5 * i, 0.5;
  }
  ch.ops = {p0, p1};
  return ch;
}

}  // namespace

DensityMatrix::DensityMatrix(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > 10)
    throw std::invalid_argument("density engine is capped at 10 qubits");
  const long dim = 1L << n_qubits;
  rho_ = Eigen::MatrixXcd::Zero(dim, dim);
  rho_(0, 0) = 1.0;
}

DensityMatrix DensityMatrix::from_statevector(const StateVector& psi) {
  DensityMatrix dm(psi.n_qubits());
  dm.rho_ = psi.amps() * psi.amps().adjoint();
  return dm;
}

DensityMatrix DensityMatrix::from_matrix(Eigen::MatrixXcd rho) {
  const long dim = rho.rows();
  if (dim != rho.cols() || dim < 2 || (dim & (dim - 1)) != 0)
    throw std::invalid_argument("density matrix must be square with 2^n rows");
  int n = 0;
  while ((1L << n) < dim) ++n;
  if ((rho - rho.adjoint()).norm() > 1e-10)
    throw std::invalid_argument("density matrix must be hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-10)
    throw std::invalid_argument("density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument("density matrix must be positive semidefinite");
  DensityMatrix dm(n);
  dm.rho_ = std::move(rho);
  return dm;
}

void DensityMatrix::left_mult_1q(const Eigen::Matrix2cd& m, int q, Eigen::MatrixXcd& rho) const {
  const long dim = rho.rows(), bit = 1L << q;
  const cd m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (long c = 0; c < dim; ++c) {
    cd* col = rho.data() + c * dim;
    for (long base = 0; base < dim; base += 2 * bit)
      for (long off = base; off < base + bit; ++off) {
        const cd a0 = col[off], a1 = col[off + bit];
        col[off] = m00 * a0 + m01 * a1;
        col[off + bit] = m10 * a0 + m11 * a1;
      }
  }
}

void DensityMatrix::right_mult_dag_1q(const Eigen::Matrix2cd& m, int q,
                                      Eigen::MatrixXcd& rho) const {
  const long dim = rho.rows(), bit = 1L << q;
  const cd c00 = std::conj(m(0, 0)), c01 = std::conj(m(0, 1));
  const cd c10 = std::conj(m(1, 0)), c11 = std::conj(m(1, 1));
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (long base = 0; base < dim; base += 2 * bit) {
    for (long off = base; off < base + bit; ++off) {
      cd* col0 = rho.data() + off * dim;
      cd* col1 = rho.data() + (off + bit) * dim;
      for (long r = 0; r < dim; ++r) {
        const cd a0 = col0[r], a1 = col1[r];
        col0[r] = c00 * a0 + c01 * a1;
        col1[r] = c10 * a0 + c11 * a1;
      }
    }
  }
}

void DensityMatrix::left_mult_2q(const Eigen::Matrix4cd& m, int ql, int qh,
                                 Eigen::MatrixXcd& rho) const {
  const long dim = rho.rows(), bl = 1L << ql, bh = 1L << qh;
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (long c = 0; c < dim; ++c) {
    cd* col = rho.data() + c * dim;
    for (long rest = 0; rest < dim / 4; ++rest) {
      const long base = deposit_rest(rest, bl, bh);
      const long idx[4] = {base, base | bl, base | bh, base | bl | bh};
      cd v[4];
      for (int i = 0; i < 4; ++i) v[i] = col[idx[i]];
      for (int i = 0; i < 4; ++i)
        col[idx[i]] = m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2] + m(i, 3) * v[3];
    }
  }
}

void DensityMatrix::right_mult_dag_2q(const Eigen::Matrix4cd& m, int ql, int qh,
                                      Eigen::MatrixXcd& rho) const {
  const long dim = rho.rows(), bl = 1L << ql, bh = 1L << qh;
  const Eigen::Matrix4cd mc = m.conjugate();
#pragma omp parallel for schedule(static) if (dim >= kParallelDim)
  for (long rest = 0; rest < dim / 4; ++rest) {
    const long base = deposit_rest(rest, bl, bh);
    const long idx[4] = {base, base | bl, base | bh, base | bl | bh};
    cd* cols[4];
    for (int i = 0; i < 4; ++i) cols[i] = rho.data() + idx[i] * dim;
    for (long r = 0; r < dim; ++r) {
      cd v[4];
      for (int i = 0; i < 4; ++i) v[i] = cols[i][r];
      for (int i = 0; i < 4; ++i)
        cols[i][r] = mc(i, 0) * v[0] + mc(i, 1) * v[1] + mc(i, 2) * v[2] + mc(i, 3) * v[3];
    }
  }
}

void DensityMatrix::apply_unitary(const Op& op) {
  if (op.gate == Gate::Measure) return;  // collapse handled by run_density
  if (op.gate == Gate::Cnot) {
    Eigen::Matrix4cd cx;
    cx.setZero();
    // Local order (bit0 = control, bit1 = target): flips bit1 when bit0 set.
    cx(0, 0) = cx(2, 2) = 1;
    cx(3, 1) = cx(1, 3) = 1;
    left_mult_2q(cx, op.control(), op.target(), rho_);
    right_mult_dag_2q(cx, op.control(), op.target(), rho_);
    return;
  }
  const Eigen::Matrix2cd m = gate_matrix(op);
  left_mult_1q(m, op.qubits[0], rho_);
  right_mult_dag_1q(m, op.qubits[0], rho_);
}

void DensityMatrix::apply_channel(const KrausChannel& ch, int q) {
  if (ch.arity != 1) throw std::invalid_argument("channel arity mismatch");
  if (ch.is_identity()) return;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho_.rows(), rho_.cols());
  for (const auto& k : ch.ops) {
    Eigen::MatrixXcd term = rho_;
    left_mult_1q(k, q, term);
    right_mult_dag_1q(k, q, term);
    acc += term;
  }
  rho_ = std::move(acc);
}

void DensityMatrix::apply_channel(const KrausChannel& ch, int q_low, int q_high) {
  if (ch.arity != 2) throw std::invalid_argument("channel arity mismatch");
  if (ch.is_identity()) return;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho_.rows(), rho_.cols());
  for (const auto& k : ch.ops) {
    Eigen::MatrixXcd term = rho_;
    left_mult_2q(k, q_low, q_high, term);
    right_mult_dag_2q(k, q_low, q_high, term);
    acc += term;
  }
  rho_ = std::move(acc);
}

DensityMatrix run_density(const Circuit& c, const DensityMatrix& initial,
                          const NoiseParams& params) {
  if (initial.n_qubits() != c.n_qubits())
    throw std::invalid_argument("initial state size mismatch");
  DensityMatrix rho = initial;
  // Channels depend on the gate kind (and measurement basis), never on angles
  // or qubit indices, so each distinct kind is built once per run.
  std::map<int, KrausChannel> cache;
  auto channel = [&](const Op& op) -> const KrausChannel& {
    int key = static_cast<int>(op.gate);
    if (op.gate == Gate::Measure) key |= static_cast<int>(op.basis) << 8;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, op_channel(params, op)).first;
    return it->second;
  };
  for (const Op& op : c.ops()) {
    switch (op.gate) {
      case Gate::U1:
      case Gate::U2:
      case Gate::U3:
        rho.apply_unitary(op);
        rho.apply_channel(channel(op), op.qubits[0]);
        break;
      case Gate::Cnot:
        rho.apply_unitary(op);
        rho.apply_channel(channel(op), op.control(), op.target());
        break;
      case Gate::Measure:
        rho.apply_channel(channel(op), op.qubits[0]);
        rho.apply_channel(dephase_channel(op.basis), op.qubits[0]);
        break;
      default:
        throw std::invalid_argument("noisy run requires a lowered circuit");
    }
  }
  return rho;
}

DensityMatrix run_density(const Circuit& c, const NoiseParams& params) {
  return run_density(c, DensityMatrix(c.n_qubits()), params);
}

double expectation(const DensityMatrix& rho, const std::string& paulis) {
  const int n = rho.n_qubits();
  if (static_cast<int>(paulis.size()) != n)
    throw std::invalid_argument("pauli string length mismatch");
  long mask = 0;
  for (int q = 0; q < n; ++q)
    if (paulis[q] == 'X' || paulis[q] == 'Y') mask |= 1L << q;
  const long dim = 1L << n;
  cd sum = 0;
  for (long r = 0; r < dim; ++r) {
    // phase of P|r> = phase * |r ^ mask>
    cd phase = 1.0;
    for (int q = 0; q < n; ++q) {
      const int bit = (r >> q) & 1;
      switch (paulis[q]) {
        case 'Y': phase *= bit ? cd(0, -1) : cd(0, 1); break;
        case 'Z': phase *= bit ? -1.0 : 1.0; break;
        default: break;
      }
    }
    sum += rho.matrix()(r, r ^ mask) * phase;
  }
  return sum.real();
}

double sample_expectation(const DensityMatrix& rho, int qubit, Basis basis, long shots,
                          std::uint64_t seed) {
  std::string paulis(rho.n_qubits(), 'I');
  paulis[qubit] = (basis == Basis::Z) ? 'Z' : 'Y';
  const double p = 0.5 * (1.0 + expectation(rho, paulis));
  return detail::binomial_estimate(p, shots, seed);
}

Eigen::Matrix4cd partial_trace(const DensityMatrix& rho, int q_low, int q_high) {
  const int n = rho.n_qubits();
  if (q_low == q_high || q_low < 0 || q_high < 0 || q_low >= n || q_high >= n)
    throw std::invalid_argument("partial_trace needs two distinct in-range qubits");
  const long dim = 1L << n, bl = 1L << q_low, bh = 1L << q_high;
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (long rest = 0; rest < dim / 4; ++rest) {
    const long base = deposit_rest(rest, bl, bh);
    const long idx[4] = {base, base | bl, base | bh, base | bl | bh};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) out(r, c) += rho.matrix()(idx[r], idx[c]);
  }
  return out;
}

Eigen::Matrix4cd partial_trace(const StateVector& psi, int q_low, int q_high) {
  const int n = psi.n_qubits();
  if (q_low == q_high || q_low < 0 || q_high < 0 || q_low >= n || q_high >= n)
    throw std::invalid_argument("partial_trace needs two distinct in-range qubits");
  const long dim = 1L << n, bl = 1L << q_low, bh = 1L << q_high;
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (long rest = 0; rest < dim / 4; ++rest) {
    const long base = deposit_rest(rest, bl, bh);
    const long idx[4] = {base, base | bl, base | bh, base | bl | bh};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) out(r, c) += psi.amps()(idx[r]) * std::conj(psi.amps()(idx[c]));
  }
  return out;
}

}  // namespace qdmft
