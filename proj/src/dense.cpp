#include "qdmft/dense.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdmft {

using std::numbers::pi;

Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const cd i(0, 1);
  Eigen::Matrix2cd m;
  m << c, -std::exp(i * lambda) * s,
       std::exp(i * phi) * s, std::exp(i * (phi + lambda)) * c;
  return m;
}

Eigen::Matrix2cd gate_matrix(const Op& op) {
  const cd i(0, 1);
  const double a0 = op.angles[0], a1 = op.angles[1], a2 = op.angles[2];
  switch (op.gate) {
    case Gate::U1: return u3_matrix(0, 0, a0);
    case Gate::U2: return u3_matrix(pi / 2, a0, a1);
    case Gate::U3: return u3_matrix(a0, a1, a2);
    case Gate::Rx: {
      Eigen::Matrix2cd m;
      m << std::cos(a0 / 2), -i * std::sin(a0 / 2),
           -i * std::sin(a0 / 2), std::cos(a0 / 2);
      return m;
    }
    case Gate::Ry: {
      Eigen::Matrix2cd m;
      m << std::cos(a0 / 2), -std::sin(a0 / 2),
           std::sin(a0 / 2), std::cos(a0 / 2);
      return m;
    }
    case Gate::Rz: {
      Eigen::Matrix2cd m;
      m << std::exp(-i * (a0 / 2)), cd(0), cd(0), std::exp(i * (a0 / 2));
      return m;
    }
    case Gate::H: {
      Eigen::Matrix2cd m;
      const double r = 1 / std::sqrt(2.0);
      m << r, r, r, -r;
      return m;
    }
    case Gate::X: {
      Eigen::Matrix2cd m;
      m << 0, 1, 1, 0;
      return m;
    }
    case Gate::Sdg: {
      Eigen::Matrix2cd m;
      m << cd(1), cd(0), cd(0), -i;
      return m;
    }
    default:
      throw std::invalid_argument("gate has no single-qubit matrix");
  }
}

Eigen::MatrixXcd embed_1q(const Eigen::Matrix2cd& m, int q, int n_qubits) {
  const long dim = 1L << n_qubits;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  const long bit = 1L << q;
  for (long j = 0; j < dim; ++j) {
    const int b = (j & bit) ? 1 : 0;
    const long j0 = j & ~bit, j1 = j | bit;
    out(j0, j) = m(0, b);
    out(j1, j) = m(1, b);
  }
  return out;
}

Eigen::MatrixXcd embed_2q(const Eigen::Matrix4cd& m, int q_low, int q_high, int n_qubits) {
  if (q_low == q_high) throw std::invalid_argument("embed_2q needs distinct qubits");
  const long dim = 1L << n_qubits;
  const long bl = 1L << q_low, bh = 1L << q_high;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (long j = 0; j < dim; ++j) {
    const int col = ((j & bl) ? 1 : 0) | ((j & bh) ? 2 : 0);
    const long base = j & ~(bl | bh);
    for (int row = 0; row < 4; ++row) {
      const long jr = base | ((row & 1) ? bl : 0) | ((row & 2) ? bh : 0);
      out(jr, j) += m(row, col);
    }
  }
  return out;
}

Eigen::MatrixXcd cnot_matrix(int control, int target, int n_qubits) {
  const long dim = 1L << n_qubits;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  const long cb = 1L << control, tb = 1L << target;
  for (long j = 0; j < dim; ++j) out((j & cb) ? (j ^ tb) : j, j) = 1.0;
  return out;
}

Eigen::MatrixXcd dense_unitary(const Circuit& c) {
  if (c.n_qubits() > 10) throw std::invalid_argument("dense_unitary capped at 10 qubits");
  if (c.has_measurement())
    throw std::invalid_argument("dense_unitary requires a measurement-free circuit");
  const long dim = 1L << c.n_qubits();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  for (const Op& op : c.ops()) {
    if (op.gate == Gate::Cnot)
      u = cnot_matrix(op.control(), op.target(), c.n_qubits()) * u;
    else
      u = embed_1q(gate_matrix(op), op.qubits[0], c.n_qubits()) * u;
  }
  return u;
}

Eigen::MatrixXcd pauli_matrix(const std::string& paulis) {
  const int n = static_cast<int>(paulis.size());
  if (n < 1 || n > 10) throw std::invalid_argument("pauli string length out of range");
  const cd i(0, 1);
  Eigen::Matrix2cd x, y, z, id;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  id.setIdentity();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  // Qubit k is bit k of the index, so it is the *right* factor in each kron.
  for (int k = 0; k < n; ++k) {
    Eigen::Matrix2cd f;
    switch (paulis[k]) {
      case 'I': f = id; break;
      case 'X': f = x; break;
      case 'Y': f = y; break;
      case 'Z': f = z; break;
      default: throw std::invalid_argument("pauli string may contain only IXYZ");
    }
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    next.block(0, 0, out.rows(), out.cols()) = f(0, 0) * out;
    next.block(0, out.cols(), out.rows(), out.cols()) = f(0, 1) * out;
    next.block(out.rows(), 0, out.rows(), out.cols()) = f(1, 0) * out;
    next.block(out.rows(), out.cols(), out.rows(), out.cols()) = f(1, 1) * out;
    out = next;
  }
  return out;
}

double phase_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const cd ip = (a.adjoint() * b).trace();
  const double n = std::abs(ip);
  const cd phase = (n > 1e-14) ? ip / n : cd(1, 0);
  return (a * phase - b).norm();
}

}  // namespace qdmft
