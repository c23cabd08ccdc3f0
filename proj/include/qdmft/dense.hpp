#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "qdmft/circuit.hpp"

namespace qdmft {

using cd = std::complex<double>;

// 2x2 matrix of a single-qubit gate op (throws on CNOT/Measure).
Eigen::Matrix2cd gate_matrix(const Op& op);

Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda);

// Embeds a one-qubit operator at qubit q of an n-qubit register.
Eigen::MatrixXcd embed_1q(const Eigen::Matrix2cd& m, int q, int n_qubits);

// Embeds a two-qubit operator given on (q_low = index bit 0, q_high = bit 1).
Eigen::MatrixXcd embed_2q(const Eigen::Matrix4cd& m, int q_low, int q_high, int n_qubits);

Eigen::MatrixXcd cnot_matrix(int control, int target, int n_qubits);

// Full unitary of a measurement-free circuit, ops multiplied in order.
// Reference-path evaluator: O(4^n) memory, capped at 10 qubits.
Eigen::MatrixXcd dense_unitary(const Circuit& c);

// Dense matrix of a Pauli string; string index k addresses qubit k.
Eigen::MatrixXcd pauli_matrix(const std::string& paulis);

// Frobenius distance minimized over a global phase, for equivalence checks.
double phase_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace qdmft
