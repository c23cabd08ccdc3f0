#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qdmft/circuit.hpp"
#include "qdmft/kraus.hpp"
#include "qdmft/noise.hpp"
#include "qdmft/statevector.hpp"

namespace qdmft {

// Mixed n-qubit state, capped at 10 qubits. Same bit convention as
// StateVector: qubit k is index bit k.
class DensityMatrix {
 public:
  explicit DensityMatrix(int n_qubits);  // |0...0><0...0|
  static DensityMatrix from_statevector(const StateVector& psi);
  // Validates hermiticity, unit trace, and eigenvalue floor -1e-9.
  static DensityMatrix from_matrix(Eigen::MatrixXcd rho);

  int n_qubits() const { return n_qubits_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }

  void apply_unitary(const Op& op);                                // ideal gate conjugation
  void apply_channel(const KrausChannel& ch, int q);               // 1q channel
  void apply_channel(const KrausChannel& ch, int q_low, int q_high);  // 2q channel

  double trace_real() const { return rho_.trace().real(); }

 private:
  void left_mult_1q(const Eigen::Matrix2cd& m, int q, Eigen::MatrixXcd& rho) const;
  void right_mult_dag_1q(const Eigen::Matrix2cd& m, int q, Eigen::MatrixXcd& rho) const;
  void left_mult_2q(const Eigen::Matrix4cd& m, int ql, int qh, Eigen::MatrixXcd& rho) const;
  void right_mult_dag_2q(const Eigen::Matrix4cd& m, int ql, int qh, Eigen::MatrixXcd& rho) const;

  int n_qubits_;
  Eigen::MatrixXcd rho_;
};

// Runs a lowered circuit (U1/U2/U3/CNOT/Measure only) under the noise model:
// each gate is applied ideally and followed by its op_channel; measurements
// apply their noise channel and then dephase the qubit in the measured basis.
DensityMatrix run_density(const Circuit& c, const DensityMatrix& initial,
                          const NoiseParams& params);
DensityMatrix run_density(const Circuit& c, const NoiseParams& params);

double expectation(const DensityMatrix& rho, const std::string& paulis);
double sample_expectation(const DensityMatrix& rho, int qubit, Basis basis, long shots,
                          std::uint64_t seed);

// Reduced 4x4 state of a qubit pair; local index = bit(q_low) + 2*bit(q_high).
Eigen::Matrix4cd partial_trace(const DensityMatrix& rho, int q_low, int q_high);
Eigen::Matrix4cd partial_trace(const StateVector& psi, int q_low, int q_high);

}  // namespace qdmft
