#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qdmft/circuit.hpp"
#include "qdmft/dense.hpp"

namespace qdmft {

// Pure n-qubit state, amplitudes indexed with qubit k at bit k.
class StateVector {
 public:
  explicit StateVector(int n_qubits);  // |0...0>
  static StateVector from_amplitudes(Eigen::VectorXcd amps);

  int n_qubits() const { return n_qubits_; }
  const Eigen::VectorXcd& amps() const { return amps_; }
  Eigen::VectorXcd& amps() { return amps_; }

  // In-place kernels. Ops must be measurement-free.
  void apply(const Op& op);
  void apply_matrix_1q(const Eigen::Matrix2cd& m, int q);
  void apply_cnot(int control, int target);

  double norm() const { return amps_.norm(); }

 private:
  int n_qubits_;
  Eigen::VectorXcd amps_;
};

StateVector run_statevector(const Circuit& c, const StateVector& initial);
StateVector run_statevector(const Circuit& c);

// <psi| P |psi> for a Pauli string (must be real up to rounding).
double expectation(const StateVector& psi, const std::string& paulis);

// Single-qubit Z or Y expectation estimated from `shots` Bernoulli draws of
// the +/- outcome; deterministic for a given seed.
double sample_expectation(const StateVector& psi, int qubit, Basis basis, long shots,
                          std::uint64_t seed);

// Shared helpers for the density engine and samplers.
namespace detail {
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
double binomial_estimate(double p, long shots, std::uint64_t seed);
}  // namespace detail

}  // namespace qdmft
