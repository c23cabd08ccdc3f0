#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qdmft/circuit.hpp"

namespace qdmft {

// Impurity-plus-bath parameters, energies in units of the hopping scale
// t_star. Everything downstream assumes the particle-hole symmetric point;
// use half_filled() unless you are only carrying the numbers around.
struct SiamParams {
  double u = 0;
  double v = 1;
  double mu = 0;
  double eps_c = 0;
  double t_star = 1;

  static SiamParams half_filled(double u, double v, double t_star = 1);
  bool is_half_filled() const;
};

struct PauliTerm {
  double coeff = 0;
  std::string paulis;  // one letter per qubit, position = qubit index
};

struct PauliHamiltonian {
  std::vector<PauliTerm> terms;
};

// Work-register layout: 0 impurity-up, 1 bath-up, 2 impurity-down,
// 3 bath-down. Five terms: (u/4) Z0 Z2 plus (v/2)(XX + YY) on each spin
// sector. Constant offsets are dropped; the response function we measure
// never sees them.
PauliHamiltonian jw_hamiltonian(const SiamParams& p);

// Sum of embedded Pauli strings, 2^n x 2^n.
Eigen::MatrixXcd dense_hamiltonian(const PauliHamiltonian& h);

struct GroundState {
  double energy = 0;
  Eigen::VectorXcd amplitudes;
};

// Lowest eigenpair of the four-qubit Hamiltonian. A degenerate ground space
// is resolved by projecting the lowest-index basis vector with support in it;
// the global phase makes the largest-magnitude amplitude real positive.
GroundState exact_ground_state(const SiamParams& p);

// One first-order product-formula slice of exp(-i H dt) on the 4 work
// qubits. Term order: ZZ, up-spin hop, down-spin hop. The ZZ factor is
// CNOT / RZ(u dt / 2) / CNOT; each hop exp(-i (v dt / 2)(XX + YY)) is the
// two-CNOT form obtained by rotating ZZ into YY with RX(pi/2) conjugation:
//   RX(pi/2) on both, CNOT, RX(v dt) on control and RZ(v dt) on target,
//   CNOT, RX(-pi/2) on both.
Circuit trotter_step_circuit(const SiamParams& p, double dt);

struct VqeResult {
  Circuit circuit;
  double energy;
};

// Hardware-style ansatz (an RY rotation per qubit, then a CNOT ladder,
// repeated `layers` times, with a trailing RY layer) minimized by closed-form
// sinusoidal coordinate descent against <H> on the statevector engine.
// A few random restarts are derived from `seed`; sweeps stop below 1e-6
// relative improvement. The returned energy can never undershoot the true
// ground energy.
VqeResult vqe_ground_state(const SiamParams& p, int layers, std::uint64_t seed);

}  // namespace qdmft
