#pragma once

#include <Eigen/Dense>

#include "qdmft/circuit.hpp"

namespace qdmft {

// Circuit over the hardware basis that maps |0...0> to the given state
// (up to global phase). Built by disentangling one qubit at a time with
// multiplexed RZ/RY rotations and inverting the result; multiplexors with
// redundant controls collapse, so simple targets give short circuits.
// The amplitude vector must have unit norm and power-of-two length.
Circuit state_prep_circuit(const Eigen::VectorXcd& amplitudes);

}  // namespace qdmft
