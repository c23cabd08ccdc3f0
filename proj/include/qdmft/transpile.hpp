#pragma once

#include "qdmft/circuit.hpp"

namespace qdmft {

struct GateCounts {
  long n_single = 0;
  long n_two = 0;
  long depth = 0;
};

// Rewrites convenience gates into the U1/U2/U3/CNOT/Measure basis. Exact up
// to global phase: H -> U2(0,pi), X -> U3(pi,0,pi), SDG -> U1(-pi/2),
// RZ(t) -> U1(t), RX(t) -> U3(t,-pi/2,pi/2), RY(t) -> U3(t,0,0).
Circuit lower_to_basis(const Circuit& c);

// Reversed op order with each gate replaced by its exact inverse. Rejects
// circuits containing measurements.
Circuit inverse(const Circuit& c);

// Peephole cleanup to a fixpoint: merges adjacent same-kind rotations on the
// same qubit, drops rotations whose angle is < angle_eps away from a multiple
// of 2*pi, and cancels adjacent self-inverse pairs (H H, X X, CNOT CNOT).
// Idempotent; perturbs the unitary by at most ~n_dropped * angle_eps.
Circuit cleanup_transpile(const Circuit& c, double angle_eps = 1e-4);

// Counts after lowering; measurements are excluded. Depth is the longest
// qubit-dependency chain.
GateCounts gate_counts(const Circuit& c);

}  // namespace qdmft
