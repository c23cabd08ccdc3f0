#include "qdmft/transpile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qdmft {

using std::numbers::pi;

Circuit lower_to_basis(const Circuit& c) {
  Circuit out(c.n_qubits());
  for (const Op& op : c.ops()) {
    const int q = op.qubits[0];
    const double a = op.angles[0];
    switch (op.gate) {
      case Gate::H: out.u2(q, 0, pi); break;
      case Gate::X: out.u3(q, pi, 0, pi); break;
      case Gate::Sdg: out.u1(q, -pi / 2); break;
      case Gate::Rz: out.u1(q, a); break;
      case Gate::Rx: out.u3(q, a, -pi / 2, pi / 2); break;
      case Gate::Ry: out.u3(q, a, 0, 0); break;
      default: out.append(op); break;
    }
  }
  return out;
}

Circuit inverse(const Circuit& c) {
  if (c.has_measurement()) throw std::invalid_argument("cannot invert a measured circuit");
  Circuit out(c.n_qubits());
  for (auto it = c.ops().rbegin(); it != c.ops().rend(); ++it) {
    const Op& op = *it;
    const int q = op.qubits[0];
    switch (op.gate) {
      case Gate::U1: out.u1(q, -op.angles[0]); break;
      case Gate::U2: out.u3(q, -pi / 2, -op.angles[1], -op.angles[0]); break;
      case Gate::U3: out.u3(q, -op.angles[0], -op.angles[2], -op.angles[1]); break;
      case Gate::Rx: out.rx(q, -op.angles[0]); break;
      case Gate::Ry: out.ry(q, -op.angles[0]); break;
      case Gate::Rz: out.rz(q, -op.angles[0]); break;
      case Gate::Sdg: out.u1(q, pi / 2); break;
      default: out.append(op); break;  // CNOT, H, X are involutions
    }
  }
  return out;
}

namespace {

bool is_axis_rotation(Gate g) {
  return g == Gate::Rx || g == Gate::Ry || g == Gate::Rz || g == Gate::U1;
}

bool self_inverse(Gate g) { return g == Gate::H || g == Gate::X || g == Gate::Cnot; }

// Angle folded into (-pi, pi].
double fold_angle(double a) {
  a = std::remainder(a, 2 * pi);
  if (a <= -pi) a += 2 * pi;
  return a;
}

bool same_qubits(const Op& a, const Op& b) {
  return a.qubits[0] == b.qubits[0] && a.qubits[1] == b.qubits[1];
}

bool touches(const Op& op, int q) {
  return op.qubits[0] == q || (arity(op.gate) == 2 && op.qubits[1] == q);
}

// Index of the previous op acting on any qubit of ops[i], or -1.
int prev_on_qubits(const std::vector<Op>& ops, int i) {
  for (int j = i - 1; j >= 0; --j) {
    if (touches(ops[j], ops[i].qubits[0])) return j;
    if (arity(ops[i].gate) == 2 && touches(ops[j], ops[i].qubits[1])) return j;
  }
  return -1;
}

}  // namespace

Circuit cleanup_transpile(const Circuit& c, double angle_eps) {
  if (angle_eps < 0) throw std::invalid_argument("angle_eps must be nonnegative");
  std::vector<Op> ops = c.ops();
  bool changed = true;
  while (changed) {
    changed = false;
    // Merge adjacent same-kind rotations.
    for (int i = 0; i < static_cast<int>(ops.size()) && !changed; ++i) {
      if (!is_axis_rotation(ops[i].gate)) continue;
      const int j = prev_on_qubits(ops, i);
      if (j >= 0 && ops[j].gate == ops[i].gate && same_qubits(ops[j], ops[i])) {
        ops[j].angles[0] = fold_angle(ops[j].angles[0] + ops[i].angles[0]);
        ops.erase(ops.begin() + i);
        changed = true;
      }
    }
    if (changed) continue;
    // Drop near-identity rotations.
    for (int i = 0; i < static_cast<int>(ops.size()) && !changed; ++i) {
      if (is_axis_rotation(ops[i].gate) && std::abs(fold_angle(ops[i].angles[0])) < angle_eps) {
        ops.erase(ops.begin() + i);
        changed = true;
      }
    }
    if (changed) continue;
    // Cancel adjacent self-inverse pairs.
    for (int i = 0; i < static_cast<int>(ops.size()) && !changed; ++i) {
      if (!self_inverse(ops[i].gate)) continue;
      const int j = prev_on_qubits(ops, i);
      if (j >= 0 && ops[j].gate == ops[i].gate && same_qubits(ops[j], ops[i])) {
        ops.erase(ops.begin() + i);
        ops.erase(ops.begin() + j);
        changed = true;
      }
    }
  }
  Circuit out(c.n_qubits());
  for (const Op& op : ops) out.append(op);
  return out;
}

GateCounts gate_counts(const Circuit& c) {
  const Circuit lowered = lower_to_basis(c);
  GateCounts gc;
  std::vector<long> qubit_depth(lowered.n_qubits(), 0);
  for (const Op& op : lowered.ops()) {
    if (op.gate == Gate::Measure) continue;
    long d = qubit_depth[op.qubits[0]];
    if (arity(op.gate) == 2) {
      ++gc.n_two;
      d = std::max(d, qubit_depth[op.qubits[1]]);
      qubit_depth[op.qubits[1]] = d + 1;
    } else {
      ++gc.n_single;
    }
    qubit_depth[op.qubits[0]] = d + 1;
    gc.depth = std::max(gc.depth, d + 1);
  }
  return gc;
}

}  // namespace qdmft
