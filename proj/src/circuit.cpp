#include "qdmft/circuit.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qdmft {

const char* gate_name(Gate g) {
  switch (g) {
    case Gate::U1: return "U1";
    case Gate::U2: return "U2";
    case Gate::U3: return "U3";
    case Gate::Cnot: return "CNOT";
    case Gate::Rx: return "RX";
    case Gate::Ry: return "RY";
    case Gate::Rz: return "RZ";
    case Gate::H: return "H";
    case Gate::X: return "X";
    case Gate::Sdg: return "SDG";
    case Gate::Measure: return "MEASURE";
  }
  return "?";
}

Circuit::Circuit(int n_qubits) : n_qubits_(n_qubits), measured_(n_qubits, false) {
  if (n_qubits < 1) throw std::invalid_argument("circuit needs at least one qubit");
}

void Circuit::check_qubit(int q) const {
  if (q < 0 || q >= n_qubits_) throw std::invalid_argument("qubit index out of range");
  if (measured_[q]) throw std::invalid_argument("op appended after measurement");
}

bool Circuit::measured(int q) const {
  if (q < 0 || q >= n_qubits_) throw std::invalid_argument("qubit index out of range");
  return measured_[q];
}

bool Circuit::has_measurement() const {
  for (bool m : measured_)
    if (m) return true;
  return false;
}

Circuit& Circuit::append(const Op& op) {
  check_qubit(op.qubits[0]);
  if (arity(op.gate) == 2) {
    check_qubit(op.qubits[1]);
    if (op.qubits[0] == op.qubits[1])
      throw std::invalid_argument("two-qubit op needs distinct qubits");
  }
  for (double a : op.angles)
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite gate angle");
  ops_.push_back(op);
  if (op.gate == Gate::Measure) measured_[op.qubits[0]] = true;
  return *this;
}

Circuit& Circuit::append(const Circuit& other, int offset) {
  for (Op op : other.ops_) {
    op.qubits[0] += offset;
    if (arity(op.gate) == 2) op.qubits[1] += offset;
    append(op);
  }
  return *this;
}

Circuit& Circuit::u1(int q, double lambda) {
  return append({Gate::U1, {q, -1}, {lambda, 0, 0}});
}
Circuit& Circuit::u2(int q, double phi, double lambda) {
  return append({Gate::U2, {q, -1}, {phi, lambda, 0}});
}
Circuit& Circuit::u3(int q, double theta, double phi, double lambda) {
  return append({Gate::U3, {q, -1}, {theta, phi, lambda}});
}
Circuit& Circuit::cnot(int control, int target) {
  return append({Gate::Cnot, {control, target}, {0, 0, 0}});
}
Circuit& Circuit::rx(int q, double theta) { return append({Gate::Rx, {q, -1}, {theta, 0, 0}}); }
Circuit& Circuit::ry(int q, double theta) { return append({Gate::Ry, {q, -1}, {theta, 0, 0}}); }
Circuit& Circuit::rz(int q, double theta) { return append({Gate::Rz, {q, -1}, {theta, 0, 0}}); }
Circuit& Circuit::h(int q) { return append({Gate::H, {q, -1}, {0, 0, 0}}); }
Circuit& Circuit::x(int q) { return append({Gate::X, {q, -1}, {0, 0, 0}}); }
Circuit& Circuit::sdg(int q) { return append({Gate::Sdg, {q, -1}, {0, 0, 0}}); }
Circuit& Circuit::measure(int q, Basis basis) {
  Op op{Gate::Measure, {q, -1}, {0, 0, 0}};
  op.basis = basis;
  return append(op);
}

Circuit strip_measurements(const Circuit& c) {
  Circuit out(c.n_qubits());
  for (const Op& op : c.ops())
    if (op.gate != Gate::Measure) out.append(op);
  return out;
}

std::string to_text(const Circuit& c) {
  std::ostringstream os;
  os.precision(17);
  os << "QUBITS " << c.n_qubits() << "\n";
  for (const Op& op : c.ops()) {
    os << gate_name(op.gate) << ' ' << op.qubits[0];
    if (arity(op.gate) == 2) os << ',' << op.qubits[1];
    for (int i = 0; i < angle_count(op.gate); ++i) os << ' ' << op.angles[i];
    if (op.gate == Gate::Measure) os << ' ' << (op.basis == Basis::Z ? 'Z' : 'Y');
    os << "\n";
  }
  return os.str();
}

namespace {

Gate parse_gate(const std::string& name) {
  for (Gate g : {Gate::U1, Gate::U2, Gate::U3, Gate::Cnot, Gate::Rx, Gate::Ry, Gate::Rz,
                 Gate::H, Gate::X, Gate::Sdg, Gate::Measure})
    if (name == gate_name(g)) return g;
  throw std::invalid_argument("unknown gate name: " + name);
}

}  // namespace

Circuit from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int n_qubits = -1;
  std::vector<Op> pending;
  int max_q = -1;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head[0] == '#') continue;
    if (head == "QUBITS") {
      if (!(ls >> n_qubits)) throw std::invalid_argument("bad QUBITS header");
      continue;
    }
    Op op;
    op.gate = parse_gate(head);
    std::string qs;
    if (!(ls >> qs)) throw std::invalid_argument("missing qubit field: " + line);
    if (arity(op.gate) == 2) {
      auto comma = qs.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("two-qubit op needs q0,q1");
      op.qubits[0] = std::stoi(qs.substr(0, comma));
      op.qubits[1] = std::stoi(qs.substr(comma + 1));
    } else {
      op.qubits[0] = std::stoi(qs);
    }
    for (int i = 0; i < angle_count(op.gate); ++i)
      if (!(ls >> op.angles[i])) throw std::invalid_argument("missing angle: " + line);
    if (op.gate == Gate::Measure) {
      std::string b;
      if (!(ls >> b) || (b != "Z" && b != "Y"))
        throw std::invalid_argument("measurement needs basis Z or Y");
      op.basis = (b == "Z") ? Basis::Z : Basis::Y;
    }
    max_q = std::max({max_q, op.qubits[0], op.qubits[1]});
    pending.push_back(op);
  }
  if (n_qubits < 0) n_qubits = max_q + 1;
  if (n_qubits < 1) throw std::invalid_argument("empty circuit text without QUBITS header");
  Circuit c(n_qubits);
  for (const Op& op : pending) c.append(op);
  return c;
}

std::ostream& operator<<(std::ostream& os, const Circuit& c) { return os << to_text(c); }

}  // namespace qdmft
