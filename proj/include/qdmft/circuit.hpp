#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qdmft {

// Gate vocabulary. U1/U2/U3/CNOT/Measure is the hardware basis; the rest are
// convenience gates rewritten exactly by lower_to_basis().
enum class Gate : std::uint8_t {
  U1,
  U2,
  U3,
  Cnot,
  Rx,
  Ry,
  Rz,
  H,
  X,
  Sdg,
  Measure,
};

enum class Basis : std::uint8_t { Z, Y };

constexpr int arity(Gate g) { return g == Gate::Cnot ? 2 : 1; }

constexpr int angle_count(Gate g) {
  switch (g) {
    case Gate::U1:
    case Gate::Rx:
    case Gate::Ry:
    case Gate::Rz:
      return 1;
    case Gate::U2:
      return 2;
    case Gate::U3:
      return 3;
    default:
      return 0;
  }
}

const char* gate_name(Gate g);

struct Op {
  Gate gate = Gate::U1;
  std::array<int, 2> qubits{-1, -1};    // qubits[1] is the CNOT target
  std::array<double, 3> angles{0, 0, 0};
  Basis basis = Basis::Z;               // Measure only

  int qubit() const { return qubits[0]; }
  int control() const { return qubits[0]; }
  int target() const { return qubits[1]; }
};

// Ordered op list on a fixed register. Qubit k is the k-th least significant
// bit of a basis-state index. Builders validate on append; transpile passes
// return rewritten copies instead of mutating.
class Circuit {
 public:
  explicit Circuit(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  const std::vector<Op>& ops() const { return ops_; }
  std::size_t size() const { return ops_.size(); }
  bool measured(int q) const;
  bool has_measurement() const;

  Circuit& u1(int q, double lambda);
  Circuit& u2(int q, double phi, double lambda);
  Circuit& u3(int q, double theta, double phi, double lambda);
  Circuit& cnot(int control, int target);
  Circuit& rx(int q, double theta);
  Circuit& ry(int q, double theta);
  Circuit& rz(int q, double theta);
  Circuit& h(int q);
  Circuit& x(int q);
  Circuit& sdg(int q);
  Circuit& measure(int q, Basis basis = Basis::Z);

  Circuit& append(const Op& op);
  // Splices another circuit, shifting its qubit indices by `offset`.
  Circuit& append(const Circuit& other, int offset = 0);

 private:
  void check_qubit(int q) const;

  int n_qubits_;
  std::vector<Op> ops_;
  std::vector<bool> measured_;
};

// Same ops without the measurements (for statevector execution).
Circuit strip_measurements(const Circuit& c);

// Text form: "QUBITS n" header, then one op per line, "GATE q[,q2] angles...";
// angles are decimal radians, measurements carry their basis letter.
std::string to_text(const Circuit& c);
Circuit from_text(const std::string& text);
std::ostream& operator<<(std::ostream& os, const Circuit& c);

}  // namespace qdmft
