#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qdmft/circuit.hpp"
#include "qdmft/siam.hpp"
#include "qdmft/statevector.hpp"

namespace qdmft {

struct IslConfig {
  double cost_threshold = 1e-3;       // stop growing once 1 - |overlap|^2 dips below
  double sweep_improvement_tol = 0.01;  // relative gain that keeps a sweep cycle going
  double angle_eps = 1e-4;            // forwarded to circuit cleanup
  int max_layers = 50;
  std::uint64_t seed = 0;             // reserved for stochastic variants; growth is deterministic
};

struct IslStats {
  int layers = 0;
  double final_cost = 0;
  long n_single = 0;
  long n_two = 0;
  long depth = 0;
};

struct IslError : std::runtime_error {
  IslError(const std::string& msg, double cost, int layers)
      : std::runtime_error(msg), best_cost(cost), layers_tried(layers) {}
  double best_cost;
  int layers_tried;
};

// 1 - |<0|B_dag A|0>|^2, evaluated on the statevector engine.
double isl_cost(const Circuit& a, const Circuit& b_dag);

// Wootters entanglement of formation of a two-qubit state: concurrence from
// the square-rooted spectrum of rho (Y x Y) rho* (Y x Y), then the binary
// entropy of (1 + sqrt(1 - C^2)) / 2.
double entanglement_of_formation(const Eigen::Matrix4cd& rho);

// Picks the next (control, target) pair: the most entangled pair by
// entanglement of formation, or the two qubits with the largest <Z> when no
// pair is entangled. Never returns `previous`; ties break toward low indices.
std::pair<int, int> select_pair(const StateVector& psi,
                                const std::optional<std::pair<int, int>>& previous);

using CostFn = std::function<double(const std::vector<Op>&)>;
using UpdateMonitor = std::function<void(double before, double after)>;

// Closed-form coordinate descent on rotation angles: the cost is a sinusoid
// in each angle, pinned by probes at {0, +pi/2, -pi/2} and jumped straight to
// its minimum. Sweeps all rotation gates until the relative gain of a sweep
// drops below improvement_tol; every accepted update is non-increasing.
// Returns the final cost. `monitor`, when set, sees each update's cost pair.
double rotosolve(std::vector<Op>& ops, const CostFn& cost, double improvement_tol,
                 const UpdateMonitor& monitor = {});

// Rotosolve extended over the rotation axis: for each listed gate the best
// (axis, angle) among {x, y, z} is chosen from seven probe evaluations.
double rotoselect(std::vector<Op>& ops, const std::vector<std::size_t>& gates,
                  const CostFn& cost, double improvement_tol,
                  const UpdateMonitor& monitor = {});

// Grows an inverse ansatz B_dag one thinly-dressed CNOT layer at a time
// (pair selection, zeroed z rotations, rotoselect on the new layer, rotosolve
// over everything, cleanup) until the cost clears cfg.cost_threshold, then
// returns B = inverse(B_dag). A placement that fails to lower the cost is
// reverted and the next-ranked pair is tried, so every layer in the result
// pulls its weight; throws IslError when max_layers is exhausted or no
// placement helps.
Circuit isl_recompile(const Circuit& a, const IslConfig& cfg, IslStats* stats = nullptr,
                      const UpdateMonitor& monitor = {});

// Recompiled interferometer prefixes for n = 1..n_steps Trotter steps:
// element n-1 approximates state prep + ancilla dressing + n steps. Each
// element is rebuilt from the previous one plus a single exact step, so the
// circuit actually simulated never grows with n. `prep` overrides the exact
// ground-state preparation (4 work qubits).
std::vector<Circuit> incremental_chain(const SiamParams& p, double dt, int n_steps,
                                       const IslConfig& cfg, const Circuit* prep = nullptr,
                                       std::vector<IslStats>* stats = nullptr);

}  // namespace qdmft
