#include "qdmft/isl.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>

#include "qdmft/dense.hpp"
#include "qdmft/density.hpp"
#include "qdmft/greens.hpp"
#include "qdmft/stateprep.hpp"
#include "qdmft/transpile.hpp"

namespace qdmft {

namespace {

double overlap_cost(const StateVector& target, const std::vector<Op>& b_dag) {
  StateVector psi = target;
  for (const Op& op : b_dag) psi.apply(op);
  // rounding can push |amp|^2 a hair past 1
  return std::max(0.0, 1.0 - std::norm(psi.amps()(0)));
}

bool is_rotation(Gate g) { return g == Gate::Rx || g == Gate::Ry || g == Gate::Rz; }

// Sinusoid through C(0), C(+pi/2), C(-pi/2); returns the minimizing angle.
double sinusoid_argmin(double c0, double cp, double cm) {
  const double a = (cp + cm) / 2;
  const double cs = (cp - cm) / 2;
  const double cc = c0 - a;
  if (std::hypot(cc, cs) < 1e-15) return 0.0;
  return std::atan2(-cs, -cc);
}

}  // namespace

double isl_cost(const Circuit& a, const Circuit& b_dag) {
  if (a.n_qubits() != b_dag.n_qubits())
    throw std::invalid_argument("circuits act on different registers");
  if (a.has_measurement() || b_dag.has_measurement())
    throw std::invalid_argument("cost is defined for measurement-free circuits");
  return overlap_cost(run_statevector(a), b_dag.ops());
}

double entanglement_of_formation(const Eigen::Matrix4cd& rho) {
  if ((rho - rho.adjoint()).norm() > 1e-8)
    throw std::invalid_argument("state matrix must be Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-6)
    throw std::invalid_argument("state matrix must have unit trace");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> chk(rho);
    if (chk.eigenvalues().minCoeff() < -1e-7)
      throw std::invalid_argument("state matrix is not positive semidefinite");
  }

  static const Eigen::Matrix4cd yy = pauli_matrix("YY");
  const Eigen::Matrix4cd r = rho * yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(r);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  std::sort(lam.begin(), lam.end(), std::greater<>());
  const double conc = std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
  if (conc <= 0) return 0.0;
  const double x = (1 + std::sqrt(1 - conc * conc)) / 2;
  auto h2 = [](double p) {
    if (p <= 0 || p >= 1) return 0.0;
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
  };
  return h2(x);
}

std::pair<int, int> select_pair(const StateVector& psi,
                                const std::optional<std::pair<int, int>>& previous) {
  const int n = psi.n_qubits();
  if (n < 2) throw std::invalid_argument("need at least two qubits");
  auto same = [&](int a, int b) {
    return previous && ((previous->first == a && previous->second == b) ||
                        (previous->first == b && previous->second == a));
  };

  double best_e = 0;
  int bi = -1, bj = -1;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double e = entanglement_of_formation(partial_trace(psi, i, j));
      if (e > best_e + 1e-15) {
        best_e = e;
        bi = i;
        bj = j;
      }
    }
  if (best_e >= 1e-9 && !same(bi, bj)) return {bi, bj};

  // No usable entanglement signal: rank pairs by their combined <Z>.
  std::vector<double> z(n);
  for (int q = 0; q < n; ++q) {
    std::string s(n, 'I');
    s[q] = 'Z';
    z[q] = expectation(psi, s);
  }
  int fi = 0, fj = 1;
  double best_sum = -1e300;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (same(i, j)) continue;
      const double sum = z[i] + z[j];
      if (sum > best_sum + 1e-15) {
        best_sum = sum;
        fi = i;
        fj = j;
      }
    }
  return {fi, fj};
}

namespace {

// Layer placements in retry order: the standard selection first, then every
// remaining pair, entanglement-ranked with the <Z> ordering where that signal
// is flat. Growth retries down this list when a placement fails to lower the
// cost, which happens whenever the state holds no amplitude that a dressed
// CNOT on the chosen pair could steer toward |0...0> (the pairwise
// entanglement ranking knows nothing about that).
std::vector<std::pair<int, int>> candidate_pairs(
    const StateVector& psi, const std::optional<std::pair<int, int>>& previous) {
  const int n = psi.n_qubits();
  const auto head = select_pair(psi, previous);
  std::vector<double> z(n);
  for (int q = 0; q < n; ++q) {
    std::string s(n, 'I');
    s[q] = 'Z';
    z[q] = expectation(psi, s);
  }
  struct Cand {
    int i, j;
    double e, zsum;
  };
  std::vector<Cand> rest;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (i == head.first && j == head.second) continue;
      if (previous && ((previous->first == i && previous->second == j) ||
                       (previous->first == j && previous->second == i)))
        continue;
      rest.push_back(
          {i, j, entanglement_of_formation(partial_trace(psi, i, j)), z[i] + z[j]});
    }
  std::stable_sort(rest.begin(), rest.end(), [](const Cand& a, const Cand& b) {
    const bool ae = a.e >= 1e-9, be = b.e >= 1e-9;
    if (ae != be) return ae;
    if (ae && a.e != b.e) return a.e > b.e;
    return a.zsum > b.zsum;
  });
  std::vector<std::pair<int, int>> out{head};
  for (const Cand& c : rest) out.emplace_back(c.i, c.j);
  return out;
}

// A CNOT permutes basis states and never touches the |0...0> amplitude, so
// inserting one is free in cost (A1) terms. That makes chains of bare CNOTs
// the escape hatch when growth stalls: a residual component lying three or
// more bit flips from |0...0> is beyond the reach of any unitary on a single
// qubit pair, but a short CNOT chain can carry it into range of one dressed
// layer. Each lead names the chain, the harvesting pair, and the amplitude at
// stake; callers verify leads in order until one actually lowers the cost.
struct EscapeLead {
  std::vector<Op> bridges;
  std::pair<int, int> pair;
  double amp;
};

std::vector<EscapeLead> escape_leads(const StateVector& psi, int max_bridges) {
  const int n = psi.n_qubits();
  const long dim = 1L << n;

  struct Move {
    int control, target;
  };
  std::vector<Move> moves;
  for (int c = 0; c < n; ++c)
    for (int t = 0; t < n; ++t)
      if (c != t) moves.push_back({c, t});

  std::vector<EscapeLead> leads;
  for (long idx = 1; idx < dim; ++idx) {
    const double amp = std::abs(psi.amps()(idx));
    if (amp < 1e-4) continue;

    // Shortest CNOT chain taking this component to Hamming weight <= 2.
    std::vector<int> dist(dim, -1), via_move(dim, -1);
    std::vector<long> via_from(dim, -1);
    dist[idx] = 0;
    std::vector<long> frontier{idx};
    long goal = std::popcount(static_cast<unsigned long>(idx)) <= 2 ? idx : -1;
    for (int depth = 0; depth < max_bridges && goal < 0 && !frontier.empty(); ++depth) {
      std::vector<long> next;
      for (long cur : frontier) {
        for (std::size_t m = 0; m < moves.size() && goal < 0; ++m) {
          if (!(cur & (1L << moves[m].control))) continue;
          const long to = cur ^ (1L << moves[m].target);
          if (dist[to] >= 0) continue;
          dist[to] = dist[cur] + 1;
          via_move[to] = static_cast<int>(m);
          via_from[to] = cur;
          if (std::popcount(static_cast<unsigned long>(to)) <= 2) goal = to;
          next.push_back(to);
        }
        if (goal >= 0) break;
      }
      frontier = std::move(next);
    }
    if (goal < 0) continue;

    EscapeLead lead;
    lead.amp = amp;
    for (long cur = goal; cur != idx; cur = via_from[cur]) {
      Op cx;
      cx.gate = Gate::Cnot;
      cx.qubits = {moves[via_move[cur]].control, moves[via_move[cur]].target};
      lead.bridges.push_back(cx);
    }
    std::reverse(lead.bridges.begin(), lead.bridges.end());
    const int lo = std::countr_zero(static_cast<unsigned long>(goal));
    const int hi = 63 - std::countl_zero(static_cast<unsigned long>(goal));
    lead.pair = {lo, hi == lo ? (lo == 0 ? 1 : 0) : hi};
    if (lead.pair.first > lead.pair.second) std::swap(lead.pair.first, lead.pair.second);
    leads.push_back(std::move(lead));
  }
  // Merit: recoverable weight per gate spent. amp^2 is the cost drop when the
  // component is captured; the chain plus the dressed CNOT is the price.
  std::stable_sort(leads.begin(), leads.end(), [](const EscapeLead& a, const EscapeLead& b) {
    return a.amp * a.amp / static_cast<double>(a.bridges.size() + 1) >
           b.amp * b.amp / static_cast<double>(b.bridges.size() + 1);
  });
  return leads;
}

// One closed-form angle update; never accepts a worse cost.
double update_angle(std::vector<Op>& ops, std::size_t i, double current,
                    const CostFn& cost, const UpdateMonitor& monitor) {
  const double saved = ops[i].angles[0];
  ops[i].angles[0] = 0;
  const double c0 = cost(ops);
  ops[i].angles[0] = M_PI / 2;
  const double cp = cost(ops);
  ops[i].angles[0] = -M_PI / 2;
  const double cm = cost(ops);
  ops[i].angles[0] = sinusoid_argmin(c0, cp, cm);
  const double after = cost(ops);
  if (after > current) {  // numerically flat; keep what we had
    ops[i].angles[0] = saved;
    return current;
  }
  if (monitor) monitor(current, after);
  return after;
}

}  // namespace

double rotosolve(std::vector<Op>& ops, const CostFn& cost, double improvement_tol,
                 const UpdateMonitor& monitor) {
  double current = cost(ops);
  for (int sweep = 0; sweep < 200; ++sweep) {
    const double before = current;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (!is_rotation(ops[i].gate)) continue;
      current = update_angle(ops, i, current, cost, monitor);
    }
    if (current < 1e-14) break;
    if (before - current < improvement_tol * std::max(before, 1e-300)) break;
  }
  return current;
}

double rotoselect(std::vector<Op>& ops, const std::vector<std::size_t>& gates,
                  const CostFn& cost, double improvement_tol,
                  const UpdateMonitor& monitor) {
  double current = cost(ops);
  for (int cycle = 0; cycle < 200; ++cycle) {
    const double before = current;
    for (std::size_t i : gates) {
      if (i >= ops.size() || !is_rotation(ops[i].gate)) continue;
      const Gate saved_gate = ops[i].gate;
      const double saved_angle = ops[i].angles[0];

      ops[i].angles[0] = 0;
      const double c0 = cost(ops);  // axis-independent at angle zero
      Gate best_gate = saved_gate;
      double best_angle = saved_angle, best_pred = current;
      for (Gate axis : {Gate::Rx, Gate::Ry, Gate::Rz}) {
        ops[i].gate = axis;
        ops[i].angles[0] = M_PI / 2;
        const double cp = cost(ops);
        ops[i].angles[0] = -M_PI / 2;
        const double cm = cost(ops);
        const double a = (cp + cm) / 2;
        const double pred = a - std::hypot(c0 - a, (cp - cm) / 2);
        if (pred < best_pred - 1e-15) {
          best_pred = pred;
          best_gate = axis;
          best_angle = sinusoid_argmin(c0, cp, cm);
        }
      }
      ops[i].gate = best_gate;
      ops[i].angles[0] = best_angle;
      const double after = cost(ops);
      if (after > current) {
        ops[i].gate = saved_gate;
        ops[i].angles[0] = saved_angle;
      } else {
        if (monitor) monitor(current, after);
        current = after;
      }
    }
    if (current < 1e-14) break;
    if (before - current < improvement_tol * std::max(before, 1e-300)) break;
  }
  return current;
}

Circuit isl_recompile(const Circuit& a, const IslConfig& cfg, IslStats* stats,
                      const UpdateMonitor& monitor) {
  if (a.has_measurement())
    throw std::invalid_argument("recompilation target must be measurement-free");
  if (cfg.cost_threshold <= 0 || cfg.cost_threshold >= 1)
    throw std::invalid_argument("cost threshold must lie in (0,1)");
  if (cfg.max_layers < 1) throw std::invalid_argument("max_layers must be positive");

  const StateVector target = run_statevector(a);
  const CostFn cost = [&target](const std::vector<Op>& ops) {
    return overlap_cost(target, ops);
  };

  std::vector<Op> b_dag;
  double current = cost(b_dag);
  double best_seen = current;
  std::optional<std::pair<int, int>> previous;
  int grown = 0;

  auto rz0 = [](int q) {
    Op op;
    op.gate = Gate::Rz;
    op.qubits = {q, -1};
    return op;
  };
  // Appends a dressed layer on `pair`, optimizes, keeps it only when the cost
  // drops by a meaningful margin. Insignificant wins are reverted along with
  // outright failures: a layer whose rotations all optimize to zero would be
  // stripped back to a bare CNOT by cleanup, and crumbs-sized progress burns
  // the layer budget that the escape search below spends far better.
  auto try_layer = [&](std::pair<int, int> pair) {
    const std::vector<Op> snapshot = b_dag;
    const std::size_t base = b_dag.size();
    b_dag.push_back(rz0(pair.first));
    b_dag.push_back(rz0(pair.second));
    Op cx;
    cx.gate = Gate::Cnot;
    cx.qubits = {pair.first, pair.second};
    b_dag.push_back(cx);
    b_dag.push_back(rz0(pair.first));
    b_dag.push_back(rz0(pair.second));

    rotoselect(b_dag, {base, base + 1, base + 3, base + 4}, cost,
               cfg.sweep_improvement_tol, monitor);
    rotosolve(b_dag, cost, cfg.sweep_improvement_tol, monitor);

    Circuit cleaned(a.n_qubits());
    for (const Op& op : b_dag) cleaned.append(op);
    cleaned = cleanup_transpile(cleaned, cfg.angle_eps);
    b_dag = cleaned.ops();
    const double after = cost(b_dag);
    if (after < current - std::max(current * 1e-3, 1e-12) ||
        after <= cfg.cost_threshold) {
      previous = pair;
      current = after;
      return true;
    }
    b_dag = snapshot;
    return false;
  };
  auto state_now = [&] {
    StateVector psi = target;
    for (const Op& op : b_dag) psi.apply(op);
    return psi;
  };
  auto cnot_count = [&] {
    int c = 0;
    for (const Op& op : b_dag) c += op.gate == Gate::Cnot;
    return c;
  };
  // Drops any op whose removal re-optimizes to `bound()`. Greedy growth
  // routinely leaves layers that later structure made redundant; pruning
  // reclaims that budget, and every op that survives provably earns its place.
  auto prune_pass = [&](const std::function<double()>& bound) {
    for (bool pruned = true; pruned;) {
      pruned = false;
      for (std::size_t i = b_dag.size(); i-- > 0;) {
        std::vector<Op> trial = b_dag;
        trial.erase(trial.begin() + static_cast<long>(i));
        rotosolve(trial, cost, cfg.sweep_improvement_tol, monitor);
        const double after = cost(trial);
        if (after <= bound()) {
          b_dag = std::move(trial);
          current = after;
          pruned = true;
        }
      }
    }
  };
  // Mid-flight pruning may keep the cost where it is; only removals that do
  // not lose ground are allowed.
  const auto hold_ground = [&] { return current + 1e-12; };

  // max_layers caps the size of the ansatz; the total work allowance is a few
  // times that, since pruning can free slots mid-flight.
  bool second_wind = false;
  while (current > cfg.cost_threshold) {
    if (grown >= 4 * cfg.max_layers) {
      std::ostringstream msg;
      msg << "recompilation exceeded its growth budget at " << grown
          << " layers tried, best cost " << best_seen;
      throw IslError(msg.str(), best_seen, cnot_count());
    }
    if (cnot_count() >= cfg.max_layers) {
      if (!second_wind) {
        prune_pass(hold_ground);
        second_wind = true;
        continue;
      }
      std::ostringstream msg;
      msg << "recompilation stalled after " << cnot_count() << " layers, best cost "
          << best_seen;
      throw IslError(msg.str(), best_seen, cnot_count());
    }

    bool accepted = false;
    for (const auto& pair : candidate_pairs(state_now(), previous)) {
      if ((accepted = try_layer(pair))) break;
    }
    if (accepted) {
      ++grown;
    } else {
      // Single placements are exhausted, so spend bare CNOTs to walk a heavy
      // residual component within reach of one dressed layer and commit the
      // chain plus that layer as a unit (see escape_leads).
      for (const auto& lead : escape_leads(state_now(), a.n_qubits() - 1)) {
        const int unit = static_cast<int>(lead.bridges.size()) + 1;
        if (cnot_count() + unit > cfg.max_layers) continue;
        const std::vector<Op> snapshot = b_dag;
        for (const Op& op : lead.bridges) b_dag.push_back(op);
        if (try_layer(lead.pair)) {
          grown += unit;
          accepted = true;
          break;
        }
        b_dag = snapshot;
      }
    }

    best_seen = std::min(best_seen, current);
    if (accepted) {
      second_wind = false;
      continue;
    }
    // Pruning reshapes the ansatz, which can unlock placements that were
    // dead ends a moment ago; one retry before conceding.
    if (!second_wind) {
      prune_pass(hold_ground);
      second_wind = true;
      continue;
    }
    std::ostringstream msg;
    msg << "no placement improves the cost at layer " << cnot_count() << ", best cost "
        << best_seen;
    throw IslError(msg.str(), best_seen, cnot_count());
  }

  // Final compaction, with margin: the chained use of these circuits adds
  // costs roughly linearly, so each one ships comfortably inside its contract.
  prune_pass([&] { return 0.5 * cfg.cost_threshold; });
  {
    Circuit cleaned(a.n_qubits());
    for (const Op& op : b_dag) cleaned.append(op);
    cleaned = cleanup_transpile(cleaned, cfg.angle_eps);
    b_dag = cleaned.ops();
    current = cost(b_dag);
  }

  Circuit b_dag_circuit(a.n_qubits());
  for (const Op& op : b_dag) b_dag_circuit.append(op);
  const Circuit b = inverse(b_dag_circuit);
  if (stats) {
    const GateCounts gc = gate_counts(b);
    *stats = {grown, current, gc.n_single, gc.n_two, gc.depth};
  }
  return b;
}

std::vector<Circuit> incremental_chain(const SiamParams& p, double dt, int n_steps,
                                       const IslConfig& cfg, const Circuit* prep,
                                       std::vector<IslStats>* stats) {
  if (n_steps < 1) throw std::invalid_argument("chain needs at least one step");
  const Circuit gs =
      prep ? *prep : state_prep_circuit(exact_ground_state(p).amplitudes);
  const Circuit step = trotter_step_circuit(p, dt);

  std::vector<Circuit> chain;
  chain.reserve(n_steps);
  if (stats) stats->clear();
  for (int n = 1; n <= n_steps; ++n) {
    Circuit target = n == 1 ? greens_prefix(gs, step) : Circuit(5);
    if (n > 1) {
      target.append(chain.back(), 0);
      target.append(step, 1);
    }
    try {
      IslStats st;
      chain.push_back(isl_recompile(target, cfg, &st));
      if (stats) stats->push_back(st);
    } catch (const IslError& e) {
      std::ostringstream msg;
      msg << "chain aborted at step " << n << ": " << e.what();
      throw IslError(msg.str(), e.best_cost, e.layers_tried);
    }
  }
  return chain;
}

}  // namespace qdmft
