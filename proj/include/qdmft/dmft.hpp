#pragma once

#include <cstdint>
#include <vector>

#include "qdmft/greens.hpp"
#include "qdmft/isl.hpp"
#include "qdmft/noise.hpp"

namespace qdmft {

// Recompilation budget for chains driven by the loop. The pole fit raises
// frequencies to the fourth power, so coherent circuit error moves Z by far
// more than it moves the raw response; a tighter cost floor than the
// standalone recompiler default keeps that bias below a percent.
inline IslConfig loop_isl_defaults() {
  IslConfig cfg;
  cfg.cost_threshold = 1e-4;
  return cfg;
}

struct DmftConfig {
  double u = 0;
  double t_star = 1;
  double v_init = 1;
  double dt = 0.5;
  int n_steps = 24;
  Backend backend = Backend::Statevector;
  NoiseParams noise;
  long shots = 75000;
  std::uint64_t seed = 0;
  double sc_tol = 0.01;     // |V_new - V| threshold, units of t_star
  int max_iters = 200;
  int avg_window = 50;      // extra iterations averaged after convergence
  double eta = 1.0;         // damping: V <- (1-eta) V + eta V_new
  bool use_isl = false;
  IslConfig isl = loop_isl_defaults();
  const Circuit* prep = nullptr;  // 4-qubit override of exact state prep
};

struct DmftIteration {
  int iter = 0;
  double v = 0;
  double alpha = 0;
  double omega1 = 0;
  double omega2 = 0;
  double z = 0;
};

struct DmftResult {
  double v_final = 0;
  double z_mean = 0;
  double z_std = 0;
  bool converged = false;
  bool spurious = false;  // converged Z jumped >50% on the closing iteration
  int iters = 0;
  std::vector<DmftIteration> trace;
};

// Z = 1 / (V^4 (alpha / w1^4 + (1-alpha) / w2^4)).
double quasiparticle_weight(const GreensFit& fit, double v);

// V_new = sqrt(Z) t_star.
double update_hybridization(double z, double t_star);

// Self-consistency loop over the measured response: measure, fit, update V,
// repeat until the update falls below sc_tol. Deterministic backends stop
// there; sampled runs continue for avg_window iterations and report the mean
// and spread of Z over that window. max_iters exhausted => converged=false
// with the full trace kept.
DmftResult run_dmft(const DmftConfig& cfg);

// Same loop with the dense-eigendecomposition series in place of circuits;
// the reference the circuit pipeline is judged against.
DmftResult run_dmft_exact(const DmftConfig& cfg);

}  // namespace qdmft
