#pragma once

#include <cstdint>
#include <vector>

#include "qdmft/circuit.hpp"
#include "qdmft/noise.hpp"
#include "qdmft/siam.hpp"

namespace qdmft {

enum class Backend { Statevector, Density };

// Which quadrature of the response function the interferometer extracts.
enum class GreensPart { Real, Imag };

struct GreensSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderrs;  // zero for exact backends
};

struct GreensFit {
  double alpha = 0;    // weight of the omega1 cosine, in [0,1]
  double omega1 = 0;   // omega1 <= omega2
  double omega2 = 0;
  double residual = 0; // unweighted RMS misfit
};

// The ancilla-interferometer circuit minus its closing gates: state prep on
// work qubits 1..4, H on the ancilla, CX(0->1), then the evolution block.
// `gs` and `evolution` are 4-qubit circuits; this is the part a recompiler
// may replace wholesale.
Circuit greens_prefix(const Circuit& gs, const Circuit& evolution);

// Closes a prefix with CX(0->1), S^dag for the imaginary part, H, and an
// ancilla measurement. <Z> on the ancilla then equals the chosen part of
// <psi| U^dag X1 U X1 |psi>.
Circuit finish_greens(const Circuit& prefix, GreensPart part);

Circuit greens_circuit(const Circuit& gs, const Circuit& evolution,
                       GreensPart part = GreensPart::Real);

// Response series from the dense eigendecomposition, no circuits involved:
// a cosine sum with nonnegative weights adding to one.
GreensSeries exact_greens_series(const SiamParams& p, const std::vector<double>& times);

struct MeasureOptions {
  Backend backend = Backend::Statevector;
  NoiseParams noise;                          // density backend only
  long shots = 75000;                         // per point, density backend
  std::uint64_t seed = 0;
  const Circuit* prep = nullptr;              // 4-qubit override of exact prep
  const std::vector<Circuit>* chain = nullptr;  // recompiled prefixes for n=1..N
};

// Measures the interferometer at tau_n = n*dt for n = 0..n_steps, one
// evolution block of n Trotter steps per point; the series is normalized by
// its measured tau=0 value. Statevector runs give exact expectations; the
// density backend applies the noise model and binomial shot sampling with a
// per-point seed, so results do not depend on scheduling.
GreensSeries measure_series(const SiamParams& p, double dt, int n_steps,
                            const MeasureOptions& opt);

// Weighted least squares for alpha cos(w1 t) + (1-alpha) cos(w2 t): a coarse
// frequency-grid multistart (with extra low-frequency seeds), Nelder-Mead on
// the frequency pair with alpha solved in closed form, then a damped
// Gauss-Newton polish. Points with nonzero stderr get inverse-variance
// weights. Output is canonical: omega1 <= omega2, and a fit that collapses
// to a single frequency reports alpha = 0.5.
GreensFit fit_series(const GreensSeries& s);

}  // namespace qdmft
