#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "qdmft/circuit.hpp"
#include "qdmft/kraus.hpp"

namespace qdmft {

// Hardware error model: thermal relaxation with a single time constant
// (tau1 = tau2 = t_relax, so the pure-dephasing time is 2*t_relax), one
// depolarizing parameter per gate arity, and a classical readout flip.
// Durations are seconds; U1 is a frame change and takes no time.
struct NoiseParams {
  double t_relax = std::numeric_limits<double>::infinity();
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double t_x90 = 50e-9;
  double t_cx = 400e-9;
  double t_meas = 1e-6;
  double readout_flip = 0.0;

  double duration(Gate g) const;
  bool is_noiseless() const;
};

struct GateFidelity {
  double process = 1;
  double average = 1;
};

struct FidelityReport {
  GateFidelity u1, u2, u3, cnot, measure;
};

// Amplitude damping gamma = 1 - exp(-t/T) composed with pure dephasing of
// rate 1/(2T); identity when t == 0 or T == inf.
KrausChannel thermal_channel(double duration, double t_relax);

// (1-l) rho + l/(4^a - 1) * sum_P P rho P over non-identity Paulis.
KrausChannel depolarizing_channel(double lambda, int arity);

// Probability-p swap of the measurement outcomes (X flip for Z basis, Z flip
// for Y basis).
KrausChannel readout_flip_channel(double p, Basis basis);

// Noise applied after the ideal op: thermal(duration) then depolarizing for
// gates; thermal(t_meas) then readout flip for measurements. The projective
// collapse a measurement also causes is applied by the engine, not here.
KrausChannel op_channel(const NoiseParams& params, const Op& op);

// Process fidelity sum_k |Tr(ideal^H K_k)|^2 / d^2 and its average-fidelity
// companion (d F_pro + 1)/(d + 1).
double process_fidelity(const KrausChannel& ch, const Eigen::MatrixXcd& ideal);
double average_fidelity(const KrausChannel& ch, const Eigen::MatrixXcd& ideal);

// Both fidelity metrics for every basis op under `params`. Measurement
// fidelity covers relaxation during readout plus the classical flip.
FidelityReport fidelity_report(const NoiseParams& params);

struct InfidelityPoint {
  double t_relax = 0;
  double lambda = 0;
  double infidelity = 0;
};

// CNOT process infidelity on a (t_relax, lambda) grid, row-major over
// t_relax then lambda; gate times come from `base`.
std::vector<InfidelityPoint> infidelity_map(const std::vector<double>& t_relax_grid,
                                            const std::vector<double>& lambda_grid,
                                            const NoiseParams& base);

// Named hardware presets. A, B, C, E pin (t_relax, lambda) directly; D's
// listed pair is inconsistent with its fidelity column, so it is rebuilt by
// solving for the (t_relax, lambda) that hit F(CNOT) = 0.990 and
// F(U3) = 0.996. Every preset derives readout_flip from its F(Measurement).
NoiseParams preset(char name);

}  // namespace qdmft
