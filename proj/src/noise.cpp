#include "qdmft/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "qdmft/dense.hpp"

namespace qdmft {

// ---- KrausChannel ----------------------------------------------------------

KrausChannel KrausChannel::identity(int arity) {
  KrausChannel ch;
  ch.arity = arity;
  ch.ops = {Eigen::MatrixXcd::Identity(1L << arity, 1L << arity)};
  return ch;
}

void KrausChannel::validate() const {
  if (arity < 1 || arity > 2) throw std::runtime_error("channel arity must be 1 or 2");
  const long dim = 1L << arity;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
  if (ops.empty()) throw std::runtime_error("channel has no Kraus operators");
  for (const auto& k : ops) {
    if (k.rows() != dim || k.cols() != dim)
      throw std::runtime_error("Kraus operator dimension mismatch");
    sum += k.adjoint() * k;
  }
  if ((sum - Eigen::MatrixXcd::Identity(dim, dim)).norm() > 1e-10)
    throw std::runtime_error("Kraus operators do not sum to identity");
}

bool KrausChannel::is_identity(double tol) const {
  if (ops.size() != 1) return false;
  const long dim = 1L << arity;
  return (ops[0] - Eigen::MatrixXcd::Identity(dim, dim)).norm() <= tol;
}

KrausChannel compose(const KrausChannel& first, const KrausChannel& second) {
  if (first.arity != second.arity) throw std::invalid_argument("compose: arity mismatch");
  if (first.is_identity()) return second;
  if (second.is_identity()) return first;
  KrausChannel out;
  out.arity = first.arity;
  out.ops.reserve(first.ops.size() * second.ops.size());
  for (const auto& s : second.ops)
    for (const auto& f : first.ops) out.ops.push_back(s * f);
  return compress(out);
}

KrausChannel compress(const KrausChannel& ch) {
  const long dim = 1L << ch.arity;
  const long d2 = dim * dim;
  if (static_cast<long>(ch.ops.size()) <= d2) return ch;
  // Products of channels multiply operator counts while the Choi rank stays
  // at most dim^2; rebuild from the nonzero eigenpairs instead of carrying
  // hundreds of near-parallel operators through every density update.
  Eigen::MatrixXcd choi = Eigen::MatrixXcd::Zero(d2, d2);
  for (const auto& k : ch.ops) {
    Eigen::Map<const Eigen::VectorXcd> v(k.data(), d2);
    choi.noalias() += v * v.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(choi);
  KrausChannel out;
  out.arity = ch.arity;
  const double cut = 1e-14 * static_cast<double>(dim);
  for (long i = 0; i < d2; ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam <= cut) continue;
    const Eigen::VectorXcd col = std::sqrt(lam) * es.eigenvectors().col(i);
    out.ops.emplace_back(Eigen::Map<const Eigen::MatrixXcd>(col.data(), dim, dim));
  }
  if (out.ops.empty()) throw std::runtime_error("channel compressed to nothing");
  return out;
}

KrausChannel tensor(const KrausChannel& low, const KrausChannel& high) {
  if (low.arity != 1 || high.arity != 1)
    throw std::invalid_argument("tensor expects single-qubit channels");
  KrausChannel out;
  out.arity = 2;
  for (const auto& h : high.ops)
    for (const auto& l : low.ops) {
      Eigen::Matrix4cd k;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = h(i, j) * l;
      out.ops.push_back(k);
    }
  return out;
}

// ---- channel factories -----------------------------------------------------

double NoiseParams::duration(Gate g) const {
  switch (g) {
    case Gate::U1: return 0.0;
    case Gate::U2: return t_x90;
    case Gate::U3: return 2 * t_x90;
    case Gate::Cnot: return t_cx;
    case Gate::Measure: return t_meas;
    default:
      throw std::invalid_argument("durations are defined for basis ops only");
  }
}

bool NoiseParams::is_noiseless() const {
  return std::isinf(t_relax) && lambda1 == 0 && lambda2 == 0 && readout_flip == 0;
}

KrausChannel thermal_channel(double duration, double t_relax) {
  if (duration < 0 || t_relax <= 0) throw std::invalid_argument("bad thermal parameters");
  if (duration == 0 || std::isinf(t_relax)) return KrausChannel::identity(1);
  const double gamma = 1.0 - std::exp(-duration / t_relax);
  const double p_phi = 0.5 * (1.0 - std::exp(-duration / (2 * t_relax)));
  Eigen::Matrix2cd k0, k1, z;
  k0 << 1, 0, 0, std::sqrt(1 - gamma);
  k1 << 0, std::sqrt(gamma), 0, 0;
  z << 1, 0, 0, -1;
  KrausChannel ch;
  ch.arity = 1;
  ch.ops = {std::sqrt(1 - p_phi) * k0, std::sqrt(1 - p_phi) * k1,
            std::sqrt(p_phi) * (z * k0), std::sqrt(p_phi) * (z * k1)};
  return ch;
}

KrausChannel depolarizing_channel(double lambda, int arity) {
  if (lambda < 0 || lambda > 1) throw std::invalid_argument("lambda outside [0,1]");
  if (arity != 1 && arity != 2) throw std::invalid_argument("arity must be 1 or 2");
  if (lambda == 0) return KrausChannel::identity(arity);
  KrausChannel ch;
  ch.arity = arity;
  const int n_pauli = (arity == 1) ? 4 : 16;
  const double w = lambda / (n_pauli - 1);
  const char letters[4] = {'I', 'X', 'Y', 'Z'};
  for (int i = 0; i < n_pauli; ++i) {
    std::string s(arity, 'I');
    s[0] = letters[i % 4];
    if (arity == 2) s[1] = letters[i / 4];
    const double weight = (i == 0) ? 1.0 - lambda : w;
    ch.ops.push_back(std::sqrt(weight) * pauli_matrix(s));
  }
  return ch;
}

KrausChannel readout_flip_channel(double p, Basis basis) {
  if (p < 0 || p > 1) throw std::invalid_argument("flip probability outside [0,1]");
  if (p == 0) return KrausChannel::identity(1);
  Eigen::Matrix2cd flip;
  if (basis == Basis::Z)
    flip << 0, 1, 1, 0;  // X swaps Z outcomes
  else
    flip << 1, 0, 0, -1;  // Z swaps Y outcomes
  KrausChannel ch;
  ch.arity = 1;
  ch.ops = {std::sqrt(1 - p) * Eigen::Matrix2cd::Identity(), std::sqrt(p) * flip};
  return ch;
}

KrausChannel op_channel(const NoiseParams& params, const Op& op) {
  switch (op.gate) {
    case Gate::U1:
    case Gate::U2:
    case Gate::U3:
      return compose(thermal_channel(params.duration(op.gate), params.t_relax),
                     depolarizing_channel(params.lambda1, 1));
    case Gate::Cnot: {
      const KrausChannel th = thermal_channel(params.t_cx, params.t_relax);
      const KrausChannel pair =
          th.is_identity() ? KrausChannel::identity(2) : tensor(th, th);
      return compose(pair, depolarizing_channel(params.lambda2, 2));
    }
    case Gate::Measure:
      return compose(thermal_channel(params.t_meas, params.t_relax),
                     readout_flip_channel(params.readout_flip, op.basis));
    default:
      throw std::invalid_argument("op_channel is defined for basis ops only");
  }
}

// ---- fidelities ------------------------------------------------------------

double process_fidelity(const KrausChannel& ch, const Eigen::MatrixXcd& ideal) {
  const long d = ideal.rows();
  if (d != (1L << ch.arity)) throw std::invalid_argument("ideal dimension mismatch");
  double f = 0;
  for (const auto& k : ch.ops) f += std::norm((ideal.adjoint() * k).trace());
  return f / static_cast<double>(d * d);
}

double average_fidelity(const KrausChannel& ch, const Eigen::MatrixXcd& ideal) {
  const double d = static_cast<double>(ideal.rows());
  return (d * process_fidelity(ch, ideal) + 1.0) / (d + 1.0);
}

FidelityReport fidelity_report(const NoiseParams& params) {
  // Noise factors out of the ideal gate, so F(noisy op vs ideal op) equals
  // F(op channel vs identity).
  auto both = [&](Gate g, int arity) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(1 << arity, 1 << arity);
    const KrausChannel ch = op_channel(params, {g, {0, arity == 2 ? 1 : -1}});
    return GateFidelity{process_fidelity(ch, id), average_fidelity(ch, id)};
  };
  FidelityReport r;
  r.u1 = both(Gate::U1, 1);
  r.u2 = both(Gate::U2, 1);
  r.u3 = both(Gate::U3, 1);
  r.cnot = both(Gate::Cnot, 2);
  r.measure = both(Gate::Measure, 1);
  return r;
}

std::vector<InfidelityPoint> infidelity_map(const std::vector<double>& t_relax_grid,
                                            const std::vector<double>& lambda_grid,
                                            const NoiseParams& base) {
  std::vector<InfidelityPoint> out(t_relax_grid.size() * lambda_grid.size());
  const long nl = static_cast<long>(lambda_grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(t_relax_grid.size()); ++i) {
    for (long j = 0; j < nl; ++j) {
      NoiseParams p = base;
      p.t_relax = t_relax_grid[i];
      p.lambda1 = p.lambda2 = lambda_grid[j];
      const double f =
          process_fidelity(op_channel(p, {Gate::Cnot, {0, 1}}), Eigen::MatrixXcd::Identity(4, 4));
      out[i * nl + j] = {t_relax_grid[i], lambda_grid[j], 1.0 - f};
    }
  }
  return out;
}

// ---- presets ---------------------------------------------------------------

namespace {

double measure_fidelity(const NoiseParams& p) {
  return process_fidelity(op_channel(p, {Gate::Measure, {0, -1}}),
                          Eigen::MatrixXcd::Identity(2, 2));
}

// Monotone-decreasing in the flip probability; plain bisection.
double solve_readout_flip(NoiseParams p, double f_target) {
  p.readout_flip = 0;
  if (measure_fidelity(p) <= f_target) return 0.0;
  double lo = 0, hi = 0.5;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    p.readout_flip = mid;
    (measure_fidelity(p) > f_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cnot_fidelity(const NoiseParams& p) {
  return process_fidelity(op_channel(p, {Gate::Cnot, {0, 1}}),
                          Eigen::MatrixXcd::Identity(4, 4));
}

double u3_thermal_fidelity(double tau, const NoiseParams& base) {
  return process_fidelity(thermal_channel(2 * base.t_x90, tau),
                          Eigen::MatrixXcd::Identity(2, 2));
}

// Rebuilds the D preset from its published fidelities: lambda follows from
// F(U3) once t_relax is fixed, and t_relax is bisected until F(CNOT) lands.
NoiseParams reconstruct_preset_d(NoiseParams p) {
  const double f_cnot_target = 0.990, f_u3_target = 0.996;
  auto residual = [&](double tau) {
    NoiseParams q = p;
    q.t_relax = tau;
    const double lambda = 1.0 - f_u3_target / u3_thermal_fidelity(tau, p);
    q.lambda1 = q.lambda2 = std::clamp(lambda, 0.0, 1.0);
    return cnot_fidelity(q) - f_cnot_target;
  };
  double lo = 2.5e-5, hi = 10.0;  // residual < 0 at lo, > 0 at hi
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (residual(mid) < 0 ? lo : hi) = mid;
  }
  p.t_relax = std::sqrt(lo * hi);
  p.lambda1 = p.lambda2 =
      std::clamp(1.0 - f_u3_target / u3_thermal_fidelity(p.t_relax, p), 0.0, 1.0);
  return p;
}

}  // namespace

NoiseParams preset(char name) {
  NoiseParams p;
  double f_meas = 1.0;
  switch (name) {
    case 'A': p.t_relax = 10e-3; p.lambda1 = p.lambda2 = 4e-5; f_meas = 0.9999; break;
    case 'B': p.t_relax = 100e-3; p.lambda1 = p.lambda2 = 4e-6; f_meas = 0.99999; break;
    case 'C': p.t_relax = 0.04e-3; p.lambda1 = p.lambda2 = 5e-3; f_meas = 0.975; break;
    case 'D': p = reconstruct_preset_d(p); f_meas = 0.991; break;
    case 'E': p.t_relax = 1.1e-3; p.lambda1 = p.lambda2 = 4e-4; f_meas = 0.999; break;
    default: throw std::invalid_argument("unknown noise preset (A..E)");
  }
  p.readout_flip = solve_readout_flip(p, f_meas);
  return p;
}

}  // namespace qdmft
