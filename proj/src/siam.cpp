#include "qdmft/siam.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "qdmft/dense.hpp"
#include "qdmft/statevector.hpp"
#include "qdmft/transpile.hpp"

namespace qdmft {

SiamParams SiamParams::half_filled(double u, double v, double t_star) {
  if (t_star <= 0) throw std::invalid_argument("t_star must be positive");
  SiamParams p;
  p.u = u;
  p.v = v;
  p.mu = u / 2;
  p.eps_c = 0;
  p.t_star = t_star;
  return p;
}

bool SiamParams::is_half_filled() const {
  return std::abs(mu - u / 2) <= 1e-12 && std::abs(eps_c) <= 1e-12 && t_star > 0;
}

PauliHamiltonian jw_hamiltonian(const SiamParams& p) {
  if (!p.is_half_filled())
    throw std::invalid_argument("Hamiltonian mapping assumes mu = u/2, eps_c = 0");
  PauliHamiltonian h;
  h.terms = {
      {p.u / 4, "ZIZI"},
      {p.v / 2, "XXII"},
      {p.v / 2, "YYII"},
      {p.v / 2, "IIXX"},
      {p.v / 2, "IIYY"},
  };
  return h;
}

Eigen::MatrixXcd dense_hamiltonian(const PauliHamiltonian& h) {
  int n = 0;
  for (const auto& t : h.terms) n = std::max(n, static_cast<int>(t.paulis.size()));
  const long dim = 1L << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& t : h.terms) m += t.coeff * pauli_matrix(t.paulis);
  return m;
}

GroundState exact_ground_state(const SiamParams& p) {
  const Eigen::MatrixXcd h = dense_hamiltonian(jw_hamiltonian(p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const auto& evals = es.eigenvalues();
  const double e0 = evals(0);

  // Project the lowest basis vector with support onto the ground space so
  // degenerate spectra still give one reproducible state.
  const double deg_tol = 1e-10;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(h.rows());
  for (long basis = 0; basis < h.rows() && psi.norm() < 1e-8; ++basis) {
    psi.setZero();
    for (long k = 0; k < evals.size(); ++k) {
      if (evals(k) - e0 > deg_tol) break;
      const Eigen::VectorXcd& vec = es.eigenvectors().col(k);
      psi += vec * std::conj(vec(basis));
    }
  }
  psi.normalize();

  long top = 0;
  for (long i = 1; i < psi.size(); ++i)
    if (std::abs(psi(i)) > std::abs(psi(top)) + 1e-14) top = i;
  const cd a = psi(top);
  psi *= std::conj(a) / std::abs(a);
  return {e0, psi};
}

namespace {

void append_hop(Circuit& c, int a, int b, double beta) {
  c.rx(a, M_PI / 2).rx(b, M_PI / 2);
  c.cnot(a, b);
  c.rx(a, beta).rz(b, beta);
  c.cnot(a, b);
  c.rx(a, -M_PI / 2).rx(b, -M_PI / 2);
}

}  // namespace

Circuit trotter_step_circuit(const SiamParams& p, double dt) {
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  if (!p.is_half_filled())
    throw std::invalid_argument("Trotter step assumes mu = u/2, eps_c = 0");
  Circuit c(4);
  c.cnot(0, 2);
  c.rz(2, p.u * dt / 2);
  c.cnot(0, 2);
  append_hop(c, 0, 1, p.v * dt);
  append_hop(c, 2, 3, p.v * dt);
  return c;
}

namespace {

double ansatz_energy(const std::vector<double>& angles, int layers,
                     const PauliHamiltonian& h) {
  Circuit c(4);
  std::size_t k = 0;
  for (int q = 0; q < 4; ++q) c.ry(q, angles[k++]);
  for (int l = 0; l < layers; ++l) {
    c.cnot(0, 1).cnot(1, 2).cnot(2, 3);
    for (int q = 0; q < 4; ++q) c.ry(q, angles[k++]);
  }
  const StateVector psi = run_statevector(c);
  double e = 0;
  for (const auto& t : h.terms) e += t.coeff * expectation(psi, t.paulis);
  return e;
}

}  // namespace

VqeResult vqe_ground_state(const SiamParams& p, int layers, std::uint64_t seed) {
  if (layers < 1) throw std::invalid_argument("need at least one ansatz layer");
  const PauliHamiltonian h = jw_hamiltonian(p);
  const std::size_t n_params = 4 * (layers + 1);

  std::vector<double> best_angles(n_params, 0.0);
  double best_e = ansatz_energy(best_angles, layers, h);

  const int restarts = 6;
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> angles(n_params, 0.0);
    if (r > 0) {
      std::mt19937_64 rng(detail::mix_seed(seed, r));
      std::uniform_real_distribution<double> uni(-M_PI, M_PI);
      for (auto& a : angles) a = uni(rng);
    }
    double e = ansatz_energy(angles, layers, h);
    for (int sweep = 0; sweep < 500; ++sweep) {
      const double e_prev = e;
      for (std::size_t m = 0; m < n_params; ++m) {
        // The energy is sinusoidal in each angle; three probes pin the
        // sinusoid and place the angle at its minimum directly.
        auto probe = [&](double th) {
          std::vector<double> tmp = angles;
          tmp[m] = th;
          return ansatz_energy(tmp, layers, h);
        };
        const double ep = probe(M_PI / 2), em = probe(-M_PI / 2);
        const double a0 = (ep + em) / 2;
        const double cs = (ep - em) / 2;
        const double cc = probe(0.0) - a0;
        if (std::hypot(cc, cs) < 1e-15) continue;
        angles[m] = std::remainder(std::atan2(-cs, -cc), 2 * M_PI);
      }
      e = ansatz_energy(angles, layers, h);
      if (e_prev - e < 1e-6 * std::max(std::abs(e_prev), 1e-12)) break;
    }
    if (e < best_e) {
      best_e = e;
      best_angles = angles;
    }
  }

  Circuit c(4);
  std::size_t k = 0;
  for (int q = 0; q < 4; ++q) c.ry(q, best_angles[k++]);
  for (int l = 0; l < layers; ++l) {
    c.cnot(0, 1).cnot(1, 2).cnot(2, 3);
    for (int q = 0; q < 4; ++q) c.ry(q, best_angles[k++]);
  }
  return {cleanup_transpile(c), best_e};
}

}  // namespace qdmft
