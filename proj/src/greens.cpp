#include "qdmft/greens.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <exception>
#include <stdexcept>

#include "qdmft/dense.hpp"
#include "qdmft/density.hpp"
#include "qdmft/statevector.hpp"
#include "qdmft/stateprep.hpp"
#include "qdmft/transpile.hpp"

namespace qdmft {

namespace {

void require_work_register(const Circuit& c, const char* what) {
  if (c.n_qubits() != 4)
    throw std::invalid_argument(std::string(what) + " must act on the 4 work qubits");
  if (c.has_measurement())
    throw std::invalid_argument(std::string(what) + " must not contain measurements");
}

}  // namespace

Circuit greens_prefix(const Circuit& gs, const Circuit& evolution) {
  require_work_register(gs, "state prep");
  require_work_register(evolution, "evolution");
  Circuit c(5);
  c.append(gs, 1);
  c.h(0);
  c.cnot(0, 1);
  c.append(evolution, 1);
  return c;
}

Circuit finish_greens(const Circuit& prefix, GreensPart part) {
  if (prefix.n_qubits() != 5)
    throw std::invalid_argument("interferometer prefix must have 5 qubits");
  if (prefix.has_measurement())
    throw std::invalid_argument("interferometer prefix must not contain measurements");
  Circuit c(5);
  c.append(prefix, 0);
  c.cnot(0, 1);
  if (part == GreensPart::Imag) c.sdg(0);
  c.h(0);
  c.measure(0, Basis::Z);
  return c;
}

Circuit greens_circuit(const Circuit& gs, const Circuit& evolution, GreensPart part) {
  return finish_greens(greens_prefix(gs, evolution), part);
}

GreensSeries exact_greens_series(const SiamParams& p, const std::vector<double>& times) {
  for (double t : times)
    if (t < 0) throw std::invalid_argument("times must be nonnegative");

  const Eigen::MatrixXcd h = dense_hamiltonian(jw_hamiltonian(p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const GroundState gs = exact_ground_state(p);

  // <gs| e^{iHt} X0 e^{-iHt} X0 |gs> = sum_k |<k|X0|gs>|^2 e^{-i(E_k - E0)t},
  // so the series is a cosine sum over excitation energies.
  const Eigen::VectorXcd w = pauli_matrix("XIII") * gs.amplitudes;
  const Eigen::VectorXcd wt = es.eigenvectors().adjoint() * w;
  Eigen::VectorXd weights = wt.cwiseAbs2();
  weights /= weights.sum();

  GreensSeries out;
  out.times = times;
  out.values.resize(times.size());
  out.stderrs.assign(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double v = 0;
    for (long k = 0; k < weights.size(); ++k)
      v += weights(k) * std::cos((es.eigenvalues()(k) - gs.energy) * times[i]);
    out.values[i] = v;
  }
  return out;
}

GreensSeries measure_series(const SiamParams& p, double dt, int n_steps,
                            const MeasureOptions& opt) {
  if (n_steps < 1) throw std::invalid_argument("need at least one evolution step");
  if (opt.backend == Backend::Density && opt.shots < 1)
    throw std::invalid_argument("density backend needs a positive shot count");
  if (opt.chain && static_cast<int>(opt.chain->size()) < n_steps)
    throw std::invalid_argument("recompiled chain shorter than the series");
  if (opt.prep) require_work_register(*opt.prep, "state prep");

  const Circuit prep =
      opt.prep ? *opt.prep : state_prep_circuit(exact_ground_state(p).amplitudes);
  const Circuit step = trotter_step_circuit(p, dt);

  const int n_points = n_steps + 1;
  std::vector<double> raw(n_points), err(n_points, 0.0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n < n_points; ++n) {
    try {
      Circuit full(5);
      if (opt.chain && n >= 1) {
        full = finish_greens((*opt.chain)[n - 1], GreensPart::Real);
      } else {
        Circuit evo(4);
        for (int s = 0; s < n; ++s) evo.append(step, 0);
        full = greens_circuit(prep, evo, GreensPart::Real);
      }
      if (opt.backend == Backend::Statevector) {
        const StateVector psi = run_statevector(strip_measurements(full));
        raw[n] = expectation(psi, "ZIIII");
      } else {
        const DensityMatrix rho = run_density(lower_to_basis(full), opt.noise);
        const double m = expectation(rho, "ZIIII");
        const double est =
            detail::binomial_estimate((1 + m) / 2, opt.shots, detail::mix_seed(opt.seed, n));
        const double phat = (est + 1) / 2;
        raw[n] = est;
        err[n] = std::max(2 * std::sqrt(phat * (1 - phat) / opt.shots),
                          1.0 / static_cast<double>(opt.shots));
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  const double ref = raw[0];
  if (std::abs(ref) < 1e-9)
    throw std::runtime_error("tau=0 reference vanished; series cannot be normalized");

  GreensSeries out;
  out.times.resize(n_points);
  out.values.resize(n_points);
  out.stderrs.resize(n_points);
  for (int n = 0; n < n_points; ++n) {
    out.times[n] = n * dt;
    const double r = raw[n] / ref;
    out.values[n] = r;
    out.stderrs[n] =
        n == 0 ? 0.0 : std::sqrt(err[n] * err[n] + r * r * err[0] * err[0]) / std::abs(ref);
  }
  out.values[0] = 1.0;
  return out;
}

// ---- fitting ----------------------------------------------------------------

namespace {

struct FitData {
  const std::vector<double>& t;
  const std::vector<double>& y;
  std::vector<double> w;  // least-squares weights
  double omega_max;
};

// Dominant spectral lines of the series, from a dense scan of the weighted
// periodogram with three-point parabolic peak refinement. Coarse grids of
// frequency pairs miss narrow valleys once omega_max grows, so these peaks
// carry the real information about where the cosines sit.
std::vector<double> periodogram_peaks(const FitData& d, int grid, int keep) {
  std::vector<double> power(grid);
  const double step = d.omega_max / grid;
  for (int k = 0; k < grid; ++k) {
    const double w = (k + 1) * step;
    double cs = 0, sn = 0;
    for (std::size_t i = 0; i < d.t.size(); ++i) {
      cs += d.w[i] * d.y[i] * std::cos(w * d.t[i]);
      sn += d.w[i] * d.y[i] * std::sin(w * d.t[i]);
    }
    power[k] = cs * cs + sn * sn;
  }
  std::vector<std::pair<double, double>> peaks;  // (power, omega)
  for (int k = 1; k + 1 < grid; ++k) {
    if (power[k] <= power[k - 1] || power[k] < power[k + 1]) continue;
    const double denom = power[k - 1] - 2 * power[k] + power[k + 1];
    double shift = 0;
    if (denom < 0) shift = std::clamp(0.5 * (power[k - 1] - power[k + 1]) / denom, -0.5, 0.5);
    peaks.emplace_back(power[k], (k + 1 + shift) * step);
  }
  std::sort(peaks.begin(), peaks.end(), std::greater<>());
  if (static_cast<int>(peaks.size()) > keep) peaks.resize(keep);
  std::vector<double> out;
  for (const auto& [p, w] : peaks) out.push_back(std::clamp(w, 1e-9, d.omega_max));
  return out;
}

// Best alpha for fixed frequencies, clamped to [0,1].
double solve_alpha(const FitData& d, double w1, double w2) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double c1 = std::cos(w1 * d.t[i]), c2 = std::cos(w2 * d.t[i]);
    const double diff = c1 - c2;
    num += d.w[i] * diff * (d.y[i] - c2);
    den += d.w[i] * diff * diff;
  }
  if (den < 1e-15) return 0.5;
  return std::clamp(num / den, 0.0, 1.0);
}

double sse(const FitData& d, double alpha, double w1, double w2) {
  double s = 0;
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double m = alpha * std::cos(w1 * d.t[i]) + (1 - alpha) * std::cos(w2 * d.t[i]);
    const double r = d.y[i] - m;
    s += d.w[i] * r * r;
  }
  return s;
}

double profiled_cost(const FitData& d, double w1, double w2) {
  w1 = std::clamp(w1, 1e-9, d.omega_max);
  w2 = std::clamp(w2, 1e-9, d.omega_max);
  return sse(d, solve_alpha(d, w1, w2), w1, w2);
}

// Plain two-dimensional Nelder-Mead on the frequency pair.
std::pair<double, double> nelder_mead(const FitData& d, double w1, double w2) {
  struct Vtx {
    double a, b, f;
  };
  auto eval = [&](double a, double b) { return profiled_cost(d, a, b); };
  const double h = std::max(0.05 * std::min(w1, w2), 1e-3);
  std::array<Vtx, 3> v{Vtx{w1, w2, eval(w1, w2)}, Vtx{w1 + h, w2, eval(w1 + h, w2)},
                       Vtx{w1, w2 + h, eval(w1, w2 + h)}};
  for (int it = 0; it < 200; ++it) {
    std::sort(v.begin(), v.end(), [](const Vtx& x, const Vtx& y) { return x.f < y.f; });
    if (std::abs(v[2].f - v[0].f) < 1e-15 * (1 + std::abs(v[0].f))) break;
    const double ca = (v[0].a + v[1].a) / 2, cb = (v[0].b + v[1].b) / 2;
    const double ra = ca + (ca - v[2].a), rb = cb + (cb - v[2].b);
    const double fr = eval(ra, rb);
    if (fr < v[0].f) {
      const double ea = ca + 2 * (ca - v[2].a), eb = cb + 2 * (cb - v[2].b);
      const double fe = eval(ea, eb);
      v[2] = fe < fr ? Vtx{ea, eb, fe} : Vtx{ra, rb, fr};
    } else if (fr < v[1].f) {
      v[2] = Vtx{ra, rb, fr};
    } else {
      const double ka = ca + 0.5 * (v[2].a - ca), kb = cb + 0.5 * (v[2].b - cb);
      const double fk = eval(ka, kb);
      if (fk < v[2].f) {
        v[2] = Vtx{ka, kb, fk};
      } else {
        for (int i = 1; i < 3; ++i) {
          v[i].a = v[0].a + 0.5 * (v[i].a - v[0].a);
          v[i].b = v[0].b + 0.5 * (v[i].b - v[0].b);
          v[i].f = eval(v[i].a, v[i].b);
        }
      }
    }
  }
  std::sort(v.begin(), v.end(), [](const Vtx& x, const Vtx& y) { return x.f < y.f; });
  return {std::clamp(v[0].a, 1e-9, d.omega_max), std::clamp(v[0].b, 1e-9, d.omega_max)};
}

// Damped Gauss-Newton on (alpha, w1, w2) jointly.
void polish(const FitData& d, double& alpha, double& w1, double& w2) {
  double mu = 1e-6;
  double f = sse(d, alpha, w1, w2);
  for (int it = 0; it < 80; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < d.t.size(); ++i) {
      const double t = d.t[i];
      const double c1 = std::cos(w1 * t), c2 = std::cos(w2 * t);
      const double r = d.y[i] - alpha * c1 - (1 - alpha) * c2;
      Eigen::Vector3d g;  // d(model)/d(param)
      g << c1 - c2, -alpha * t * std::sin(w1 * t), -(1 - alpha) * t * std::sin(w2 * t);
      jtj += d.w[i] * g * g.transpose();
      jtr += d.w[i] * g * r;
    }
    bool stepped = false;
    for (int tries = 0; tries < 8 && !stepped; ++tries) {
      const Eigen::Vector3d delta =
          (jtj + mu * Eigen::Matrix3d::Identity()).ldlt().solve(jtr);
      const double na = std::clamp(alpha + delta(0), 0.0, 1.0);
      const double n1 = std::clamp(w1 + delta(1), 1e-9, d.omega_max);
      const double n2 = std::clamp(w2 + delta(2), 1e-9, d.omega_max);
      const double nf = sse(d, na, n1, n2);
      if (nf <= f) {
        const double gain = f - nf;
        alpha = na;
        w1 = n1;
        w2 = n2;
        f = nf;
        mu = std::max(mu * 0.4, 1e-12);
        stepped = true;
        if (gain < 1e-18 * (1 + f)) return;
      } else {
        mu *= 5;
      }
    }
    if (!stepped) return;
  }
}

}  // namespace

GreensFit fit_series(const GreensSeries& s) {
  const std::size_t n = s.times.size();
  if (n < 7 || s.values.size() != n)
    throw std::invalid_argument("need at least 7 series points");
  for (std::size_t i = 1; i < n; ++i)
    if (s.times[i] <= s.times[i - 1])
      throw std::invalid_argument("times must be strictly increasing");

  const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
  if (*mx - *mn < 1e-12) throw std::invalid_argument("constant series cannot be fitted");

  double dt_min = s.times[1] - s.times[0];
  for (std::size_t i = 2; i < n; ++i) dt_min = std::min(dt_min, s.times[i] - s.times[i - 1]);

  FitData d{s.times, s.values, std::vector<double>(n, 1.0), M_PI / dt_min};
  const bool shot_data =
      s.stderrs.size() == n && std::any_of(s.stderrs.begin(), s.stderrs.end(),
                                           [](double e) { return e > 0; });
  if (shot_data)
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::max(s.stderrs[i], 1e-4);
      d.w[i] = 1.0 / (e * e);
    }

  // Frequency candidates: spectral peaks of the series itself, an even grid,
  // and low-frequency seeds for modes that barely wind over the window.
  std::vector<double> cand = periodogram_peaks(d, 512, 8);
  for (int k = 1; k <= 20; ++k) cand.push_back(k / 20.0 * d.omega_max);
  for (double g : {1e-3, 2.5e-3, 5e-3, 1e-2, 2.5e-2}) cand.push_back(g * d.omega_max);
  std::sort(cand.begin(), cand.end());

  struct Start {
    double w1, w2, f;
  };
  std::vector<Start> starts;
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = i; j < cand.size(); ++j)
      starts.push_back({cand[i], cand[j], profiled_cost(d, cand[i], cand[j])});
  std::sort(starts.begin(), starts.end(),
            [](const Start& a, const Start& b) { return a.f < b.f; });

  // Refine every start. The landscape has many near-degenerate local minima
  // (frequency swaps, alias blends), and cheap ranking of unrefined starts is
  // not a reliable predictor of where the global basin sits.
  double alpha = 0.5, bw1 = starts[0].w1, bw2 = starts[0].w2;
  double bf = std::numeric_limits<double>::infinity();
  for (const Start& st : starts) {
    auto [w1, w2] = nelder_mead(d, st.w1, st.w2);
    double a = solve_alpha(d, w1, w2);
    polish(d, a, w1, w2);
    const double f = sse(d, a, w1, w2);
    if (f < bf) {
      bf = f;
      alpha = a;
      bw1 = w1;
      bw2 = w2;
      if (bf < 1e-20 * static_cast<double>(n)) break;  // machine-precision fit
    }
  }

  polish(d, alpha, bw1, bw2);

  GreensFit fit;
  fit.alpha = alpha;
  fit.omega1 = bw1;
  fit.omega2 = bw2;
  if (fit.omega1 > fit.omega2) {
    std::swap(fit.omega1, fit.omega2);
    fit.alpha = 1 - fit.alpha;
  }
  if (fit.alpha >= 1 - 1e-9) {
    fit.omega2 = fit.omega1;
    fit.alpha = 0.5;
  } else if (fit.alpha <= 1e-9) {
    fit.omega1 = fit.omega2;
    fit.alpha = 0.5;
  }
  if (std::abs(fit.omega2 - fit.omega1) < 1e-6) fit.alpha = 0.5;

  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = fit.alpha * std::cos(fit.omega1 * s.times[i]) +
                     (1 - fit.alpha) * std::cos(fit.omega2 * s.times[i]);
    rss += (s.values[i] - m) * (s.values[i] - m);
  }
  fit.residual = std::sqrt(rss / static_cast<double>(n));
  return fit;
}

}  // namespace qdmft
