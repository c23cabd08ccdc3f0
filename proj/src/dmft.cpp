#include "qdmft/dmft.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qdmft/siam.hpp"
#include "qdmft/statevector.hpp"

namespace qdmft {

double quasiparticle_weight(const GreensFit& fit, double v) {
  if (!(v > 0)) throw std::invalid_argument("quasiparticle_weight: V must be positive");
  if (!(fit.omega1 > 1e-12) || !(fit.omega2 > 1e-12))
    throw std::invalid_argument("quasiparticle_weight: frequency at or below zero");
  if (!(fit.alpha >= 0.0 && fit.alpha <= 1.0))
    throw std::invalid_argument("quasiparticle_weight: weight outside [0, 1]");
  double denom = std::pow(v, 4) * (fit.alpha / std::pow(fit.omega1, 4) +
                                   (1.0 - fit.alpha) / std::pow(fit.omega2, 4));
  return 1.0 / denom;
}

double update_hybridization(double z, double t_star) {
  if (!(z > 0)) throw std::invalid_argument("update_hybridization: Z must be positive");
  if (!(t_star > 0)) throw std::invalid_argument("update_hybridization: t_star must be positive");
  return std::sqrt(z) * t_star;
}

namespace {

void check_config(const DmftConfig& cfg) {
  if (!(cfg.t_star > 0)) throw std::invalid_argument("dmft: t_star must be positive");
  if (!(cfg.v_init > 0)) throw std::invalid_argument("dmft: v_init must be positive");
  if (!(cfg.dt > 0)) throw std::invalid_argument("dmft: dt must be positive");
  if (cfg.n_steps < 1) throw std::invalid_argument("dmft: n_steps must be at least 1");
  if (!(cfg.sc_tol > 0)) throw std::invalid_argument("dmft: sc_tol must be positive");
  if (cfg.max_iters < 1) throw std::invalid_argument("dmft: max_iters must be at least 1");
  if (cfg.avg_window < 1) throw std::invalid_argument("dmft: avg_window must be at least 1");
  if (!(cfg.eta > 0 && cfg.eta <= 1)) throw std::invalid_argument("dmft: eta must be in (0, 1]");
  if (cfg.shots < 1) throw std::invalid_argument("dmft: shots must be at least 1");
}

GreensFit evaluate(const DmftConfig& cfg, double v, int iter, bool exact) {
  SiamParams p = SiamParams::half_filled(cfg.u, v, cfg.t_star);
  if (exact) {
    std::vector<double> times(cfg.n_steps + 1);
    for (int n = 0; n <= cfg.n_steps; ++n) times[n] = cfg.dt * n;
    return fit_series(exact_greens_series(p, times));
  }
  MeasureOptions opt;
  opt.backend = cfg.backend;
  opt.noise = cfg.noise;
  opt.shots = cfg.shots;
  opt.seed = detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(iter));
  opt.prep = cfg.prep;
  std::vector<Circuit> chain;
  if (cfg.use_isl) {
    chain = incremental_chain(p, cfg.dt, cfg.n_steps, cfg.isl, cfg.prep);
    opt.chain = &chain;
  }
  return fit_series(measure_series(p, cfg.dt, cfg.n_steps, opt));
}

void fill_stats(DmftResult& res, const std::vector<double>& window) {
  double mean = 0;
  for (double z : window) mean += z;
  mean /= static_cast<double>(window.size());
  double var = 0;
  for (double z : window) var += (z - mean) * (z - mean);
  res.z_mean = mean;
  res.z_std = window.size() > 1 ? std::sqrt(var / static_cast<double>(window.size() - 1)) : 0.0;
}

DmftResult drive(const DmftConfig& cfg, bool exact) {
  check_config(cfg);
  // Below this the low fitted frequency, which scales like V^2 on the
  // insulating side, winds too little over the sampled window for the fit to
  // pin it down, so the update would be garbage. A hybridization this small
  // is already the collapsed V=0 solution for any practical purpose.
  const double v_floor = 0.05 * cfg.t_star;
  const bool deterministic = exact || cfg.backend == Backend::Statevector;

  DmftResult res;
  double v = cfg.v_init;
  int remaining = -1;  // iterations left in the averaging window, <0 = not started
  std::vector<double> window;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (v < v_floor && !res.trace.empty()) {
      res.converged = true;
      res.v_final = v;
      if (window.empty()) {
        res.z_mean = res.trace.back().z;
        res.z_std = 0;
      } else {
        fill_stats(res, window);
      }
      return res;
    }

    GreensFit fit = evaluate(cfg, v, iter, exact);
    double z = quasiparticle_weight(fit, v);
    double v_raw = update_hybridization(z, cfg.t_star);
    res.trace.push_back({iter, v, fit.alpha, fit.omega1, fit.omega2, z});
    res.iters = iter + 1;

    if (remaining < 0 && std::abs(v_raw - v) <= cfg.sc_tol) {
      res.converged = true;
      if (res.trace.size() >= 2) {
        double z_prev = res.trace[res.trace.size() - 2].z;
        if (std::abs(z - z_prev) > 0.5 * std::max(z_prev, 1e-12)) res.spurious = true;
      }
      if (deterministic) {
        // Exact fixpoint, no sampling scatter to average over.
        res.v_final = v_raw;
        res.z_mean = z;
        res.z_std = 0;
        return res;
      }
      remaining = cfg.avg_window;
    } else if (remaining > 0) {
      window.push_back(z);
      if (--remaining == 0) {
        fill_stats(res, window);
        res.v_final = std::sqrt(res.z_mean) * cfg.t_star;
        return res;
      }
    }

    v = (1.0 - cfg.eta) * v + cfg.eta * v_raw;
  }

  // Out of iterations. Keep whatever was learned; converged stays false
  // unless the threshold was hit and only the averaging window was cut short.
  if (!window.empty()) {
    fill_stats(res, window);
    res.v_final = std::sqrt(res.z_mean) * cfg.t_star;
  } else {
    res.v_final = v;
    if (!res.trace.empty()) res.z_mean = res.trace.back().z;
  }
  return res;
}

}  // namespace

DmftResult run_dmft(const DmftConfig& cfg) { return drive(cfg, false); }

DmftResult run_dmft_exact(const DmftConfig& cfg) { return drive(cfg, true); }

}  // namespace qdmft
