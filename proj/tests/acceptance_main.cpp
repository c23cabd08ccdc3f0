// End-to-end acceptance checks, one line per criterion, exit code equal to
// the number of failures. Tolerances are pinned inline next to each check.

#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qdmft/density.hpp"
#include "qdmft/dmft.hpp"
#include "qdmft/greens.hpp"
#include "qdmft/isl.hpp"
#include "qdmft/noise.hpp"
#include "qdmft/siam.hpp"
#include "qdmft/stateprep.hpp"
#include "qdmft/statevector.hpp"
#include "qdmft/transpile.hpp"
#include "test_util.hpp"

using namespace qdmft;
using json = nlohmann::json;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

double secs(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

void report(int n, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << n << ". " << name;
  if (!detail.empty()) std::cout << "  [" << detail << "]";
  std::cout << std::endl;
  if (!pass) ++failures;
}

template <typename F>
void criterion(int n, const std::string& name, F&& body) {
  try {
    bool pass = false;
    std::string detail;
    body(pass, detail);
    report(n, name, pass, detail);
  } catch (const std::exception& e) {
    report(n, name, false, std::string("exception: ") + e.what());
  }
}

// Tight statevector reference for the noisy-run comparisons; the noisy runs
// share its discretization (N = 24, dt = 0.5) and differ only in backend.
double baseline_z() {
  static std::optional<double> z0;
  if (!z0) {
    DmftConfig c;
    c.u = 4.0;
    c.backend = Backend::Statevector;
    c.sc_tol = 1e-6;
    c.max_iters = 500;
    z0 = run_dmft(c).z_mean;
  }
  return *z0;
}

double concurrence_oracle(const Eigen::Matrix4cd& rho) {
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1; yy(1, 2) = 1; yy(2, 1) = 1; yy(3, 0) = -1;
  const Eigen::Matrix4cd r = rho * yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(r);
  std::array<double, 4> lam;
  for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double eof_oracle(double c) {
  const double x = (1 + std::sqrt(1 - c * c)) / 2;
  if (x <= 0 || x >= 1) return 0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf); // criteria can take minutes, stream lines

  criterion(1, "noninteracting fixpoint via the CLI", [](bool& pass, std::string& d) {
    const fs::path out =
        fs::temp_directory_path() / ("accept_u0_" + std::to_string(getpid()) + ".json");
    const auto t0 = clk::now();
    const std::string cmd = std::string(QDMFT_CLI_PATH) +
                            " dmft-run --u 0 --backend statevector > " + out.string() +
                            " 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    const double wall = secs(t0);
    if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
      d = "exit code " + std::to_string(WEXITSTATUS(rc));
      return;
    }
    std::ifstream in(out);
    const json j = json::parse(in);
    const double dz = std::abs(j.at("z_mean").get<double>() - 1.0);
    const double dv = std::abs(j.at("v_final").get<double>() - 1.0);
    pass = dz <= 1e-6 && dv <= 1e-6 && wall < 10.0;
    d = "|Z-1|=" + num(dz) + ", |V-t*|=" + num(dv) + ", " + num(wall) + " s";
  });

  criterion(2, "interaction sweep locates the metal-insulator onset", [](bool& pass, std::string& d) {
    const auto t0 = clk::now();
    std::vector<double> us, zs;
    std::vector<bool> insulating;
    for (double u = 5.0; u <= 7.0 + 1e-9; u += 0.25) {
      DmftConfig c;
      c.u = u;
      c.backend = Backend::Statevector;
      c.dt = 0.25;
      c.n_steps = 48;
      c.sc_tol = 1e-3;
      c.max_iters = 300;
      const DmftResult r = run_dmft(c);
      us.push_back(u);
      zs.push_back(r.z_mean);
      insulating.push_back(r.spurious || r.z_mean < 0.05);
    }
    double onset = 0;
    for (std::size_t i = 1; i < us.size(); ++i) {
      if (!insulating[i - 1] && insulating[i]) {
        onset = (us[i - 1] + us[i]) / 2;
        break;
      }
    }
    const double wall = secs(t0);
    pass = onset >= 5.5 && onset <= 6.5 && wall < 600.0;
    d = "onset=" + num(onset) + ", Z(5.0)=" + num(zs.front()) + ", Z(7.0)=" +
        num(zs.back()) + ", " + num(wall) + " s";
  });

  criterion(3, "circuit loop matches the diagonalization loop", [](bool& pass, std::string& d) {
    const auto t0 = clk::now();
    double worst = 0;
    for (double u : {2.0, 3.0, 4.0}) {
      DmftConfig c;
      c.u = u;
      c.backend = Backend::Statevector;
      c.dt = 0.125;
      c.n_steps = 48;
      c.sc_tol = 1e-3;
      c.max_iters = 300;
      const double z_circ = run_dmft(c).z_mean;
      DmftConfig e = c;
      e.sc_tol = 1e-9;
      e.max_iters = 1000;
      const double z_ed = run_dmft_exact(e).z_mean;
      worst = std::max(worst, std::abs(z_circ / z_ed - 1.0));
    }
    const double wall = secs(t0);
    pass = worst <= 0.03 && wall < 300.0;
    d = "max rel dev=" + num(worst) + ", " + num(wall) + " s";
  });

  criterion(4, "time-step refinement shrinks the response error", [](bool& pass, std::string& d) {
    const SiamParams p = SiamParams::half_filled(4.0, 1.0);
    auto maxdev = [&](int n) {
      const double dt = 12.0 / n;
      MeasureOptions opt;
      const GreensSeries got = measure_series(p, dt, n, opt);
      const GreensSeries want = exact_greens_series(p, got.times);
      double dev = 0;
      for (std::size_t i = 0; i < got.values.size(); ++i)
        dev = std::max(dev, std::abs(got.values[i] - want.values[i]));
      return dev;
    };
    const double d24 = maxdev(24), d48 = maxdev(48);
    const double ratio = d24 / d48;
    // doubling the step count must cut the worst deviation at least in half
    // (20% grace); here it lands near fourfold because the response is even
    // in the splitting defect at this symmetric point, so the ceiling sits
    // at 4 plus the same grace
    pass = ratio >= 1.6 && ratio <= 4.8;
    d = "maxdev 24=" + num(d24) + ", 48=" + num(d48) + ", ratio=" + num(ratio);
  });

  criterion(5, "noise presets reproduce their nameplate fidelities", [](bool& pass, std::string& d) {
    struct Row { char name; double f, tol; };
    const Row rows[] = {{'A', 0.9999, 1e-4}, {'B', 0.99999, 1e-5},
                        {'C', 0.980, 1e-3}, {'E', 0.999, 1e-3}};
    bool ok = true;
    double worst = 0;
    for (const Row& r : rows) {
      const double f = fidelity_report(preset(r.name)).cnot.process;
      worst = std::max(worst, std::abs(f - r.f) / r.tol);
      ok = ok && std::abs(f - r.f) <= r.tol;
    }
    // with relaxation off the depolarizing strength is the whole infidelity
    double limdev = 0;
    for (double lam : {1e-4, 1e-3, 1e-2}) {
      NoiseParams np;
      np.lambda1 = lam;
      np.lambda2 = lam;
      const FidelityReport rep = fidelity_report(np);
      limdev = std::max(limdev, std::abs((1 - rep.cnot.process) - lam));
      limdev = std::max(limdev, std::abs((1 - rep.u3.process) - lam));
    }
    ok = ok && limdev <= 1e-9;
    pass = ok;
    d = "worst nameplate dev=" + num(worst) + " of tolerance, pure-depol dev=" + num(limdev);
  });

  criterion(6, "shot sampling stays inside the 0.015 floor", [](bool& pass, std::string& d) {
    const SiamParams p = SiamParams::half_filled(4.0, 1.0);
    MeasureOptions sv;
    const GreensSeries ref = measure_series(p, 0.5, 24, sv);
    int good = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      MeasureOptions o;
      o.backend = Backend::Density;
      o.shots = 75000;
      o.seed = seed;
      const GreensSeries got = measure_series(p, 0.5, 24, o);
      for (std::size_t i = 0; i < got.values.size(); ++i) {
        ++total;
        if (std::abs(got.values[i] - ref.values[i]) <= 0.015) ++good;
      }
    }
    const double frac = double(good) / total;
    pass = frac >= 0.95;
    d = std::to_string(good) + "/" + std::to_string(total) + " points in band";
  });

  criterion(7, "noisy loops track the clean fixpoint", [](bool& pass, std::string& d) {
    const double z0 = baseline_z();
    const auto t0 = clk::now();

    DmftConfig ca;
    ca.u = 4.0;
    ca.backend = Backend::Density;
    ca.noise = preset('A');
    ca.seed = 7;
    const DmftResult ra = run_dmft(ca);
    const double wall_a = secs(t0);
    const double rel_a = std::abs(ra.z_mean / z0 - 1.0);

    const auto t1 = clk::now();
    DmftConfig cb = ca;
    cb.noise = preset('B');
    const DmftResult rb = run_dmft(cb);
    const double wall_b = secs(t1);
    const double dev_b = std::abs(rb.z_mean - z0);

    pass = rel_a <= 0.10 && dev_b <= 2 * rb.z_std && wall_a < 3600 && wall_b < 3600;
    d = "Z0=" + num(z0) + ", A rel dev=" + num(rel_a) + " (" + num(wall_a) +
        " s), B dev=" + num(dev_b) + " vs 2sigma=" + num(2 * rb.z_std) + " (" +
        num(wall_b) + " s)";
  });

  criterion(8, "recompiled chains are compact and leave Z unmoved", [](bool& pass, std::string& d) {
    const SiamParams p = SiamParams::half_filled(4.0, 0.745);
    const IslConfig cfg;
    std::vector<IslStats> st;
    const auto chain = incremental_chain(p, 0.5, 24, cfg, nullptr, &st);

    long worst_two = 0, worst_single = 0;
    for (const IslStats& s : st) {
      worst_two = std::max(worst_two, s.n_two);
      worst_single = std::max(worst_single, s.n_single);
    }

    const Circuit gs = state_prep_circuit(exact_ground_state(p).amplitudes);
    const Circuit step = trotter_step_circuit(p, 0.5);
    Circuit evo(4);
    double worst_overlap = 1.0;
    for (int n = 1; n <= 24; ++n) {
      evo.append(step);
      const StateVector exact = run_statevector(greens_prefix(gs, evo));
      const StateVector rc = run_statevector(chain[n - 1]);
      worst_overlap = std::min(
          worst_overlap, std::norm((exact.amps().adjoint() * rc.amps())(0, 0)));
    }
    const double budget = 1 - 24 * cfg.cost_threshold;

    DmftConfig c;
    c.u = 4.0;
    c.backend = Backend::Statevector;
    c.sc_tol = 1e-3;
    c.max_iters = 100;
    const double z_plain = run_dmft(c).z_mean;
    c.use_isl = true;
    const double z_isl = run_dmft(c).z_mean;
    const double shift = std::abs(z_isl / z_plain - 1.0);

    pass = worst_two <= 12 && worst_single <= 22 && worst_overlap >= budget &&
           shift <= 0.02;
    d = "worst " + std::to_string(worst_two) + " two/" + std::to_string(worst_single) +
        " single, overlap=" + num(worst_overlap) + " vs " + num(budget) +
        ", Z shift=" + num(shift);
  });

  criterion(9, "recompilation relaxes the fidelity the loop needs", [](bool& pass, std::string& d) {
    const double z0 = baseline_z();
    const auto t0 = clk::now();

    DmftConfig cd;
    cd.u = 4.0;
    cd.backend = Backend::Density;
    cd.noise = preset('D');
    cd.seed = 7;
    cd.use_isl = true;
    const DmftResult rd = run_dmft(cd);
    const double rel_d = std::abs(rd.z_mean / z0 - 1.0);

    DmftConfig ce = cd;
    ce.noise = preset('E');
    const DmftResult re = run_dmft(ce);
    const double dev_e = std::abs(re.z_mean - z0);

    pass = rel_d <= 0.15 && dev_e <= 2 * re.z_std;
    d = "D rel dev=" + num(rel_d) + ", E dev=" + num(dev_e) + " vs 2sigma=" +
        num(2 * re.z_std) + ", " + num(secs(t0)) + " s";
  });

  criterion(10, "property suites hold", [](bool& pass, std::string& d) {
    // complete positivity and trace preservation through noisy evolution
    int cptp_bad = 0;
    for (int i = 0; i < 100; ++i) {
      const Circuit c = testutil::random_circuit(3, 12, 4000 + i);
      const DensityMatrix rho = run_density(c, preset('C'));
      const Eigen::MatrixXcd& m = rho.matrix();
      bool ok = std::abs(rho.trace_real() - 1.0) <= 1e-9 &&
                (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-9;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((m + m.adjoint()) / 2);
      ok = ok && es.eigenvalues().minCoeff() >= -1e-9;
      if (!ok) ++cptp_bad;
    }

    // every accepted optimizer update must move the cost down
    int mono_bad = 0;
    long updates = 0;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      const Circuit a = testutil::random_circuit(3, 6, seed, true);
      IslConfig cfg;
      isl_recompile(a, cfg, nullptr, [&](double before, double after) {
        ++updates;
        if (after > before + 1e-12) ++mono_bad;
      });
    }

    // two-cosine recovery on synthetic series
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> ua(0.15, 0.85), uw(0.3, 5.5);
    int recovered = 0;
    for (int k = 0; k < 50; ++k) {
      const double alpha = ua(rng);
      double w1 = uw(rng), w2 = uw(rng);
      while (std::abs(w1 - w2) < 0.3) w2 = uw(rng);
      if (w1 > w2) std::swap(w1, w2);
      GreensSeries s;
      for (int i = 0; i <= 48; ++i) {
        const double t = 0.25 * i;
        s.times.push_back(t);
        s.values.push_back(alpha * std::cos(w1 * t) + (1 - alpha) * std::cos(w2 * t));
        s.stderrs.push_back(0.0);
      }
      const GreensFit f = fit_series(s);
      const double err = std::max({std::abs(f.alpha - alpha), std::abs(f.omega1 - w1),
                                   std::abs(f.omega2 - w2)});
      if (err <= 1e-4) ++recovered;
    }

    // entanglement ground cases against the closed-form oracle
    Circuit bell(2);
    bell.h(0).cnot(0, 1);
    const Eigen::Matrix4cd rho_bell = partial_trace(run_statevector(bell), 0, 1);
    Circuit prod(2);
    prod.h(0).rx(1, 0.3);
    const Eigen::Matrix4cd rho_prod = partial_trace(run_statevector(prod), 0, 1);
    const Eigen::Matrix4cd werner =
        0.9 * rho_bell + 0.1 * Eigen::Matrix4cd::Identity() / 4;
    const bool eof_ok =
        std::abs(entanglement_of_formation(rho_bell) - 1.0) <= 1e-9 &&
        std::abs(entanglement_of_formation(rho_prod)) <= 1e-9 &&
        std::abs(entanglement_of_formation(werner) -
                 eof_oracle(concurrence_oracle(werner))) <= 1e-9;

    pass = cptp_bad == 0 && mono_bad == 0 && updates > 0 && recovered == 50 && eof_ok;
    d = "cptp bad=" + std::to_string(cptp_bad) + ", monotonicity bad=" +
        std::to_string(mono_bad) + "/" + std::to_string(updates) + ", fits=" +
        std::to_string(recovered) + "/50, eof=" + (eof_ok ? "ok" : "bad");
  });

  std::cout << (failures == 0 ? "all criteria passed" :
                std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
