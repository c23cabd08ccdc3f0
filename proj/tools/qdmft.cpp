// Experiment runner: fidelity maps, response-function measurement, DMFT
// self-consistency runs and sweeps, circuit recompilation. CSV goes to --out
// (stdout when omitted), JSON summaries to stdout. Exit codes: 0 success,
// 2 configuration error, 3 a DMFT run failed to converge, 4 recompilation
// failed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "qdmft/circuit.hpp"
#include "qdmft/dmft.hpp"
#include "qdmft/greens.hpp"
#include "qdmft/isl.hpp"
#include "qdmft/noise.hpp"
#include "qdmft/siam.hpp"
#include "qdmft/statevector.hpp"
#include "qdmft/transpile.hpp"

namespace {

using nlohmann::json;
using namespace qdmft;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// CSV sink: a file when --out is given, stdout otherwise.
struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::invalid_argument("cannot open output file: " + path);
      os = &file;
    }
  }
  std::ostream& out() { return *os; }
};

std::vector<double> log_grid(double lo, double hi, int n) {
  if (lo <= 0 || hi < lo || n < 1) throw std::invalid_argument("bad grid bounds");
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double r = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i);
  g.back() = hi;
  return g;
}

// Flags shared by every command that touches the noise model.
struct NoiseFlags {
  std::string preset_name;
  double t_relax = -1, lambda1 = -1, lambda2 = -1, readout_flip = -1;

  NoiseParams resolve() const {
    NoiseParams n;
    if (!preset_name.empty()) n = preset(preset_name[0]);
    if (t_relax >= 0) n.t_relax = t_relax;
    if (lambda1 >= 0) n.lambda1 = lambda1;
    if (lambda2 >= 0) n.lambda2 = lambda2;
    if (readout_flip >= 0) n.readout_flip = readout_flip;
    return n;
  }
};

void add_noise_flags(CLI::App* sub, NoiseFlags& nf) {
  sub->add_option("--preset", nf.preset_name, "named noise preset")
      ->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
  sub->add_option("--t-relax", nf.t_relax, "relaxation time constant, seconds");
  sub->add_option("--lambda1", nf.lambda1, "single-qubit depolarizing parameter");
  sub->add_option("--lambda2", nf.lambda2, "two-qubit depolarizing parameter");
  sub->add_option("--readout-flip", nf.readout_flip, "measurement flip probability");
}

const std::map<std::string, Backend> kBackends{{"statevector", Backend::Statevector},
                                               {"density", Backend::Density}};

// Config files are flat JSON objects whose keys are the long option names of
// the chosen command; they become defaults that explicit flags override.
std::vector<std::string> config_tokens(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  std::vector<std::string> toks;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "config") throw std::invalid_argument("config: files cannot nest");
    if (!sub->get_option_no_throw("--" + it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' for command '" +
                                  sub->get_name() + "'");
    const json& v = it.value();
    const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    toks.push_back("--" + it.key() + "=" + s);
  }
  return toks;
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-site DMFT on emulated noisy quantum hardware"};
  app.require_subcommand(1);
  int run_code = 0;

  std::string cfg_dummy;
  int jobs = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg_dummy, "JSON config file; flags override its values");
    sub->add_option("--jobs", jobs, "worker thread count")->envname("DMFTQ_JOBS");
  };

  // ---- fidelity-map --------------------------------------------------------
  auto* fm = app.add_subcommand("fidelity-map",
                                "CNOT process infidelity over a (t_relax, lambda) grid");
  struct {
    double tmin = 1e-5, tmax = 1.0, lmin = 1e-6, lmax = 0.05;
    int tn = 25, ln = 25, figure = 0;
    bool with_presets = false;
    std::string out;
  } fa;
  fm->add_option("--tmin", fa.tmin, "smallest t_relax, seconds");
  fm->add_option("--tmax", fa.tmax, "largest t_relax, seconds");
  fm->add_option("--tn", fa.tn, "t_relax grid points");
  fm->add_option("--lmin", fa.lmin, "smallest depolarizing parameter");
  fm->add_option("--lmax", fa.lmax, "largest depolarizing parameter");
  fm->add_option("--ln", fa.ln, "lambda grid points");
  auto* fm_presets = fm->add_flag("--with-presets", fa.with_presets,
                                  "merge the named preset points into the grid");
  fm->add_option("--figure", fa.figure, "figure preset")->check(CLI::IsMember({3}));
  fm->add_option("--out", fa.out, "CSV output path (default stdout)");
  add_common(fm);
  fm->callback([&] {
    apply_jobs(jobs);
    if (fa.figure == 3 && !*fm_presets) fa.with_presets = true;
    std::vector<double> tg = log_grid(fa.tmin, fa.tmax, fa.tn);
    std::vector<double> lg = log_grid(fa.lmin, fa.lmax, fa.ln);
    if (fa.with_presets) {
      for (char c : {'A', 'B', 'C', 'E'}) {
        const NoiseParams q = preset(c);
        tg.push_back(q.t_relax);
        lg.push_back(q.lambda1);
      }
      std::sort(tg.begin(), tg.end());
      tg.erase(std::unique(tg.begin(), tg.end()), tg.end());
      std::sort(lg.begin(), lg.end());
      lg.erase(std::unique(lg.begin(), lg.end()), lg.end());
    }
    const auto rows = infidelity_map(tg, lg, NoiseParams{});
    Sink sink(fa.out);
    sink.out() << "t_relax_s,lambda,infidelity\n";
    for (const auto& r : rows)
      sink.out() << fmt(r.t_relax) << ',' << fmt(r.lambda) << ',' << fmt(r.infidelity)
                 << '\n';
  });

  // ---- greens --------------------------------------------------------------
  auto* gr = app.add_subcommand("greens",
                                "measure the impurity response series and fit it");
  struct {
    double u = 4, v = 1, dt = 0.5;
    int n = 24;
    Backend backend = Backend::Statevector;
    long shots = 75000;
    std::uint64_t seed = 0;
    std::string out;
  } ga;
  NoiseFlags gnoise;
  gr->add_option("--u", ga.u, "on-site interaction");
  gr->add_option("--v", ga.v, "hybridization");
  gr->add_option("--dt", ga.dt, "Trotter step size");
  gr->add_option("--n", ga.n, "Trotter step count");
  gr->add_option("--backend", ga.backend, "simulation engine")
      ->transform(CLI::CheckedTransformer(kBackends, CLI::ignore_case));
  gr->add_option("--shots", ga.shots, "shots per point, density backend");
  auto* gr_seed = gr->add_option("--seed", ga.seed, "sampling seed");
  gr->add_option("--out", ga.out, "CSV output path (default stdout)");
  add_noise_flags(gr, gnoise);
  add_common(gr);
  gr->callback([&] {
    apply_jobs(jobs);
    if (ga.backend == Backend::Density && !*gr_seed)
      throw std::invalid_argument("--seed is required for the density backend");
    const SiamParams p = SiamParams::half_filled(ga.u, ga.v);
    MeasureOptions mo;
    mo.backend = ga.backend;
    mo.noise = gnoise.resolve();
    mo.shots = ga.shots;
    mo.seed = ga.seed;
    const GreensSeries s = measure_series(p, ga.dt, ga.n, mo);
    const GreensFit fit = fit_series(s);
    {
      Sink sink(ga.out);
      sink.out() << "tau,iG,stderr\n";
      for (std::size_t i = 0; i < s.times.size(); ++i)
        sink.out() << fmt(s.times[i]) << ',' << fmt(s.values[i]) << ','
                   << fmt(s.stderrs[i]) << '\n';
    }
    const json jf = {{"alpha", fit.alpha},
                     {"omega1", fit.omega1},
                     {"omega2", fit.omega2},
                     {"residual", fit.residual}};
    std::cout << jf.dump(2) << '\n';
  });

  // ---- dmft-run ------------------------------------------------------------
  auto* dr = app.add_subcommand("dmft-run", "one self-consistent DMFT solve");
  DmftConfig rc;
  bool dr_exact = false;
  std::string dr_trace;
  NoiseFlags rnoise;
  dr->add_option("--u", rc.u, "on-site interaction")->required();
  dr->add_option("--t-star", rc.t_star, "energy unit / target hopping");
  dr->add_option("--v-init", rc.v_init, "starting hybridization");
  dr->add_option("--dt", rc.dt, "Trotter step size");
  dr->add_option("--n", rc.n_steps, "Trotter step count");
  dr->add_option("--backend", rc.backend, "simulation engine")
      ->transform(CLI::CheckedTransformer(kBackends, CLI::ignore_case));
  dr->add_option("--shots", rc.shots, "shots per point, density backend");
  auto* dr_seed = dr->add_option("--seed", rc.seed, "sampling seed");
  dr->add_option("--sc-tol", rc.sc_tol, "self-consistency threshold on |V_new - V|");
  dr->add_option("--max-iters", rc.max_iters, "iteration cap");
  dr->add_option("--avg-window", rc.avg_window, "post-threshold averaging iterations");
  dr->add_option("--eta", rc.eta, "hybridization update damping");
  dr->add_flag("--isl", rc.use_isl, "recompile evolution circuits");
  dr->add_option("--isl-threshold", rc.isl.cost_threshold, "recompilation cost target");
  dr->add_option("--isl-max-layers", rc.isl.max_layers, "recompilation layer cap");
  dr->add_flag("--exact", dr_exact, "use the dense-eigendecomposition series");
  dr->add_option("--trace", dr_trace, "per-iteration CSV output path");
  add_noise_flags(dr, rnoise);
  add_common(dr);
  dr->callback([&] {
    apply_jobs(jobs);
    if (!dr_exact && rc.backend == Backend::Density && !*dr_seed)
      throw std::invalid_argument("--seed is required for the density backend");
    rc.noise = rnoise.resolve();
    rc.isl.seed = rc.seed;
    const DmftResult r = dr_exact ? run_dmft_exact(rc) : run_dmft(rc);
    if (!dr_trace.empty()) {
      Sink sink(dr_trace);
      sink.out() << "iter,V,alpha,omega1,omega2,Z\n";
      for (const auto& it : r.trace)
        sink.out() << it.iter << ',' << fmt(it.v) << ',' << fmt(it.alpha) << ','
                   << fmt(it.omega1) << ',' << fmt(it.omega2) << ',' << fmt(it.z) << '\n';
    }
    const json jr = {{"u", rc.u},           {"t_star", rc.t_star},
                     {"v_final", r.v_final}, {"z_mean", r.z_mean},
                     {"z_std", r.z_std},     {"converged", r.converged},
                     {"spurious", r.spurious}, {"iters", r.iters}};
    std::cout << jr.dump(2) << '\n';
    if (!r.converged) run_code = 3;
  });

  // ---- dmft-sweep ----------------------------------------------------------
  auto* ds = app.add_subcommand("dmft-sweep", "DMFT solves over a range of U");
  DmftConfig sc;
  struct {
    double umin = 2, umax = 6, ustep = 0.5;
    int figure = 0;
    std::string out, relative_to;
  } sa;
  NoiseFlags snoise;
  auto* ds_umin = ds->add_option("--u-min", sa.umin, "first U");
  auto* ds_umax = ds->add_option("--u-max", sa.umax, "last U");
  auto* ds_ustep = ds->add_option("--u-step", sa.ustep, "U increment");
  ds->add_option("--t-star", sc.t_star, "energy unit / target hopping");
  ds->add_option("--v-init", sc.v_init, "starting hybridization");
  auto* ds_dt = ds->add_option("--dt", sc.dt, "Trotter step size");
  auto* ds_n = ds->add_option("--n", sc.n_steps, "Trotter step count");
  auto* ds_backend = ds->add_option("--backend", sc.backend, "simulation engine")
                         ->transform(CLI::CheckedTransformer(kBackends, CLI::ignore_case));
  ds->add_option("--shots", sc.shots, "shots per point, density backend");
  auto* ds_seed = ds->add_option("--seed", sc.seed, "sampling seed");
  auto* ds_sctol = ds->add_option("--sc-tol", sc.sc_tol,
                                  "self-consistency threshold on |V_new - V|");
  ds->add_option("--max-iters", sc.max_iters, "iteration cap");
  ds->add_option("--avg-window", sc.avg_window, "post-threshold averaging iterations");
  ds->add_option("--eta", sc.eta, "hybridization update damping");
  auto* ds_isl = ds->add_flag("--isl", sc.use_isl, "recompile evolution circuits");
  ds->add_option("--isl-threshold", sc.isl.cost_threshold, "recompilation cost target");
  ds->add_option("--isl-max-layers", sc.isl.max_layers, "recompilation layer cap");
  ds->add_option("--relative-to", sa.relative_to,
                 "sweep CSV giving the baseline Z for a Z/Z0 column");
  ds->add_option("--figure", sa.figure, "figure preset")->check(CLI::IsMember({4, 6, 7}));
  ds->add_option("--out", sa.out, "CSV output path (default stdout)");
  add_noise_flags(ds, snoise);
  auto* ds_preset = ds->get_option_no_throw("--preset");
  add_common(ds);
  ds->callback([&] {
    apply_jobs(jobs);
    bool seed_preset = false;
    // Figure presets fill whatever the user (or config file) left untouched.
    if (sa.figure == 4) {
      if (!*ds_backend) sc.backend = Backend::Statevector;
      if (!*ds_n) sc.n_steps = 48;
      if (!*ds_dt) sc.dt = 0.25;
      if (!*ds_sctol) sc.sc_tol = 1e-3;
      if (!*ds_umin) sa.umin = 2;
      if (!*ds_umax) sa.umax = 6;
      if (!*ds_ustep) sa.ustep = 0.5;
    } else if (sa.figure == 6 || sa.figure == 7) {
      if (!*ds_backend) sc.backend = Backend::Density;
      if (!*ds_preset) snoise.preset_name = (sa.figure == 6) ? "B" : "D";
      if (sa.figure == 7 && !*ds_isl) sc.use_isl = true;
      if (!*ds_n) sc.n_steps = 24;
      if (!*ds_dt) sc.dt = 0.5;
      if (!*ds_umin) sa.umin = (sa.figure == 6) ? 1 : 4;
      if (!*ds_umax) sa.umax = (sa.figure == 6) ? 5 : 4;
      if (!*ds_ustep) sa.ustep = 1;
      if (!*ds_seed) {
        sc.seed = 1;
        seed_preset = true;
      }
    }
    if (sc.backend == Backend::Density && !*ds_seed && !seed_preset)
      throw std::invalid_argument("--seed is required for the density backend");
    if (sa.ustep <= 0) throw std::invalid_argument("--u-step must be positive");
    std::vector<double> us;
    for (double u = sa.umin; u <= sa.umax + 1e-9; u += sa.ustep) us.push_back(u);
    if (us.empty()) throw std::invalid_argument("empty U range");

    std::vector<double> z0;
    if (!sa.relative_to.empty()) {
      std::ifstream in(sa.relative_to);
      if (!in) throw std::invalid_argument("cannot open baseline: " + sa.relative_to);
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
          throw std::invalid_argument("baseline: malformed row '" + line + "'");
        z0.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      }
      if (z0.size() != us.size())
        throw std::invalid_argument("baseline length mismatch: " +
                                    std::to_string(z0.size()) + " rows vs " +
                                    std::to_string(us.size()) + " sweep points");
    }

    sc.noise = snoise.resolve();
    std::vector<DmftResult> res(us.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(us.size()); ++i) {
      try {
        DmftConfig c = sc;
        c.u = us[i];
        c.seed = detail::mix_seed(sc.seed, static_cast<std::uint64_t>(i));
        c.isl.seed = c.seed;
        res[i] = run_dmft(c);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    Sink sink(sa.out);
    sink.out() << (z0.empty() ? "U,Z_mean,Z_err,converged,iters\n"
                              : "U,Z_mean,Z_err,converged,iters,Z_rel\n");
    for (std::size_t i = 0; i < us.size(); ++i) {
      const auto& r = res[i];
      sink.out() << fmt(us[i]) << ',' << fmt(r.z_mean) << ',' << fmt(2 * r.z_std) << ','
                 << (r.converged ? 1 : 0) << ',' << r.iters;
      if (!z0.empty()) sink.out() << ',' << fmt(r.z_mean / z0[i]);
      sink.out() << '\n';
      if (!r.converged) run_code = 3;
    }
  });

  // ---- isl-recompile -------------------------------------------------------
  auto* ir = app.add_subcommand("isl-recompile",
                                "approximate a circuit by a grown shallow ansatz");
  struct {
    std::string in, out;
    IslConfig cfg;
  } ia;
  ir->add_option("--in", ia.in, "text-format circuit to recompile")->required();
  ir->add_option("--threshold", ia.cfg.cost_threshold, "stop once 1-|<0|B'A|0>|^2 dips below");
  ir->add_option("--sweep-tol", ia.cfg.sweep_improvement_tol,
                 "relative gain that keeps an optimizer sweep going");
  ir->add_option("--angle-eps", ia.cfg.angle_eps, "cleanup threshold for null rotations");
  ir->add_option("--max-layers", ia.cfg.max_layers, "layer cap before giving up");
  ir->add_option("--seed", ia.cfg.seed, "reserved; growth is deterministic");
  ir->add_option("--out", ia.out, "recompiled circuit path (default stdout)");
  add_common(ir);
  ir->callback([&] {
    apply_jobs(jobs);
    std::ifstream in(ia.in);
    if (!in) throw std::invalid_argument("cannot open circuit file: " + ia.in);
    std::stringstream buf;
    buf << in.rdbuf();
    const Circuit a = from_text(buf.str());
    IslStats st;
    const Circuit b = isl_recompile(a, ia.cfg, &st);
    {
      Sink sink(ia.out);
      sink.out() << to_text(b);
    }
    const json js = {{"layers", st.layers},
                     {"final_cost", st.final_cost},
                     {"n_single", st.n_single},
                     {"n_two", st.n_two},
                     {"depth", st.depth}};
    std::cout << js.dump(2) << '\n';
  });

  // ---- parse with config-file injection ------------------------------------
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string cfg_path;
    std::size_t sub_pos = args.size();
    CLI::App* sub = nullptr;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (!sub) {
        for (CLI::App* s : {fm, gr, dr, ds, ir})
          if (args[i] == s->get_name()) {
            sub = s;
            sub_pos = i;
            break;
          }
      }
      if (args[i] == "--config" && i + 1 < args.size())
        cfg_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0)
        cfg_path = args[i].substr(9);
    }
    if (!cfg_path.empty()) {
      if (!sub) throw std::invalid_argument("--config requires a command");
      const auto toks = config_tokens(sub, cfg_path);
      args.insert(args.begin() + sub_pos + 1, toks.begin(), toks.end());
      // Later occurrences win, so explicit flags override the file.
      for (CLI::App* s : {fm, gr, dr, ds, ir})
        for (CLI::Option* o : s->get_options())
          o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IslError& e) {
    std::cerr << "recompilation failed: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return run_code;
}
