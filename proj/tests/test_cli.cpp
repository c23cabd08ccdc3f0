#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qdmft/circuit.hpp"
#include "qdmft/statevector.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string cli = QDMFT_CLI_PATH;

fs::path scratch() {
  static fs::path d = [] {
    fs::path p = fs::temp_directory_path() / ("qdmft_cli_" + std::to_string(getpid()));
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int run(const std::string& args, const fs::path& out = "/dev/null",
        const fs::path& err = "/dev/null") {
  const std::string cmd =
      cli + " " + args + " > " + out.string() + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

// csv cell by column index
double cell(const std::string& row, int col) {
  std::istringstream ss(row);
  std::string tok;
  for (int i = 0; i <= col; ++i) REQUIRE(std::getline(ss, tok, ','));
  return std::stod(tok);
}

}  // namespace

TEST_CASE("zero interaction run reports unit weight") {
  const fs::path out = scratch() / "u0.json";
  CHECK(run("dmft-run --u 0 --backend statevector", out) == 0);
  const json j = json::parse(slurp(out));
  CHECK(j.at("converged").get<bool>());
  CHECK_FALSE(j.at("spurious").get<bool>());
  CHECK(std::abs(j.at("z_mean").get<double>() - 1.0) < 1e-6);
  CHECK(std::abs(j.at("v_final").get<double>() - 1.0) < 1e-6);
  CHECK(j.at("u").get<double>() == 0.0);
  CHECK(j.at("t_star").get<double>() == 1.0);
}

TEST_CASE("config files set defaults and explicit flags win") {
  const fs::path cfg = scratch() / "run.json";
  const fs::path out = scratch() / "cfg.json";

  write_file(cfg, "{\"u\": 9.0, \"backend\": \"statevector\"}");
  CHECK(run("dmft-run --config " + cfg.string() + " --u 0", out) == 0);
  const json j = json::parse(slurp(out));
  CHECK(j.at("u").get<double>() == 0.0);
  CHECK(std::abs(j.at("z_mean").get<double>() - 1.0) < 1e-6);

  const fs::path bad = scratch() / "bad.json";
  const fs::path err = scratch() / "bad.err";
  write_file(bad, "{\"bogus_key\": 1}");
  CHECK(run("dmft-run --config " + bad.string() + " --u 0", "/dev/null", err) == 2);
  CHECK(slurp(err).find("unknown key 'bogus_key'") != std::string::npos);
}

TEST_CASE("iteration cap surfaces as the non-convergence exit code") {
  const fs::path out = scratch() / "cap.json";
  CHECK(run("dmft-run --u 4 --backend statevector --max-iters 2 --sc-tol 1e-9", out) == 3);
  const json j = json::parse(slurp(out));
  CHECK_FALSE(j.at("converged").get<bool>());
  CHECK(j.at("iters").get<int>() == 2);
}

TEST_CASE("density backend refuses to run without a seed") {
  const fs::path err = scratch() / "seed.err";
  CHECK(run("dmft-run --u 0 --backend density", "/dev/null", err) == 2);
  CHECK(slurp(err).find("--seed is required") != std::string::npos);

  CHECK(run("greens --u 0 --backend density", "/dev/null", err) == 2);
  CHECK(slurp(err).find("--seed is required") != std::string::npos);
}

TEST_CASE("response series is an exact cosine at zero interaction") {
  const fs::path out = scratch() / "g.csv";
  CHECK(run("greens --u 0 --v 1 --dt 0.5 --n 6 --backend statevector --out " +
            out.string()) == 0);
  const auto rows = lines(slurp(out));
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == "tau,iG,stderr");
  for (int i = 1; i < 8; ++i) {
    const double tau = cell(rows[i], 0);
    CHECK(tau == doctest::Approx(0.5 * (i - 1)));
    CHECK(cell(rows[i], 1) == doctest::Approx(std::cos(tau)).epsilon(1e-9));
    CHECK(cell(rows[i], 2) == 0.0);
  }
}

TEST_CASE("sampled runs are reproducible for a fixed seed") {
  const fs::path a = scratch() / "d1.csv";
  const fs::path b = scratch() / "d2.csv";
  const std::string args = "greens --u 2 --v 1 --dt 0.5 --n 4 --backend density "
                           "--shots 2000 --seed 11 --out ";
  CHECK(run(args + a.string()) == 0);
  CHECK(run(args + b.string()) == 0);
  const std::string ca = slurp(a);
  CHECK(ca == slurp(b));
  // sampled columns actually moved off the exact values
  const auto rows = lines(ca);
  REQUIRE(rows.size() == 6);
  CHECK(cell(rows[2], 2) > 0.0);
}

TEST_CASE("infidelity map emits the requested grid") {
  const fs::path out = scratch() / "f.csv";
  CHECK(run("fidelity-map --tmin 0.01 --tmax 1 --tn 3 --lmin 1e-4 --lmax 1e-4 --ln 1 "
            "--out " + out.string()) == 0);
  const auto rows = lines(slurp(out));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "t_relax_s,lambda,infidelity");
  // longer relaxation time means less decay on a fixed-duration gate
  CHECK(cell(rows[1], 2) > cell(rows[2], 2));
  CHECK(cell(rows[2], 2) > cell(rows[3], 2));
  CHECK(cell(rows[3], 2) > 0.0);
}

TEST_CASE("recompiled circuits round trip through the text format") {
  const fs::path in = scratch() / "bell.txt";
  const fs::path rc = scratch() / "bell_rc.txt";
  const fs::path stats = scratch() / "bell_stats.json";
  write_file(in, "QUBITS 2\nH 0\nCNOT 0,1\n");
  CHECK(run("isl-recompile --in " + in.string() + " --threshold 1e-6 --out " +
            rc.string(), stats) == 0);
  const json j = json::parse(slurp(stats));
  CHECK(j.at("final_cost").get<double>() < 1e-6);
  CHECK(j.at("n_two").get<int>() <= 2);

  using namespace qdmft;
  const Circuit c = from_text(slurp(rc));
  const StateVector got = run_statevector(c);
  Circuit bell(2);
  bell.h(0).cnot(0, 1);
  const StateVector want = run_statevector(bell);
  CHECK(std::norm((want.amps().adjoint() * got.amps())(0, 0)) > 1 - 1e-6);
}

TEST_CASE("hopeless layer budgets exit with the recompilation code") {
  const fs::path in = scratch() / "hard.txt";
  const fs::path err = scratch() / "hard.err";
  write_file(in, "QUBITS 3\nH 0\nCNOT 0,1\nCNOT 1,2\nU3 0 0.3 0.2 0.9\nCNOT 0,2\nU2 1 0.4 0.8\n");
  CHECK(run("isl-recompile --in " + in.string() + " --max-layers 1", "/dev/null", err) == 4);
  CHECK(slurp(err).find("recompilation failed") != std::string::npos);
}

TEST_CASE("sweeps emit one row per interaction and support a baseline column") {
  const fs::path out = scratch() / "s.csv";
  CHECK(run("dmft-sweep --u-min 0 --u-max 0.5 --u-step 0.5 --backend statevector "
            "--out " + out.string()) == 0);
  const auto rows = lines(slurp(out));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "U,Z_mean,Z_err,converged,iters");
  CHECK(cell(rows[1], 0) == 0.0);
  CHECK(cell(rows[1], 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cell(rows[1], 3) == 1.0);

  const fs::path rel = scratch() / "s_rel.csv";
  CHECK(run("dmft-sweep --u-min 0 --u-max 0.5 --u-step 0.5 --backend statevector "
            "--relative-to " + out.string() + " --out " + rel.string()) == 0);
  const auto rrows = lines(slurp(rel));
  REQUIRE(rrows.size() == 3);
  CHECK(rrows[0] == "U,Z_mean,Z_err,converged,iters,Z_rel");
  CHECK(cell(rrows[1], 5) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cell(rrows[2], 5) == doctest::Approx(1.0).epsilon(1e-9));
}
