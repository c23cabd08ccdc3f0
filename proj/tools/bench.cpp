// Timing harness: the OpenMP statevector kernels against the serial dense
// matrix-product reference on random basis-gate circuits. The reference is
// exact, so the deviation column doubles as a correctness check.

#include <chrono>
#include <cstdio>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qdmft/circuit.hpp"
#include "qdmft/dense.hpp"
#include "qdmft/statevector.hpp"

using namespace qdmft;

namespace {

Circuit random_circuit(int n_qubits, int n_ops, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_int_distribution<int> pick_q(0, n_qubits - 1);
  std::uniform_int_distribution<int> pick_kind(0, 3);
  Circuit c(n_qubits);
  for (int i = 0; i < n_ops; ++i) {
    const int q = pick_q(rng);
    switch (pick_kind(rng)) {
      case 0: c.u1(q, angle(rng)); break;
      case 1: c.u2(q, angle(rng), angle(rng)); break;
      case 2: c.u3(q, angle(rng), angle(rng), angle(rng)); break;
      default: {
        int t = pick_q(rng);
        while (t == q) t = pick_q(rng);
        c.cnot(q, t);
      }
    }
  }
  return c;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP off)\n");
#endif
  // the reference cost scales as ops * 8^n, so it stops at n = 7; above that
  // the kernels are timed alone
  const int dense_cap = 7;
  std::printf("%3s %6s %12s %12s %10s\n", "n", "ops", "kernels_ms", "dense_ms", "maxdev");
  for (int n = 4; n <= 10; ++n) {
    const int ops = 40 * n;
    const Circuit c = random_circuit(n, ops, 1000 + n);

    auto t0 = std::chrono::steady_clock::now();
    const StateVector psi = run_statevector(c);
    const double sv_ms = ms_since(t0);

    if (n > dense_cap) {
      std::printf("%3d %6d %12.3f %12s %10s\n", n, ops, sv_ms, "-", "-");
      continue;
    }

    t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXcd u = dense_unitary(c);
    const double dm_ms = ms_since(t0);

    double dev = 0;
    for (long i = 0; i < (1L << n); ++i)
      dev = std::max(dev, std::abs(psi.amps()[i] - u(i, 0)));
    std::printf("%3d %6d %12.3f %12.3f %10.2e\n", n, ops, sv_ms, dm_ms, dev);
  }
  return 0;
}
