#include "qdmft/stateprep.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qdmft/dense.hpp"
#include "qdmft/transpile.hpp"

namespace qdmft {

namespace {

// Angle table for one multiplexed rotation; entries without an amplitude
// behind them stay unset so control-merging can treat them as wildcards.
using AngleTable = std::vector<std::optional<double>>;

bool angles_close(double a, double b) { return std::abs(a - b) < 1e-12; }

// Drops controls the table does not actually depend on. Control bit t is
// removable when every pair differing only in t is compatible (equal or at
// least one wildcard). Returns the reduced table plus the surviving controls.
void reduce_controls(AngleTable& t, std::vector<int>& controls) {
  bool changed = true;
  while (changed && !controls.empty()) {
    changed = false;
    for (std::size_t bit = controls.size(); bit-- > 0;) {
      const std::size_t half = t.size() / 2;
      const std::size_t stride = std::size_t{1} << bit;
      bool mergeable = true;
      for (std::size_t j = 0; j < t.size() && mergeable; ++j) {
        if (j & stride) continue;
        const auto& lo = t[j];
        const auto& hi = t[j + stride];
        if (lo && hi && !angles_close(*lo, *hi)) mergeable = false;
      }
      if (!mergeable) continue;
      AngleTable merged(half);
      std::size_t out = 0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (j & stride) continue;
        merged[out++] = t[j] ? t[j] : t[j + stride];
      }
      t = std::move(merged);
      controls.erase(controls.begin() + static_cast<long>(bit));
      changed = true;
      break;
    }
  }
}

// Emits the multiplexed rotation R(angle[b]) on `target`, selected by the
// basis state b of `controls` (control k = bit k of b), using the Gray-code
// walk: 2^c rotations interleaved with 2^c CNOTs.
void emit_multiplexed(Circuit& c, Gate axis, int target, AngleTable table,
                      std::vector<int> controls) {
  reduce_controls(table, controls);
  std::vector<double> alpha(table.size());
  bool any = false;
  for (std::size_t j = 0; j < table.size(); ++j) {
    alpha[j] = table[j].value_or(0.0);
    any = any || std::abs(alpha[j]) > 1e-12;
  }
  if (!any) return;

  auto rotate = [&](double angle) {
    if (axis == Gate::Ry)
      c.ry(target, angle);
    else
      c.rz(target, angle);
  };

  if (controls.empty()) {
    rotate(alpha[0]);
    return;
  }

  const std::size_t n = alpha.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gray = i ^ (i >> 1);
    double theta = 0;
    for (std::size_t j = 0; j < n; ++j)
      theta += (__builtin_popcountll(gray & j) & 1) ? -alpha[j] : alpha[j];
    rotate(theta / static_cast<double>(n));
    std::size_t flip = (i + 1 < n) ? static_cast<std::size_t>(__builtin_ctzll(i + 1))
                                   : controls.size() - 1;
    c.cnot(controls[flip], target);
  }
}

}  // namespace

Circuit state_prep_circuit(const Eigen::VectorXcd& amplitudes) {
  const long dim = amplitudes.size();
  int n = 0;
  while ((1L << n) < dim) ++n;
  if (dim < 2 || (1L << n) != dim)
    throw std::invalid_argument("amplitude count must be a power of two, >= 2");
  if (std::abs(amplitudes.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("state must be normalized");

  // Walk qubits low to high, rotating each pair (even, odd) onto its even
  // component with a per-branch RZ then RY. What is emitted here sends the
  // target to |0...0>; the returned circuit is its inverse.
  Circuit disentangler(n);
  Eigen::VectorXcd a = amplitudes;
  for (int q = 0; q < n; ++q) {
    const long pairs = a.size() / 2;
    AngleTable lambda(pairs), theta(pairs);
    for (long j = 0; j < pairs; ++j) {
      const cd u = a(2 * j), v = a(2 * j + 1);
      const double nu = std::abs(u), nv = std::abs(v);
      if (nu < 1e-12 && nv < 1e-12) continue;  // nothing here; wildcard
      if (nv >= 1e-12 && nu >= 1e-12) lambda[j] = std::arg(u) - std::arg(v);
      theta[j] = -2 * std::atan2(nv, nu);
    }
    std::vector<int> controls(static_cast<std::size_t>(n - q - 1));
    for (std::size_t t = 0; t < controls.size(); ++t)
      controls[t] = q + 1 + static_cast<int>(t);
    emit_multiplexed(disentangler, Gate::Rz, q, lambda, controls);
    emit_multiplexed(disentangler, Gate::Ry, q, theta, controls);

    // Propagate exactly what the chosen angles do, wildcards included.
    Eigen::VectorXcd next(pairs);
    for (long j = 0; j < pairs; ++j) {
      const double l = lambda[j].value_or(0.0), t = theta[j].value_or(0.0);
      const cd u = std::exp(cd(0, -l / 2)) * a(2 * j);
      const cd v = std::exp(cd(0, l / 2)) * a(2 * j + 1);
      next(j) = std::cos(t / 2) * u - std::sin(t / 2) * v;
    }
    a = next;
  }

  return cleanup_transpile(lower_to_basis(cleanup_transpile(inverse(disentangler))));
}

}  // namespace qdmft
