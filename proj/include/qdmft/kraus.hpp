#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qdmft {

// CPTP map as Kraus operators, all 2^arity square. validate() enforces the
// completeness sum to 1e-10.
struct KrausChannel {
  int arity = 1;
  std::vector<Eigen::MatrixXcd> ops;

  static KrausChannel identity(int arity);
  void validate() const;
  bool is_identity(double tol = 1e-14) const;
};

// Applies `first` then `second`; both must share an arity. The result is
// compressed to minimal Kraus rank.
KrausChannel compose(const KrausChannel& first, const KrausChannel& second);

// Rewrites the channel with at most dim^2 Kraus operators via the Choi
// eigendecomposition. Channel action is unchanged; only the (non-unique)
// operator decomposition differs.
KrausChannel compress(const KrausChannel& ch);

// Two-qubit channel from independent single-qubit channels; `low` acts on the
// pair's first qubit (local bit 0), `high` on the second (local bit 1).
KrausChannel tensor(const KrausChannel& low, const KrausChannel& high);

}  // namespace qdmft
