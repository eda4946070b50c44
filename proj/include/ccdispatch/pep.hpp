#pragma once

#include <cstdint>
#include <vector>

#include "ccdispatch/scenario.hpp"
#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// Candidate p-efficient point: v^t = min(ell_p^t, min over kept samples of
/// W_s^t), with exactly ceil(p * N_s) samples kept.
struct PePoint {
  Vector v;
  std::vector<std::uint8_t> kept;
  double objective = 0.0;

  Index kept_count() const;
};

struct BnbStats {
  std::int64_t nodes = 0;
  double root_bound = 0.0;
  double incumbent = 0.0;
};

/// Maximizes lambda' v over the sampled p-efficient set by branch and bound
/// (best-bound order, exact). Ties in the objective resolve to the
/// lexicographically smallest kept-index set.
PePoint solve_mip(const ScenarioSet& set, double p, const Vector& lambda,
                  const Vector& ell_p, BnbStats* stats = nullptr);

/// Exact reference: enumerates all kept subsets of quota size. Guarded to
/// N_s <= 20.
PePoint solve_exhaustive(const ScenarioSet& set, double p, const Vector& lambda,
                         const Vector& ell_p);

}  // namespace ccdispatch
