#pragma once

#include <string>
#include <vector>

#include "ccdispatch/microgrid.hpp"
#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// Convex quadratic program in canonical form
///   min 1/2 x' diag(q_diag) x + c' x
///   s.t. a_eq x = b_eq,  a_in x <= b_in.
/// Variable bounds are folded into the inequality block. coupling_rows[t] is
/// the index of the inequality row carrying the slot-t supply-demand coupling.
struct Qp {
  Index n_vars = 0;
  Vector q_diag;
  Vector c;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_in;
  Vector b_in;
  std::vector<Index> coupling_rows;

  Index num_eq() const { return a_eq.rows(); }
  Index num_in() const { return a_in.rows(); }

  double objective(const Vector& x) const {
    return 0.5 * x.dot(q_diag.cwiseProduct(x)) + c.dot(x);
  }

  /// Throws ConfigError on dimension mismatches, ConvexityError on negative
  /// curvature, StructureError on bad coupling tags.
  void check() const;

  /// Plain-text dump of (Q, c, A_eq, b_eq, A_in, b_in) for cross-checking
  /// against external tools.
  std::string dump() const;
};

enum class QpStatus { optimal, infeasible, unbounded, max_iter };

const char* to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max_residual() const;
};

struct QpSolution {
  Vector x;
  double value = 0.0;
  Vector duals_in;  // >= 0, one per inequality row
  Vector duals_eq;  // one per equality row
  QpStatus status = QpStatus::max_iter;
  KktResiduals kkt;  // scaled by 1 + ||data||_inf
  int iterations = 0;
  std::string note;  // infeasibility certificate / diagnostics
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

/// Primal-dual interior-point solve (Mehrotra predictor-corrector, dense).
QpSolution solve(const Qp& qp, const QpOptions& opts = {});

/// Multipliers of the tagged coupling rows, in slot order t = 0..T-1.
Vector coupling_duals(const QpSolution& sol, const Qp& qp);

/// Assemble the dispatch QP for `cfg` with coupling right-hand side `rhs`
/// (length T): all deterministic constraints plus g^t(x) <= rhs^t, the latter
/// tagged in coupling_rows. Only b_in on the coupling rows depends on rhs.
Qp build_qp(const MicrogridConfig& cfg, const Vector& rhs);

}  // namespace ccdispatch
