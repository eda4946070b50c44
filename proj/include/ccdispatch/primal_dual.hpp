#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccdispatch/microgrid.hpp"
#include "ccdispatch/pep.hpp"
#include "ccdispatch/qp.hpp"
#include "ccdispatch/scenario.hpp"
#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// State of the column-generation master after an iteration: the generated
/// points, their convex weights, and the coupling multipliers.
struct MasterState {
  std::vector<PePoint> columns;
  Vector alphas;
  Vector lambda;
  double master_value = 0.0;  // includes the storage cost constant
  int iteration = 0;
};

struct Recovery {
  Schedule schedule;
  double cost = 0.0;
  Index column = -1;
  bool feasible = false;
  bool epsilon_optimal = false;  // single active column
  std::string note;
};

struct Baseline {
  Schedule schedule;
  double cost = 0.0;
  bool feasible = false;
  std::string note;
};

struct SolveReport {
  bool converged = false;
  bool infeasible = false;
  std::string note;

  double f_u = 0.0;
  double f_rec = 0.0;
  double f_saa = 0.0;

  int iterations = 0;
  std::vector<double> gap_history;
  std::vector<double> master_history;

  std::vector<Index> active;  // column indices with alpha above threshold
  Vector active_weights;
  Schedule recovered;
  Index recovered_column = -1;
  bool epsilon_optimal = false;
  Schedule saa_schedule;

  double training_risk = 0.0;  // joint survival of recovered net load
  std::optional<double> fresh_risk;

  MasterState state;
};

struct RunOptions {
  double epsilon = 1e-4;
  int max_outer = 100;
  Vector lambda_init;          // empty -> ones
  double duplicate_tol = 1e-10;
  double active_tol = 1e-9;
  QpOptions qp;
  const ScenarioSet* fresh = nullptr;  // optional out-of-sample risk check
};

/// Full primal-dual run: column generation over p-efficient points, dual
/// extraction, convergence test, then feasibility recovery and the robust
/// baseline on the same sample.
SolveReport run(const MicrogridConfig& cfg, const ScenarioSet& set, double p,
                const RunOptions& opts = {});

/// Solves the dispatch QP with rhs = v_k for every active column and returns
/// the cheapest feasible schedule.
Recovery recover(const MicrogridConfig& cfg, const MasterState& state,
                 const QpOptions& qp_opts = {}, double active_tol = 1e-9);

/// Robust baseline: dispatch against the component-wise worst case. Feasible
/// for every p, independent of p.
Baseline saa_baseline(const MicrogridConfig& cfg, const ScenarioSet& set,
                      const QpOptions& qp_opts = {});

/// Lagrangian dual value phi(lambda) = phi_rho - phi_sigma: the dispatch
/// subproblem with the coupling prices folded into the objective, minus the
/// p-efficient subproblem optimum. Lower-bounds the relaxed optimum.
double dual_value(const MicrogridConfig& cfg, const ScenarioSet& set, double p,
                  const Vector& lambda, const QpOptions& qp_opts = {});

/// Master QP over dispatch variables plus convex weights on `columns`;
/// exposed for tests.
Qp build_master_qp(const MicrogridConfig& cfg, const std::vector<PePoint>& columns);

}  // namespace ccdispatch
