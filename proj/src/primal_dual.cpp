#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ccdispatch/primal_dual.hpp"

namespace ccdispatch {

Qp build_master_qp(const MicrogridConfig& cfg, const std::vector<PePoint>& columns) {
  const Index T = cfg.horizon;
  Qp qp = build_qp(cfg, Vector::Zero(T));
  const Index n0 = qp.n_vars;
  const Index k = static_cast<Index>(columns.size());
  if (k == 0) throw StructureError("master needs at least one column");

  qp.n_vars = n0 + k;
  qp.q_diag.conservativeResize(qp.n_vars);
  qp.q_diag.tail(k).setZero();
  qp.c.conservativeResize(qp.n_vars);
  qp.c.tail(k).setZero();

  const Index ne0 = qp.a_eq.rows();
  qp.a_eq.conservativeResize(ne0 + 1, qp.n_vars);
  qp.a_eq.rightCols(k).setZero();
  qp.a_eq.row(ne0).setZero();
  qp.a_eq.row(ne0).tail(k).setOnes();  // convex combination
  qp.b_eq.conservativeResize(ne0 + 1);
  qp.b_eq(ne0) = 1.0;

  const Index ni0 = qp.a_in.rows();
  qp.a_in.conservativeResize(ni0 + k, qp.n_vars);
  qp.a_in.rightCols(k).setZero();
  qp.a_in.bottomRows(k).setZero();
  qp.b_in.conservativeResize(ni0 + k);
  for (Index j = 0; j < k; ++j) {
    if (columns[static_cast<std::size_t>(j)].v.size() != T)
      throw StructureError("column horizon mismatch");
    for (Index t = 0; t < T; ++t)
      qp.a_in(qp.coupling_rows[static_cast<std::size_t>(t)], n0 + j) =
          -columns[static_cast<std::size_t>(j)].v(t);
    qp.a_in(ni0 + j, n0 + j) = -1.0;  // alpha_j >= 0
    qp.b_in(ni0 + j) = 0.0;
  }
  qp.check();
  return qp;
}

namespace {

Vector fold_coupling_prices(const Qp& base, const Vector& lambda) {
  Vector c = base.c;
  for (std::size_t t = 0; t < base.coupling_rows.size(); ++t)
    c += lambda(static_cast<Index>(t)) * base.a_in.row(base.coupling_rows[t]).transpose();
  return c;
}

// Dispatch feasibility region only: coupling rows removed.
Qp strip_coupling(const Qp& base) {
  Qp qp = base;
  std::vector<std::uint8_t> is_coupling(static_cast<std::size_t>(base.num_in()), 0);
  for (Index row : base.coupling_rows) is_coupling[static_cast<std::size_t>(row)] = 1;
  const Index keep = base.num_in() - static_cast<Index>(base.coupling_rows.size());
  qp.a_in.resize(keep, base.n_vars);
  qp.b_in.resize(keep);
  Index out = 0;
  for (Index row = 0; row < base.num_in(); ++row) {
    if (is_coupling[static_cast<std::size_t>(row)]) continue;
    qp.a_in.row(out) = base.a_in.row(row);
    qp.b_in(out++) = base.b_in(row);
  }
  qp.coupling_rows.clear();
  return qp;
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Index t = 0; t < v.size(); ++t) os << (t ? ", " : "") << v(t);
  os << "]";
  return os.str();
}

}  // namespace

SolveReport run(const MicrogridConfig& cfg, const ScenarioSet& set, double p,
                const RunOptions& opts) {
  cfg.validate();
  if (set.num_samples() < 1) throw DomainError("empty scenario set");
  if (set.horizon() != cfg.horizon)
    throw ConfigError("scenario horizon does not match the config");
  const Index T = cfg.horizon;

  Vector lambda = opts.lambda_init.size() ? opts.lambda_init : Vector::Ones(T);
  if (lambda.size() != T) throw DomainError("lambda_init must have horizon length");
  if (lambda.minCoeff() < 0.0) throw DomainError("lambda_init must be nonnegative");
  if (!(opts.epsilon > 0.0)) throw DomainError("epsilon must be positive");

  const double c0 = storage_cost_constant(cfg);
  const Vector ell = quantile_bound(set, p);

  SolveReport report;
  report.state.columns.push_back(solve_mip(set, p, lambda, ell));

  auto& columns = report.state.columns;
  for (int k = 1; k <= opts.max_outer; ++k) {
    const Qp master = build_master_qp(cfg, columns);
    const QpSolution sol = solve(master, opts.qp);
    if (sol.status != QpStatus::optimal) {
      if (k == 1 && sol.status == QpStatus::infeasible) {
        // Diagnose against the loosest marginally-valid vector before giving up.
        const QpSolution diag = solve(build_qp(cfg, ell), opts.qp);
        std::ostringstream os;
        os << "master infeasible at the first p-efficient point v_1 = "
           << format_vector(columns.front().v) << "; with rhs = ell_p the model is "
           << to_string(diag.status) << ". " << sol.note;
        report.infeasible = true;
        report.note = os.str();
        report.iterations = k;
        return report;
      }
      report.note = "master solve returned " + std::string(to_string(sol.status)) +
                    " at iteration " + std::to_string(k) + "; " + sol.note;
      report.iterations = k;
      return report;
    }

    const double f_u = sol.value + c0;
    report.master_history.push_back(f_u);
    report.state.master_value = f_u;
    report.state.iteration = k;
    report.state.alphas = sol.x.tail(static_cast<Index>(columns.size()));
    report.state.lambda = coupling_duals(sol, master);

    const PePoint fresh_point = solve_mip(set, p, report.state.lambda, ell);
    double phi_k = -std::numeric_limits<double>::infinity();
    for (const auto& col : columns) phi_k = std::max(phi_k, report.state.lambda.dot(col.v));
    const double gap = std::abs(fresh_point.objective - phi_k);
    report.gap_history.push_back(gap);
    report.iterations = k;

    bool duplicate = false;
    for (const auto& col : columns)
      duplicate = duplicate ||
                  (col.v - fresh_point.v).cwiseAbs().maxCoeff() <= opts.duplicate_tol;

    if (gap < opts.epsilon) {
      report.converged = true;
      break;
    }
    if (duplicate) {
      report.converged = true;
      report.note = "stopped on duplicate column";
      break;
    }
    if (k == opts.max_outer) {
      report.converged = false;
      std::ostringstream os;
      os << "outer iteration limit reached; final gap " << gap;
      report.note = os.str();
      break;
    }
    columns.push_back(fresh_point);
  }

  report.f_u = report.state.master_value;

  Recovery rec = recover(cfg, report.state, opts.qp, opts.active_tol);
  report.f_rec = rec.cost;
  report.recovered = rec.schedule;
  report.recovered_column = rec.column;
  report.epsilon_optimal = rec.epsilon_optimal;
  if (!rec.feasible) report.note += (report.note.empty() ? "" : "; ") + rec.note;
  for (Index j = 0; j < report.state.alphas.size(); ++j) {
    if (report.state.alphas(j) > opts.active_tol) report.active.push_back(j);
  }
  report.active_weights.resize(static_cast<Index>(report.active.size()));
  for (std::size_t i = 0; i < report.active.size(); ++i)
    report.active_weights(static_cast<Index>(i)) = report.state.alphas(report.active[i]);

  Baseline base = saa_baseline(cfg, set, opts.qp);
  report.f_saa = base.cost;
  report.saa_schedule = base.schedule;
  if (!base.feasible) report.note += (report.note.empty() ? "" : "; ") + base.note;

  if (rec.feasible) {
    report.training_risk = survival_joint(set, net_load(cfg, rec.schedule));
    if (opts.fresh != nullptr)
      report.fresh_risk = survival_joint(*opts.fresh, net_load(cfg, rec.schedule));
  }
  return report;
}

Recovery recover(const MicrogridConfig& cfg, const MasterState& state,
                 const QpOptions& qp_opts, double active_tol) {
  if (state.columns.empty()) throw StructureError("recover: no columns");
  std::vector<Index> active;
  for (Index j = 0; j < state.alphas.size(); ++j)
    if (state.alphas(j) > active_tol) active.push_back(j);
  if (active.empty()) {
    Index best = 0;
    state.alphas.maxCoeff(&best);
    active.push_back(best);
  }

  const double c0 = storage_cost_constant(cfg);
  Recovery out;
  out.cost = std::numeric_limits<double>::infinity();
  std::ostringstream failures;
  for (Index j : active) {
    const auto& col = state.columns[static_cast<std::size_t>(j)];
    const QpSolution sol = solve(build_qp(cfg, col.v), qp_opts);
    if (sol.status != QpStatus::optimal) {
      failures << "column " << j << ": " << to_string(sol.status) << " (" << sol.note << "); ";
      continue;
    }
    const double cost = sol.value + c0;
    if (cost < out.cost) {
      out.cost = cost;
      out.schedule = unpack_schedule(cfg, sol.x);
      out.column = j;
      out.feasible = true;
    }
  }
  out.epsilon_optimal = out.feasible && active.size() == 1;
  if (!out.feasible) {
    out.note = "all recovery problems failed: " + failures.str();
    out.cost = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

Baseline saa_baseline(const MicrogridConfig& cfg, const ScenarioSet& set,
                      const QpOptions& qp_opts) {
  Baseline out;
  const Vector wbar = worst_case(set);
  const QpSolution sol = solve(build_qp(cfg, wbar), qp_opts);
  if (sol.status != QpStatus::optimal) {
    out.feasible = false;
    out.cost = std::numeric_limits<double>::quiet_NaN();
    out.note = "worst-case dispatch " + std::string(to_string(sol.status)) +
               " with wbar = " + format_vector(wbar) + "; " + sol.note;
    return out;
  }
  out.feasible = true;
  out.cost = sol.value + storage_cost_constant(cfg);
  out.schedule = unpack_schedule(cfg, sol.x);
  return out;
}

double dual_value(const MicrogridConfig& cfg, const ScenarioSet& set, double p,
                  const Vector& lambda, const QpOptions& qp_opts) {
  cfg.validate();
  if (lambda.size() != cfg.horizon) throw DomainError("lambda must have horizon length");
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0)
    throw DomainError("lambda must be nonnegative");

  const Qp base = build_qp(cfg, Vector::Zero(cfg.horizon));
  Qp relaxed = strip_coupling(base);
  relaxed.c = fold_coupling_prices(base, lambda);
  const QpSolution sol = solve(relaxed, qp_opts);
  if (sol.status != QpStatus::optimal)
    throw std::runtime_error("dual_value: dispatch subproblem " +
                             std::string(to_string(sol.status)));
  const double phi_rho = sol.value + lambda.dot(cfg.base_load) + storage_cost_constant(cfg);

  const Vector ell = quantile_bound(set, p);
  const double phi_sigma = solve_mip(set, p, lambda, ell).objective;
  return phi_rho - phi_sigma;
}

}  // namespace ccdispatch
