#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ccdispatch/qp.hpp"

namespace ccdispatch {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::unbounded: return "unbounded";
    case QpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

double KktResiduals::max_residual() const {
  return std::max({stationarity, feasibility, complementarity});
}

namespace {

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double inf_norm(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double data_scale(const Qp& qp) {
  double s = std::max(inf_norm(qp.q_diag), inf_norm(qp.c));
  s = std::max({s, inf_norm(qp.a_eq), inf_norm(qp.b_eq)});
  s = std::max({s, inf_norm(qp.a_in), inf_norm(qp.b_in)});
  return 1.0 + s;
}

// Largest alpha in (0, 1e30] keeping v + alpha*dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1e30;
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

// Detects contradictory single-variable bounds folded into the inequality
// block; returns a human-readable certificate when found.
std::string bound_contradiction(const Qp& qp) {
  const Index n = qp.n_vars;
  Vector lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  std::vector<Index> lower_row(n, -1), upper_row(n, -1);
  for (Index r = 0; r < qp.num_in(); ++r) {
    Index nz = -1;
    bool single = true;
    for (Index j = 0; j < n && single; ++j) {
      if (qp.a_in(r, j) != 0.0) {
        if (nz >= 0) single = false;
        nz = j;
      }
    }
    if (!single) continue;
    if (nz < 0) {
      if (qp.b_in(r) < 0.0) {
        std::ostringstream os;
        os << "row " << r << " reads 0 <= " << qp.b_in(r);
        return os.str();
      }
      continue;
    }
    const double a = qp.a_in(r, nz);
    const double b = qp.b_in(r) / a;
    if (a > 0.0 && b < upper(nz)) { upper(nz) = b; upper_row[nz] = r; }
    if (a < 0.0 && b > lower(nz)) { lower(nz) = b; lower_row[nz] = r; }
  }
  for (Index j = 0; j < n; ++j) {
    if (lower(j) > upper(j) + 1e-15 * (1.0 + std::abs(lower(j)))) {
      std::ostringstream os;
      os << "variable " << j << " has lower bound " << lower(j) << " (row " << lower_row[j]
         << ") above upper bound " << upper(j) << " (row " << upper_row[j] << ")";
      return os.str();
    }
  }
  return {};
}

// Factorization of the condensed KKT system
//   [ diag(q) + A_in' diag(w) A_in + reg*I , A_eq' ] [dx  ]   [f]
//   [ A_eq                                 , 0     ] [dmu ] = [g]
// via a Schur complement on the (positive definite) top-left block.
class KktSolver {
 public:
  bool factor(const Qp& qp, const Vector& w, double reg) {
    const Index n = qp.n_vars;
    Matrix k = Matrix::Zero(n, n);
    if (qp.num_in() > 0) {
      k.noalias() = qp.a_in.transpose() * w.asDiagonal() * qp.a_in;
    }
    k.diagonal() += qp.q_diag;
    double shift = reg;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Matrix ks = k;
      ks.diagonal().array() += shift;
      llt_k_.compute(ks);
      if (llt_k_.info() == Eigen::Success) break;
      shift = std::max(shift * 100.0, 1e-12);
      if (attempt == 5) return false;
    }
    if (qp.num_eq() > 0) {
      k_inv_aeq_t_ = llt_k_.solve(qp.a_eq.transpose());
      Matrix s = qp.a_eq * k_inv_aeq_t_;
      double sshift = reg;
      for (int attempt = 0; attempt < 6; ++attempt) {
        Matrix ss = s;
        ss.diagonal().array() += sshift;
        llt_s_.compute(ss);
        if (llt_s_.info() == Eigen::Success) break;
        sshift = std::max(sshift * 100.0, 1e-12);
        if (attempt == 5) return false;
      }
    }
    return true;
  }

  void solve(const Qp& qp, const Vector& f, const Vector& g, Vector& dx, Vector& dmu) const {
    if (qp.num_eq() == 0) {
      dx = llt_k_.solve(f);
      dmu.resize(0);
      return;
    }
    const Vector t = llt_k_.solve(f);
    dmu = llt_s_.solve(qp.a_eq * t - g);
    dx = t - k_inv_aeq_t_ * dmu;
  }

  // Iterative refinement against the unregularized system; the condensed
  // matrix can be ill-conditioned enough that one round is not sufficient.
  // Keeps the best iterate, so a non-contracting correction cannot hurt.
  void refine(const Qp& qp, const Vector& w, const Vector& f, const Vector& g, Vector& dx,
              Vector& dmu) const {
    auto residual = [&](const Vector& x, const Vector& mu, Vector& r1, Vector& r2) {
      r1 = f - qp.q_diag.cwiseProduct(x);
      if (qp.num_in() > 0) r1.noalias() -= qp.a_in.transpose() * (w.cwiseProduct(qp.a_in * x));
      if (qp.num_eq() > 0) r1.noalias() -= qp.a_eq.transpose() * mu;
      r2 = qp.num_eq() > 0 ? Vector(g - qp.a_eq * x) : Vector();
      return std::max(inf_norm(r1), inf_norm(r2)) /
             (1.0 + std::max(inf_norm(f), inf_norm(g)));
    };
    Vector r1, r2;
    double best_err = residual(dx, dmu, r1, r2);
    Vector best_dx = dx, best_dmu = dmu;
    for (int round = 0; round < 4 && best_err > 1e-14 && std::isfinite(best_err); ++round) {
      Vector cx, cmu;
      solve(qp, r1, r2, cx, cmu);
      dx += cx;
      if (qp.num_eq() > 0) dmu += cmu;
      const double err = residual(dx, dmu, r1, r2);
      if (!std::isfinite(err) || err >= best_err) break;
      best_err = err;
      best_dx = dx;
      best_dmu = dmu;
    }
    dx = best_dx;
    dmu = best_dmu;
  }

 private:
  Eigen::LLT<Matrix> llt_k_;
  Eigen::LLT<Matrix> llt_s_;
  Matrix k_inv_aeq_t_;
};

struct Residuals {
  Vector stat, eq, in, comp;

  double stat_norm() const { return inf_norm(stat); }
  double prim_norm() const { return std::max(inf_norm(eq), inf_norm(in)); }
  double comp_norm() const { return inf_norm(comp); }
};

Residuals compute_residuals(const Qp& qp, const Vector& x, const Vector& mu, const Vector& lam,
                            const Vector& slack) {
  Residuals r;
  r.stat = qp.q_diag.cwiseProduct(x) + qp.c;
  if (qp.num_eq() > 0) r.stat.noalias() += qp.a_eq.transpose() * mu;
  if (qp.num_in() > 0) r.stat.noalias() += qp.a_in.transpose() * lam;
  r.eq = qp.num_eq() > 0 ? Vector(qp.a_eq * x - qp.b_eq) : Vector();
  r.in = qp.num_in() > 0 ? Vector(qp.a_in * x + slack - qp.b_in) : Vector();
  r.comp = slack.cwiseProduct(lam);
  return r;
}

}  // namespace

QpSolution solve(const Qp& qp, const QpOptions& opts) {
  qp.check();
  const Index n = qp.n_vars;
  const Index me = qp.num_eq();
  const Index mi = qp.num_in();
  const double scale = data_scale(qp);
  const double reg = 1e-12 * scale;

  QpSolution sol;
  sol.x = Vector::Zero(n);
  sol.duals_eq = Vector::Zero(me);
  sol.duals_in = Vector::Zero(mi);

  if (std::string cert = bound_contradiction(qp); !cert.empty()) {
    sol.status = QpStatus::infeasible;
    sol.note = "contradictory bounds: " + cert;
    return sol;
  }

  KktSolver kkt;

  // Starting point: equality-regularized minimizer, slacks shifted positive.
  Vector x, mu, lam, slack;
  {
    Vector w = Vector::Ones(mi);
    if (!kkt.factor(qp, w, 1.0)) {
      sol.status = QpStatus::max_iter;
      sol.note = "initial factorization failed";
      return sol;
    }
    kkt.solve(qp, -qp.c, qp.b_eq, x, mu);
    if (mi > 0) {
      Vector s_raw = qp.b_in - qp.a_in * x;
      const double shift = std::max(0.0, -1.5 * s_raw.minCoeff());
      Vector s_hat = s_raw.array() + shift;
      Vector lam_hat = Vector::Ones(mi);
      const double dot = s_hat.dot(lam_hat);
      double pad_s = 0.5 * dot / lam_hat.sum();
      double pad_l = 0.5 * dot / std::max(s_hat.sum(), 1e-12);
      if (dot <= 0.0) pad_s = pad_l = 1.0;
      slack = (s_hat.array() + pad_s).cwiseMax(1e-4 * scale);
      lam = (lam_hat.array() + pad_l).cwiseMax(1e-4);
    } else {
      slack.resize(0);
      lam.resize(0);
    }
    if (me == 0) mu.resize(0);
  }

  auto finish = [&](QpStatus status, const Residuals& r, int iter) {
    sol.status = status;
    sol.x = x;
    sol.duals_eq = mu;
    sol.duals_in = lam;
    sol.value = qp.objective(x);
    sol.kkt = {r.stat_norm() / scale, r.prim_norm() / scale, r.comp_norm() / scale};
    sol.iterations = iter;
    return sol;
  };

  double best_prim = std::numeric_limits<double>::infinity();
  int stall = 0;
  Vector best_x = x, best_mu = mu, best_lam = lam, best_slack = slack;
  double best_total = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    Residuals res = compute_residuals(qp, x, mu, lam, slack);
    const double total =
        std::max({res.stat_norm(), res.prim_norm(), res.comp_norm()});
    if (total < best_total) {
      best_total = total;
      best_x = x; best_mu = mu; best_lam = lam; best_slack = slack;
    }
    if (total <= opts.tol * scale) return finish(QpStatus::optimal, res, iter);

    // Divergence of the primal iterate with the duals still pushing: treat
    // as unbounded below.
    if (inf_norm(x) > 1e13 * scale || qp.objective(x) < -1e15 * scale) {
      finish(QpStatus::unbounded, res, iter);
      sol.note = "iterates diverge; objective unbounded below on the feasible set";
      return sol;
    }

    // Stalled primal infeasibility for 30 consecutive iterations. Slow but
    // real progress must not count as a stall.
    const double prim = res.prim_norm() / scale;
    if (prim > 1e-6 && prim > 0.9999 * best_prim) {
      if (++stall >= 30) {
        finish(QpStatus::infeasible, res, iter);
        std::ostringstream os;
        os << "primal residual stalled at " << prim << ";";
        if (mi > 0) {
          Vector ray_in = lam / std::max(1.0, lam.template lpNorm<Eigen::Infinity>());
          Vector farkas = qp.a_in.transpose() * ray_in;
          double act = qp.b_in.dot(ray_in);
          if (me > 0) {
            Vector ray_eq = mu / std::max(1.0, lam.template lpNorm<Eigen::Infinity>());
            farkas += qp.a_eq.transpose() * ray_eq;
            act += qp.b_eq.dot(ray_eq);
          }
          os << " Farkas ray quality ||A'y||_inf = " << inf_norm(farkas)
             << ", b'y = " << act;
        }
        sol.note = os.str();
        return sol;
      }
    } else {
      stall = 0;
    }
    best_prim = std::min(best_prim, prim);

    if (iter == opts.max_iter) break;

    const double mu_gap = mi > 0 ? slack.dot(lam) / double(mi) : 0.0;
    Vector w = mi > 0
                   ? Vector(lam.cwiseQuotient(slack).cwiseMax(1e-16).cwiseMin(1e16))
                   : Vector();
    if (!kkt.factor(qp, w, reg)) {
      // Numerical breakdown: on an infeasible problem the scaling blows up
      // long before the stall counter trips.
      if (prim > 1e-6) {
        finish(QpStatus::infeasible, res, iter);
        sol.note = "KKT factorization broke down with primal residual " +
                   std::to_string(prim);
      } else {
        finish(QpStatus::max_iter, res, iter);
        sol.note = "KKT factorization failed near the solution";
      }
      return sol;
    }

    // Predictor.
    Vector rc = res.comp;
    Vector f = -res.stat;
    if (mi > 0)
      f.noalias() -= qp.a_in.transpose() *
                     Vector(w.cwiseProduct(res.in) - rc.cwiseQuotient(slack));
    Vector dx_aff, dmu_aff;
    kkt.solve(qp, f, -res.eq, dx_aff, dmu_aff);
    kkt.refine(qp, w, f, -res.eq, dx_aff, dmu_aff);
    Vector dlam_aff, ds_aff;
    if (mi > 0) {
      dlam_aff = w.cwiseProduct(qp.a_in * dx_aff + res.in) - rc.cwiseQuotient(slack);
      ds_aff = -(rc + slack.cwiseProduct(dlam_aff)).cwiseQuotient(lam);
    }

    double sigma = 0.0;
    if (mi > 0) {
      const double ap = std::min(1.0, max_step(slack, ds_aff));
      const double ad = std::min(1.0, max_step(lam, dlam_aff));
      const double mu_aff =
          (slack + ap * ds_aff).dot(lam + ad * dlam_aff) / double(mi);
      sigma = std::pow(std::max(mu_aff, 0.0) / std::max(mu_gap, 1e-300), 3.0);
      sigma = std::min(std::max(sigma, 0.0), 1.0);
    }

    // Corrector.
    Vector dx = dx_aff, dmu = dmu_aff, dlam = dlam_aff, ds = ds_aff;
    if (mi > 0) {
      rc = res.comp + ds_aff.cwiseProduct(dlam_aff);
      rc.array() -= sigma * mu_gap;
      f = -res.stat;
      f.noalias() -= qp.a_in.transpose() *
                     Vector(w.cwiseProduct(res.in) - rc.cwiseQuotient(slack));
      kkt.solve(qp, f, -res.eq, dx, dmu);
      kkt.refine(qp, w, f, -res.eq, dx, dmu);
      dlam = w.cwiseProduct(qp.a_in * dx + res.in) - rc.cwiseQuotient(slack);
      ds = -(rc + slack.cwiseProduct(dlam)).cwiseQuotient(lam);
    }

    const bool finite = dx.allFinite() && (mi == 0 || (ds.allFinite() && dlam.allFinite())) &&
                        (me == 0 || dmu.allFinite());
    if (!finite) {
      if (prim > 1e-6) {
        finish(QpStatus::infeasible, res, iter);
        sol.note = "search direction overflowed with primal residual " +
                   std::to_string(prim);
      } else {
        break;
      }
      return sol;
    }

    const double tau = (mu_gap / scale < 1e-6) ? 0.99995 : 0.995;
    double ap = 1.0, ad = 1.0;
    if (mi > 0) {
      ap = std::min(1.0, tau * max_step(slack, ds));
      ad = std::min(1.0, tau * max_step(lam, dlam));
    }
    x += ap * dx;
    if (mi > 0) {
      slack += ap * ds;
      lam += ad * dlam;
    }
    if (me > 0) mu += ad * dmu;
  }

  x = best_x; mu = best_mu; lam = best_lam; slack = best_slack;
  Residuals res = compute_residuals(qp, x, mu, lam, slack);
  finish(QpStatus::max_iter, res, opts.max_iter);
  if (sol.note.empty()) sol.note = "iteration limit reached; returning best iterate";
  return sol;
}

Vector coupling_duals(const QpSolution& sol, const Qp& qp) {
  if (qp.coupling_rows.empty()) throw StructureError("qp has no coupling row tags");
  Vector lambda(static_cast<Index>(qp.coupling_rows.size()));
  for (std::size_t t = 0; t < qp.coupling_rows.size(); ++t) {
    const Index row = qp.coupling_rows[t];
    if (row < 0 || row >= sol.duals_in.size())
      throw StructureError("coupling row tag outside the dual vector");
    lambda(static_cast<Index>(t)) = std::max(0.0, sol.duals_in(row));
  }
  return lambda;
}

}  // namespace ccdispatch
