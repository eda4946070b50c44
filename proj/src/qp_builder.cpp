#include <sstream>

#include "ccdispatch/qp.hpp"

namespace ccdispatch {

void Qp::check() const {
  if (q_diag.size() != n_vars || c.size() != n_vars)
    throw ConfigError("qp: objective size mismatch");
  if (a_eq.rows() != b_eq.size() || (a_eq.rows() > 0 && a_eq.cols() != n_vars))
    throw ConfigError("qp: equality block size mismatch");
  if (a_in.rows() != b_in.size() || (a_in.rows() > 0 && a_in.cols() != n_vars))
    throw ConfigError("qp: inequality block size mismatch");
  if (q_diag.size() > 0 && q_diag.minCoeff() < 0.0)
    throw ConvexityError("qp: negative quadratic diagonal");
  for (Index row : coupling_rows)
    if (row < 0 || row >= num_in()) throw StructureError("qp: coupling row tag out of range");
}

std::string Qp::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "n_vars " << n_vars << "\n";
  os << "q_diag " << q_diag.transpose() << "\n";
  os << "c " << c.transpose() << "\n";
  os << "a_eq " << a_eq.rows() << "\n" << a_eq << "\n";
  os << "b_eq " << b_eq.transpose() << "\n";
  os << "a_in " << a_in.rows() << "\n" << a_in << "\n";
  os << "b_in " << b_in.transpose() << "\n";
  os << "coupling";
  for (Index row : coupling_rows) os << " " << row;
  os << "\n";
  return os.str();
}

Qp build_qp(const MicrogridConfig& cfg, const Vector& rhs) {
  cfg.validate();
  if (rhs.size() != cfg.horizon) throw ConfigError("rhs length must equal horizon");
  if (!rhs.allFinite()) throw ConfigError("rhs must be finite");

  const auto lay = DispatchLayout::of(cfg);
  const Index T = lay.horizon;
  const Index M = lay.num_gen;
  const Index N = lay.num_load;
  const Index J = lay.num_sto;

  Qp qp;
  qp.n_vars = lay.size();
  qp.q_diag = Vector::Zero(qp.n_vars);
  qp.c = Vector::Zero(qp.n_vars);

  for (Index m = 0; m < M; ++m) {
    const auto& g = cfg.generators[m];
    for (Index t = 0; t < T; ++t) {
      qp.q_diag(lay.pg(m, t)) = 2.0 * g.a;
      qp.c(lay.pg(m, t)) = g.b;
    }
  }
  for (Index n = 0; n < N; ++n) {
    const auto& l = cfg.loads[n];
    for (Index t = 0; t < T; ++t) {
      qp.q_diag(lay.pd(n, t)) = -2.0 * l.c;
      qp.c(lay.pd(n, t)) = -l.d;
    }
  }
  // Storage usage cost beta^t (b_max - B^t); the constant lives in
  // storage_cost_constant().
  for (Index j = 0; j < J; ++j)
    for (Index t = 0; t < T; ++t) qp.c(lay.soc(j, t)) = -cfg.storages[j].beta(t);

  // State-of-charge dynamics, one equality row per (j, t).
  const Index n_eq = J * T;
  qp.a_eq = Matrix::Zero(n_eq, qp.n_vars);
  qp.b_eq = Vector::Zero(n_eq);
  {
    Index row = 0;
    for (Index j = 0; j < J; ++j) {
      for (Index t = 0; t < T; ++t, ++row) {
        qp.a_eq(row, lay.soc(j, t)) = 1.0;
        qp.a_eq(row, lay.pb(j, t)) = -1.0;
        if (t == 0) {
          qp.b_eq(row) = cfg.storages[j].b_init;
        } else {
          qp.a_eq(row, lay.soc(j, t - 1)) = -1.0;
        }
      }
    }
  }

  const Index n_in = 2 * M * T + 2 * M * T + T + 2 * N * T + 2 * J * T + J + 2 * J * T + J * T + T;
  qp.a_in = Matrix::Zero(n_in, qp.n_vars);
  qp.b_in = Vector::Zero(n_in);
  Index row = 0;

  for (Index m = 0; m < M; ++m) {
    const auto& g = cfg.generators[m];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.pg(m, t)) = 1.0;
      qp.b_in(row++) = g.p_max;
      qp.a_in(row, lay.pg(m, t)) = -1.0;
      qp.b_in(row++) = -g.p_min;
    }
  }
  for (Index m = 0; m < M; ++m) {
    const auto& g = cfg.generators[m];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.pg(m, t)) = 1.0;
      if (t == 0) {
        qp.b_in(row++) = g.ramp_up + g.p_init;
      } else {
        qp.a_in(row, lay.pg(m, t - 1)) = -1.0;
        qp.b_in(row++) = g.ramp_up;
      }
      qp.a_in(row, lay.pg(m, t)) = -1.0;
      if (t == 0) {
        qp.b_in(row++) = g.ramp_dn - g.p_init;
      } else {
        qp.a_in(row, lay.pg(m, t - 1)) = 1.0;
        qp.b_in(row++) = g.ramp_dn;
      }
    }
  }
  for (Index t = 0; t < T; ++t) {
    double cap = 0.0;
    for (Index m = 0; m < M; ++m) {
      qp.a_in(row, lay.pg(m, t)) = -1.0;
      cap += cfg.generators[m].p_max;
    }
    qp.b_in(row++) = cap - cfg.spin_reserve(t);
  }
  for (Index n = 0; n < N; ++n) {
    const auto& l = cfg.loads[n];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.pd(n, t)) = 1.0;
      qp.b_in(row++) = l.d_max;
      qp.a_in(row, lay.pd(n, t)) = -1.0;
      qp.b_in(row++) = -l.d_min;
    }
  }
  for (Index j = 0; j < J; ++j) {
    const auto& s = cfg.storages[j];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.soc(j, t)) = 1.0;
      qp.b_in(row++) = s.b_max;
      qp.a_in(row, lay.soc(j, t)) = -1.0;
      qp.b_in(row++) = 0.0;  // physical floor; the paper bounds only t = T
    }
  }
  for (Index j = 0; j < J; ++j) {
    qp.a_in(row, lay.soc(j, T - 1)) = -1.0;
    qp.b_in(row++) = -cfg.storages[j].b_final_min;
  }
  for (Index j = 0; j < J; ++j) {
    const auto& s = cfg.storages[j];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.pb(j, t)) = 1.0;
      qp.b_in(row++) = s.p_b_max;
      qp.a_in(row, lay.pb(j, t)) = -1.0;
      qp.b_in(row++) = -s.p_b_min;
    }
  }
  for (Index j = 0; j < J; ++j) {
    const auto& s = cfg.storages[j];
    for (Index t = 0; t < T; ++t) {
      qp.a_in(row, lay.pb(j, t)) = -1.0;
      if (t == 0) {
        qp.b_in(row++) = s.eta * s.b_init;
      } else {
        qp.a_in(row, lay.soc(j, t - 1)) = -s.eta;
        qp.b_in(row++) = 0.0;
      }
    }
  }
  qp.coupling_rows.reserve(T);
  for (Index t = 0; t < T; ++t) {
    for (Index n = 0; n < N; ++n) qp.a_in(row, lay.pd(n, t)) = 1.0;
    for (Index j = 0; j < J; ++j) qp.a_in(row, lay.pb(j, t)) = 1.0;
    for (Index m = 0; m < M; ++m) qp.a_in(row, lay.pg(m, t)) = -1.0;
    qp.b_in(row) = rhs(t) - cfg.base_load(t);
    qp.coupling_rows.push_back(row++);
  }

  if (row != n_in) throw StructureError("qp builder: row count mismatch");
  qp.check();
  return qp;
}

}  // namespace ccdispatch
