#include "ccdispatch/microgrid.hpp"

#include <cmath>
#include <sstream>

namespace ccdispatch {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace

void MicrogridConfig::validate() const {
  require(horizon >= 1, "horizon must be at least 1");
  require(base_load.size() == horizon, "base_load length must equal horizon");
  require(spin_reserve.size() == horizon, "spin_reserve length must equal horizon");
  require(finite(base_load) && finite(spin_reserve), "config vectors must be finite");
  require((spin_reserve.array() >= 0.0).all(), "spin_reserve must be nonnegative");

  double total_p_max = 0.0;
  for (std::size_t m = 0; m < generators.size(); ++m) {
    const auto& g = generators[m];
    std::ostringstream tag;
    tag << "generator " << m << ": ";
    require(g.p_min >= 0.0 && g.p_min <= g.p_max, tag.str() + "need 0 <= p_min <= p_max");
    require(g.ramp_up >= 0.0 && g.ramp_dn >= 0.0, tag.str() + "ramp rates must be nonnegative");
    if (g.a < 0.0) throw ConvexityError(tag.str() + "cost curvature a must be nonnegative");
    total_p_max += g.p_max;
  }
  for (std::size_t n = 0; n < loads.size(); ++n) {
    const auto& l = loads[n];
    std::ostringstream tag;
    tag << "load " << n << ": ";
    require(l.d_min >= 0.0 && l.d_min <= l.d_max, tag.str() + "need 0 <= d_min <= d_max");
    if (l.c > 0.0) throw ConvexityError(tag.str() + "utility curvature c must be nonpositive");
  }
  for (std::size_t j = 0; j < storages.size(); ++j) {
    const auto& s = storages[j];
    std::ostringstream tag;
    tag << "storage " << j << ": ";
    require(s.b_final_min >= 0.0 && s.b_final_min <= s.b_max,
            tag.str() + "need 0 <= b_final_min <= b_max");
    require(s.p_b_min <= 0.0 && s.p_b_max >= 0.0, tag.str() + "need p_b_min <= 0 <= p_b_max");
    require(s.eta >= 0.0 && s.eta <= 1.0, tag.str() + "eta must lie in [0,1]");
    require(s.b_init >= 0.0 && s.b_init <= s.b_max, tag.str() + "need 0 <= b_init <= b_max");
    require(s.beta.size() == horizon, tag.str() + "beta length must equal horizon");
    require((s.beta.array() >= 0.0).all(), tag.str() + "beta must be nonnegative");
  }
  if (!generators.empty() || spin_reserve.maxCoeff() > 0.0) {
    require(total_p_max >= spin_reserve.maxCoeff(),
            "spinning reserve exceeds total generation capacity");
  }
}

Schedule Schedule::zeros(const MicrogridConfig& cfg) {
  Schedule s;
  s.p_g = Matrix::Zero(cfg.num_generators(), cfg.horizon);
  s.p_d = Matrix::Zero(cfg.num_loads(), cfg.horizon);
  s.p_b = Matrix::Zero(cfg.num_storages(), cfg.horizon);
  s.soc = Matrix::Zero(cfg.num_storages(), cfg.horizon);
  for (Index j = 0; j < cfg.num_storages(); ++j) s.soc.row(j).setConstant(cfg.storages[j].b_init);
  return s;
}

namespace {

void check_shape(const MicrogridConfig& cfg, const Schedule& s) {
  const Index t = cfg.horizon;
  if (s.p_g.rows() != cfg.num_generators() || s.p_g.cols() != t ||
      s.p_d.rows() != cfg.num_loads() || s.p_d.cols() != t ||
      s.p_b.rows() != cfg.num_storages() || s.p_b.cols() != t ||
      s.soc.rows() != cfg.num_storages() || s.soc.cols() != t) {
    throw ConfigError("schedule shape does not match config");
  }
}

}  // namespace

Vector net_load(const MicrogridConfig& cfg, const Schedule& schedule) {
  check_shape(cfg, schedule);
  Vector g = cfg.base_load;
  if (schedule.p_d.rows() > 0) g += schedule.p_d.colwise().sum().transpose();
  if (schedule.p_b.rows() > 0) g += schedule.p_b.colwise().sum().transpose();
  if (schedule.p_g.rows() > 0) g -= schedule.p_g.colwise().sum().transpose();
  return g;
}

double evaluate_cost(const MicrogridConfig& cfg, const Schedule& schedule) {
  check_shape(cfg, schedule);
  double cost = 0.0;
  for (Index t = 0; t < cfg.horizon; ++t) {
    for (Index m = 0; m < cfg.num_generators(); ++m) {
      const auto& g = cfg.generators[m];
      const double p = schedule.p_g(m, t);
      cost += g.a * p * p + g.b * p;
    }
    for (Index n = 0; n < cfg.num_loads(); ++n) {
      const auto& l = cfg.loads[n];
      const double p = schedule.p_d(n, t);
      cost -= l.c * p * p + l.d * p;
    }
    for (Index j = 0; j < cfg.num_storages(); ++j) {
      const auto& s = cfg.storages[j];
      cost += s.beta(t) * (s.b_max - schedule.soc(j, t));
    }
  }
  return cost;
}

double storage_cost_constant(const MicrogridConfig& cfg) {
  double c0 = 0.0;
  for (const auto& s : cfg.storages) c0 += s.beta.sum() * s.b_max;
  return c0;
}

std::vector<Violation> validate_schedule(const MicrogridConfig& cfg,
                                         const Schedule& schedule, const Vector& rhs,
                                         double tol) {
  check_shape(cfg, schedule);
  if (rhs.size() != cfg.horizon) throw ConfigError("rhs length must equal horizon");

  std::vector<Violation> out;
  auto report = [&](const char* family, Index unit, Index slot, double excess) {
    if (excess > tol) out.push_back({family, unit, slot, excess});
  };

  for (Index m = 0; m < cfg.num_generators(); ++m) {
    const auto& g = cfg.generators[m];
    for (Index t = 0; t < cfg.horizon; ++t) {
      const double p = schedule.p_g(m, t);
      const double prev = t == 0 ? g.p_init : schedule.p_g(m, t - 1);
      report("generator_lower", m, t, g.p_min - p);
      report("generator_upper", m, t, p - g.p_max);
      report("ramp_up", m, t, p - prev - g.ramp_up);
      report("ramp_down", m, t, prev - p - g.ramp_dn);
    }
  }
  for (Index t = 0; t < cfg.horizon; ++t) {
    double headroom = 0.0;
    for (Index m = 0; m < cfg.num_generators(); ++m)
      headroom += cfg.generators[m].p_max - schedule.p_g(m, t);
    report("spinning_reserve", -1, t, cfg.spin_reserve(t) - headroom);
  }
  for (Index n = 0; n < cfg.num_loads(); ++n) {
    const auto& l = cfg.loads[n];
    for (Index t = 0; t < cfg.horizon; ++t) {
      report("load_lower", n, t, l.d_min - schedule.p_d(n, t));
      report("load_upper", n, t, schedule.p_d(n, t) - l.d_max);
    }
  }
  for (Index j = 0; j < cfg.num_storages(); ++j) {
    const auto& s = cfg.storages[j];
    for (Index t = 0; t < cfg.horizon; ++t) {
      const double b = schedule.soc(j, t);
      const double b_prev = t == 0 ? s.b_init : schedule.soc(j, t - 1);
      const double p = schedule.p_b(j, t);
      report("soc_upper", j, t, b - s.b_max);
      report("soc_lower", j, t, -b);
      report("charge_lower", j, t, s.p_b_min - p);
      report("charge_upper", j, t, p - s.p_b_max);
      report("soc_dynamics", j, t, std::abs(b - b_prev - p));
      report("discharge_efficiency", j, t, -s.eta * b_prev - p);
    }
    report("soc_terminal", j, cfg.horizon - 1, s.b_final_min - schedule.soc(j, cfg.horizon - 1));
  }
  const Vector g = net_load(cfg, schedule);
  for (Index t = 0; t < cfg.horizon; ++t) report("coupling", -1, t, g(t) - rhs(t));
  return out;
}

Schedule unpack_schedule(const MicrogridConfig& cfg, const Vector& x) {
  const auto lay = DispatchLayout::of(cfg);
  if (x.size() < lay.size()) throw ConfigError("primal vector shorter than layout");
  Schedule s = Schedule::zeros(cfg);
  for (Index m = 0; m < lay.num_gen; ++m)
    for (Index t = 0; t < lay.horizon; ++t) s.p_g(m, t) = x(lay.pg(m, t));
  for (Index n = 0; n < lay.num_load; ++n)
    for (Index t = 0; t < lay.horizon; ++t) s.p_d(n, t) = x(lay.pd(n, t));
  for (Index j = 0; j < lay.num_sto; ++j)
    for (Index t = 0; t < lay.horizon; ++t) {
      s.p_b(j, t) = x(lay.pb(j, t));
      s.soc(j, t) = x(lay.soc(j, t));
    }
  return s;
}

}  // namespace ccdispatch
