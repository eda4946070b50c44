#pragma once

#include <string>
#include <vector>

#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// Conventional generator: box limits, ramp rates, quadratic cost a*P^2 + b*P.
/// p_init is the output in the slot preceding the horizon, where the t=1 ramp
/// constraints anchor.
struct GeneratorParams {
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;
  double ramp_dn = 0.0;
  double a = 0.0;
  double b = 0.0;
  double p_init = 0.0;
};

/// Dispatchable load: consumption box and concave quadratic utility
/// c*P^2 + d*P with c <= 0.
struct LoadParams {
  double d_min = 0.0;
  double d_max = 0.0;
  double c = 0.0;
  double d = 0.0;
};

/// Storage unit. p_b is the power delivered to the unit per slot (negative
/// while discharging); soc evolves as B^t = B^{t-1} + P_B^t from b_init.
/// Usage cost per slot is beta^t * (b_max - B^t).
struct StorageParams {
  double b_max = 0.0;
  double b_final_min = 0.0;
  double p_b_min = 0.0;
  double p_b_max = 0.0;
  double eta = 1.0;
  double b_init = 0.0;
  Vector beta;
};

struct MicrogridConfig {
  Index horizon = 0;
  std::vector<GeneratorParams> generators;
  std::vector<LoadParams> loads;
  std::vector<StorageParams> storages;
  Vector base_load;
  Vector spin_reserve;

  Index num_generators() const { return static_cast<Index>(generators.size()); }
  Index num_loads() const { return static_cast<Index>(loads.size()); }
  Index num_storages() const { return static_cast<Index>(storages.size()); }

  /// Throws ConfigError on inconsistent data and ConvexityError when the
  /// cost/utility curvatures have the wrong sign.
  void validate() const;
};

/// Dispatch decisions over the horizon. Rows index units, columns index slots.
struct Schedule {
  Matrix p_g;  // M x T
  Matrix p_d;  // N x T
  Matrix p_b;  // J x T
  Matrix soc;  // J x T

  static Schedule zeros(const MicrogridConfig& cfg);
};

struct Violation {
  std::string family;
  Index unit = -1;  // -1 for slot-only constraints
  Index slot = -1;
  double magnitude = 0.0;
};

/// Column layout of the dispatch QP variable vector:
/// [P_G (M*T) | P_D (N*T) | P_B (J*T) | B (J*T)], slot-major within a unit.
struct DispatchLayout {
  Index num_gen = 0;
  Index num_load = 0;
  Index num_sto = 0;
  Index horizon = 0;

  Index pg(Index m, Index t) const { return m * horizon + t; }
  Index pd(Index n, Index t) const { return num_gen * horizon + n * horizon + t; }
  Index pb(Index j, Index t) const {
    return (num_gen + num_load) * horizon + j * horizon + t;
  }
  Index soc(Index j, Index t) const {
    return (num_gen + num_load + num_sto) * horizon + j * horizon + t;
  }
  Index size() const { return (num_gen + num_load + 2 * num_sto) * horizon; }

  static DispatchLayout of(const MicrogridConfig& cfg) {
    return {cfg.num_generators(), cfg.num_loads(), cfg.num_storages(), cfg.horizon};
  }
};

/// Net load g^t = L^t + sum_n P_D^t + sum_j P_B^t - sum_m P_G^t.
Vector net_load(const MicrogridConfig& cfg, const Schedule& schedule);

/// Operating cost F: generation cost minus load utility plus storage usage
/// cost, summed over the horizon.
double evaluate_cost(const MicrogridConfig& cfg, const Schedule& schedule);

/// Constant term sum_t sum_j beta_j^t * b_max_j of the storage usage cost;
/// the QP objective omits it.
double storage_cost_constant(const MicrogridConfig& cfg);

/// Every physical-constraint or coupling violation exceeding `tol` (absolute).
std::vector<Violation> validate_schedule(const MicrogridConfig& cfg,
                                         const Schedule& schedule, const Vector& rhs,
                                         double tol = 1e-8);

/// Reassemble a Schedule from a dispatch QP primal vector.
Schedule unpack_schedule(const MicrogridConfig& cfg, const Vector& x);

}  // namespace ccdispatch
