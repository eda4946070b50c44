#pragma once

#include <cstdint>
#include <vector>

#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// Turbine model: Weibull(c, k) wind-speed marginal plus a cut-in / rated /
/// cut-out power curve delivering w_rated kWh per slot at rated speed.
struct WecsParams {
  double c = 0.0;
  double k = 0.0;
  double v_in = 0.0;
  double v_rated = 0.0;
  double v_out = 0.0;
  double w_rated = 0.0;

  void validate() const;
};

/// Spatio-temporal correlation of the latent Gaussian field: `spatial` is the
/// I x I cross-farm correlation matrix (symmetric, unit diagonal, PSD) and
/// temporal[i] the lag-one autocorrelation of farm i, each in (-1, 1).
struct CorrelationSpec {
  Matrix spatial;
  Vector temporal;

  Index num_farms() const { return temporal.size(); }

  /// Rejects non-PSD matrices with the smallest eigenvalue in the message.
  void validate() const;
};

struct ScenarioMeta {
  WecsParams wecs;
  CorrelationSpec corr;
  Index num_farms = 0;
};

/// Monte Carlo sample of aggregate wind energy, one row per sample, one
/// column per slot. per_farm optionally keeps the I x T farm-level energies.
struct ScenarioSet {
  Matrix samples;
  std::vector<Matrix> per_farm;
  std::uint64_t seed = 0;
  ScenarioMeta meta;

  Index num_samples() const { return samples.rows(); }
  Index horizon() const { return samples.cols(); }
};

/// Power-curve output in [0, w_rated] for speed v (m/s): zero outside
/// [v_in, v_out], rated at and above v_rated, linear in between.
double speed_to_power(const WecsParams& wecs, double v);

/// Map a standard Gaussian draw to a Weibull(c, k) speed through the copula.
double gaussian_to_speed(const WecsParams& wecs, double z);

/// Samples correlated latent Gaussian trajectories and pushes them through
/// the Weibull quantile and the power curve. Streams are derived from
/// (seed, sample index), so regeneration of any sample is independent of the
/// others and the whole set is reproducible bit-for-bit.
class ScenarioGenerator {
 public:
  ScenarioGenerator(const WecsParams& wecs, const CorrelationSpec& corr,
                    Index num_farms, Index horizon);

  /// Latent standard-Gaussian field (I x T) of one sample: lag-one
  /// autocorrelation temporal[i] per farm, cross-farm correlation `spatial`
  /// in every slot.
  Matrix latent(std::uint64_t seed, Index sample) const;

  /// Wind speeds (I x T) of one sample.
  Matrix speeds(std::uint64_t seed, Index sample) const;

  ScenarioSet generate(Index num_samples, std::uint64_t seed,
                       bool keep_per_farm = false) const;

 private:
  WecsParams wecs_;
  CorrelationSpec corr_;
  Index farms_ = 0;
  Index horizon_ = 0;
  Matrix root_spatial_;  // symmetric square root of C
  Matrix root_innov_;    // symmetric square root of C - Phi C Phi
};

ScenarioSet generate(const WecsParams& wecs, const CorrelationSpec& corr,
                     Index num_farms, Index horizon, Index num_samples,
                     std::uint64_t seed, bool keep_per_farm = false);

/// Fraction of samples dominating v component-wise.
double survival_joint(const ScenarioSet& set, const Vector& v);

/// Fraction of samples with W_s^t >= w at slot t (0-based).
double survival_marginal(const ScenarioSet& set, Index t, double w);

/// Quota ceil(p * N_s), guarding against binary-representation noise when
/// p * N_s is integral.
Index quota(double p, Index num_samples);

/// Per-slot marginal quantile bound: the largest sample value whose marginal
/// survival is still >= p, i.e. the quota-th largest order statistic.
Vector quantile_bound(const ScenarioSet& set, double p);

/// Component-wise minimum across samples.
Vector worst_case(const ScenarioSet& set);

}  // namespace ccdispatch
