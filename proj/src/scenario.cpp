#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ccdispatch/scenario.hpp"

namespace ccdispatch {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic standard-normal stream: xoshiro-free, explicit Box-Muller on
// raw 53-bit uniforms so the byte stream never depends on library internals.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : state_(seed) {
    if (state_ == 0) state_ = 0x106689d45497fdb5ULL;
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (double(next_bits() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = double(next_bits() >> 11) * 0x1.0p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t next_bits() {
    // splitmix64 sequence; passes through the full 64-bit state.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::uint64_t stream_seed(std::uint64_t seed, Index sample) {
  return splitmix64(seed ^ splitmix64(0x5851f42d4c957f2dULL + std::uint64_t(sample)));
}

// Symmetric PSD square root; throws ConfigError naming the smallest
// eigenvalue when the matrix is not PSD.
Matrix psd_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw ConfigError(std::string(what) + ": eigensolve failed");
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-9) {
    std::ostringstream os;
    os << what << " is not positive semidefinite; smallest eigenvalue " << ev.minCoeff();
    throw ConfigError(os.str());
  }
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

void WecsParams::validate() const {
  if (!(c > 0.0) || !(k > 0.0)) throw ConfigError("wecs: Weibull c and k must be positive");
  if (!(0.0 <= v_in && v_in < v_rated && v_rated < v_out))
    throw ConfigError("wecs: need 0 <= v_in < v_rated < v_out");
  if (!(w_rated > 0.0)) throw ConfigError("wecs: w_rated must be positive");
}

void CorrelationSpec::validate() const {
  const Index n = temporal.size();
  if (spatial.rows() != n || spatial.cols() != n)
    throw ConfigError("correlation: spatial matrix size must match temporal length");
  for (Index i = 0; i < n; ++i) {
    if (std::abs(spatial(i, i) - 1.0) > 1e-12)
      throw ConfigError("correlation: spatial diagonal must be 1");
    if (!(std::abs(temporal(i)) < 1.0))
      throw ConfigError("correlation: temporal coefficients must lie in (-1, 1)");
  }
  if ((spatial - spatial.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("correlation: spatial matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(spatial, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    std::ostringstream os;
    os << "correlation: spatial matrix is not positive semidefinite; smallest eigenvalue "
       << es.eigenvalues().minCoeff();
    throw ConfigError(os.str());
  }
}

double speed_to_power(const WecsParams& wecs, double v) {
  if (v < wecs.v_in || v > wecs.v_out) return 0.0;
  if (v >= wecs.v_rated) return wecs.w_rated;
  return wecs.w_rated * (v - wecs.v_in) / (wecs.v_rated - wecs.v_in);
}

double gaussian_to_speed(const WecsParams& wecs, double z) {
  // Weibull quantile of the Gaussian tail: 1 - Phi(z) = erfc(z / sqrt(2)) / 2.
  const double tail = 0.5 * std::erfc(z / std::numbers::sqrt2);
  const double u = std::max(tail, 1e-300);
  return wecs.c * std::pow(-std::log(u), 1.0 / wecs.k);
}

ScenarioGenerator::ScenarioGenerator(const WecsParams& wecs, const CorrelationSpec& corr,
                                     Index num_farms, Index horizon)
    : wecs_(wecs), corr_(corr), farms_(num_farms), horizon_(horizon) {
  wecs_.validate();
  corr_.validate();
  if (corr_.num_farms() != num_farms)
    throw ConfigError("correlation size does not match the number of farms");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  root_spatial_ = psd_sqrt(corr_.spatial, "spatial correlation");
  // Innovations carry C - Phi C Phi so the state keeps cross-farm correlation
  // C in every slot while the lag-one autocorrelation is exactly phi.
  const auto phi = corr_.temporal.asDiagonal();
  Matrix innov = corr_.spatial - phi * corr_.spatial * phi;
  root_innov_ = psd_sqrt(innov, "AR innovation covariance");
}

Matrix ScenarioGenerator::latent(std::uint64_t seed, Index sample) const {
  NormalStream rng(stream_seed(seed, sample));
  Matrix x(farms_, horizon_);
  Vector eta(farms_);
  for (Index i = 0; i < farms_; ++i) eta(i) = rng.next();
  x.col(0) = root_spatial_ * eta;
  for (Index t = 1; t < horizon_; ++t) {
    for (Index i = 0; i < farms_; ++i) eta(i) = rng.next();
    x.col(t) = corr_.temporal.cwiseProduct(x.col(t - 1)) + root_innov_ * eta;
  }
  return x;
}

Matrix ScenarioGenerator::speeds(std::uint64_t seed, Index sample) const {
  Matrix x = latent(seed, sample);
  for (Index i = 0; i < farms_; ++i)
    for (Index t = 0; t < horizon_; ++t) x(i, t) = gaussian_to_speed(wecs_, x(i, t));
  return x;
}

ScenarioSet ScenarioGenerator::generate(Index num_samples, std::uint64_t seed,
                                        bool keep_per_farm) const {
  if (num_samples < 1) throw DomainError("need at least one sample");
  ScenarioSet set;
  set.samples.resize(num_samples, horizon_);
  set.seed = seed;
  set.meta = {wecs_, corr_, farms_};
  if (keep_per_farm) set.per_farm.reserve(num_samples);
  for (Index s = 0; s < num_samples; ++s) {
    Matrix v = speeds(seed, s);
    for (Index i = 0; i < farms_; ++i)
      for (Index t = 0; t < horizon_; ++t) v(i, t) = speed_to_power(wecs_, v(i, t));
    set.samples.row(s) = v.colwise().sum();
    if (keep_per_farm) set.per_farm.push_back(std::move(v));
  }
  return set;
}

ScenarioSet generate(const WecsParams& wecs, const CorrelationSpec& corr, Index num_farms,
                     Index horizon, Index num_samples, std::uint64_t seed, bool keep_per_farm) {
  return ScenarioGenerator(wecs, corr, num_farms, horizon)
      .generate(num_samples, seed, keep_per_farm);
}

double survival_joint(const ScenarioSet& set, const Vector& v) {
  if (v.size() != set.horizon()) throw DomainError("query length must equal horizon");
  Index count = 0;
  for (Index s = 0; s < set.num_samples(); ++s)
    if ((set.samples.row(s).transpose().array() >= v.array()).all()) ++count;
  return double(count) / double(set.num_samples());
}

double survival_marginal(const ScenarioSet& set, Index t, double w) {
  if (t < 0 || t >= set.horizon()) throw DomainError("slot index out of range");
  const Index count = (set.samples.col(t).array() >= w).count();
  return double(count) / double(set.num_samples());
}

Index quota(double p, Index num_samples) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
  // Guard against representation noise pushing e.g. 0.9 * 1000 above 900.
  const Index q = static_cast<Index>(std::ceil(p * double(num_samples) - 1e-9));
  return std::max<Index>(q, 1);
}

Vector quantile_bound(const ScenarioSet& set, double p) {
  const Index q = quota(p, set.num_samples());
  if (q > set.num_samples()) throw DomainError("quota exceeds sample size");
  Vector ell(set.horizon());
  std::vector<double> column(set.num_samples());
  for (Index t = 0; t < set.horizon(); ++t) {
    for (Index s = 0; s < set.num_samples(); ++s) column[s] = set.samples(s, t);
    std::nth_element(column.begin(), column.begin() + (q - 1), column.end(),
                     std::greater<double>());
    ell(t) = column[q - 1];  // q-th largest: the maximal w with survival >= p
  }
  return ell;
}

Vector worst_case(const ScenarioSet& set) {
  if (set.num_samples() < 1) throw DomainError("empty scenario set");
  return set.samples.colwise().minCoeff().transpose();
}

}  // namespace ccdispatch
