#include <doctest.h>

#include <cmath>

#include "ccdispatch/io.hpp"
#include "ccdispatch/scenario.hpp"
#include "test_support.hpp"

using namespace ccdispatch;
namespace ts = ccdispatch::testing;

namespace {

WecsParams table_wecs() { return {10.0, 2.2, 3.0, 14.0, 26.0, 10.0}; }

CorrelationSpec independent(Index farms) {
  CorrelationSpec corr;
  corr.spatial = Matrix::Identity(farms, farms);
  corr.temporal = Vector::Zero(farms);
  return corr;
}

}  // namespace

TEST_CASE("power curve") {
  const WecsParams w = table_wecs();
  CHECK(speed_to_power(w, 2.0) == 0.0);    // below cut-in
  CHECK(speed_to_power(w, 14.0) == 10.0);  // rated
  CHECK(speed_to_power(w, 20.0) == 10.0);
  CHECK(speed_to_power(w, 27.0) == 0.0);  // beyond cut-out
  CHECK(speed_to_power(w, 8.5) == doctest::Approx(10.0 * (8.5 - 3.0) / (14.0 - 3.0)));
  CHECK(speed_to_power(w, 8.5) == doctest::Approx(5.0));
  for (double v = 0.0; v < 40.0; v += 0.37) {
    CHECK(speed_to_power(w, v) >= 0.0);
    CHECK(speed_to_power(w, v) <= w.w_rated);
  }
}

TEST_CASE("quota guards representation noise") {
  CHECK(quota(0.6, 5) == 3);
  CHECK(quota(0.9, 1000) == 900);
  CHECK(quota(0.75, 12) == 9);
  CHECK(quota(0.0001, 5) == 1);
  CHECK_THROWS_AS(quota(0.0, 5), DomainError);
  CHECK_THROWS_AS(quota(1.0, 5), DomainError);
}

TEST_CASE("marginal quantile bound") {
  Matrix m(5, 1);
  m << 1, 2, 3, 4, 5;
  const ScenarioSet set = ts::set_from_matrix(m);
  SUBCASE("order statistic with survival at least p") {
    const Vector ell = quantile_bound(set, 0.6);
    CHECK(ell(0) == 3.0);
    CHECK(survival_marginal(set, 0, 3.0) == doctest::Approx(0.6));
    CHECK(survival_marginal(set, 0, 4.0) == doctest::Approx(0.4));
  }
  SUBCASE("tiny p returns the maximum") { CHECK(quantile_bound(set, 0.1)(0) == 5.0); }
  SUBCASE("degenerate column") {
    const ScenarioSet flat = ts::set_from_matrix(Matrix::Constant(4, 2, 7.0));
    CHECK(quantile_bound(flat, 0.5)(0) == 7.0);
    CHECK(quantile_bound(flat, 0.9)(1) == 7.0);
  }
  SUBCASE("monotone non-increasing in p") {
    std::mt19937_64 rng(5);
    const ScenarioSet rand_set = ts::set_from_matrix(ts::random_samples(rng, 40, 6));
    Vector prev = quantile_bound(rand_set, 0.05);
    for (double p : {0.2, 0.5, 0.8, 0.95}) {
      const Vector ell = quantile_bound(rand_set, p);
      CHECK((ell.array() <= prev.array() + 1e-15).all());
      prev = ell;
    }
  }
}

TEST_CASE("survival functions") {
  Matrix m(3, 2);
  m << 1, 1, 2, 2, 3, 0;
  const ScenarioSet set = ts::set_from_matrix(m);
  SUBCASE("joint") {
    Vector v(2);
    v << 1, 1;
    CHECK(survival_joint(set, v) == doctest::Approx(2.0 / 3.0));
    CHECK(survival_joint(set, worst_case(set)) == 1.0);
    v << 4, 3;
    CHECK(survival_joint(set, v) == 0.0);
  }
  SUBCASE("marginal") {
    Matrix col(5, 1);
    col << 1, 2, 3, 4, 5;
    const ScenarioSet s5 = ts::set_from_matrix(col);
    CHECK(survival_marginal(s5, 0, 3.0) == doctest::Approx(0.6));
    CHECK(survival_marginal(s5, 0, 0.0) == 1.0);
    CHECK(survival_marginal(s5, 0, 6.0) == 0.0);
    CHECK_THROWS_AS(survival_marginal(s5, 1, 0.0), DomainError);
  }
  SUBCASE("joint is dominated by every marginal") {
    std::mt19937_64 rng(9);
    const ScenarioSet rand_set = ts::set_from_matrix(ts::random_samples(rng, 60, 4));
    for (int trial = 0; trial < 25; ++trial) {
      const Vector v = ts::random_lambda(rng, 4, 8.0);
      double min_marginal = 1.0;
      for (Index t = 0; t < 4; ++t)
        min_marginal = std::min(min_marginal, survival_marginal(rand_set, t, v(t)));
      CHECK(survival_joint(rand_set, v) <= min_marginal + 1e-12);
    }
  }
}

TEST_CASE("worst case vector") {
  Matrix m(2, 2);
  m << 1, 5, 2, 0;
  const ScenarioSet set = ts::set_from_matrix(m);
  const Vector wbar = worst_case(set);
  CHECK(wbar(0) == 1.0);
  CHECK(wbar(1) == 0.0);
  const ScenarioSet single = ts::set_from_matrix(Matrix::Constant(1, 3, 4.2));
  CHECK((worst_case(single).array() == 4.2).all());
}

TEST_CASE("generation is reproducible and in range") {
  const auto wind = *paper_case().wind;
  const ScenarioSet a = generate(wind.wecs, wind.corr, 4, 8, 50, 123);
  const ScenarioSet b = generate(wind.wecs, wind.corr, 4, 8, 50, 123);
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);  // bit identical
  CHECK(a.samples.minCoeff() >= 0.0);
  CHECK(a.samples.maxCoeff() <= 4 * wind.wecs.w_rated);
  const ScenarioSet c = generate(wind.wecs, wind.corr, 4, 8, 50, 124);
  CHECK((a.samples - c.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("samples nest as the count grows on a fixed seed") {
  const auto wind = *paper_case().wind;
  const ScenarioSet small = generate(wind.wecs, wind.corr, 4, 8, 20, 5);
  const ScenarioSet large = generate(wind.wecs, wind.corr, 4, 8, 60, 5);
  CHECK((large.samples.topRows(20) - small.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weibull marginal of the copula") {
  const WecsParams w = table_wecs();
  const ScenarioGenerator gen(w, independent(1), 1, 8);
  Index below = 0;
  const Index n = 12500;  // 1e5 draws over 8 slots
  for (Index s = 0; s < n; ++s) {
    const Matrix v = gen.speeds(42, s);
    below += (v.array() < 3.0).count();
  }
  const double expected = 1.0 - std::exp(-std::pow(0.3, 2.2));
  CHECK(double(below) / double(n * 8) == doctest::Approx(expected).epsilon(0.15));
  CHECK(std::abs(double(below) / double(n * 8) - expected) <= 0.01);
}

TEST_CASE("independent farms show no lag-one correlation") {
  const ScenarioGenerator gen(table_wecs(), independent(2), 2, 10);
  double sum_xy = 0.0, sum_xx = 0.0;
  const Index n = 5000;
  for (Index s = 0; s < n; ++s) {
    const Matrix x = gen.latent(7, s);
    for (Index i = 0; i < 2; ++i)
      for (Index t = 1; t < 10; ++t) {
        sum_xy += x(i, t) * x(i, t - 1);
        sum_xx += x(i, t) * x(i, t);
      }
  }
  CHECK(std::abs(sum_xy / sum_xx) <= 0.05);
}

TEST_CASE("latent field carries the requested correlations") {
  const auto wind = *paper_case().wind;
  const ScenarioGenerator gen(wind.wecs, wind.corr, 4, 8);
  const Index n = 4000;
  Matrix cross = Matrix::Zero(4, 4);
  Vector lag_num = Vector::Zero(4), lag_den = Vector::Zero(4);
  for (Index s = 0; s < n; ++s) {
    const Matrix x = gen.latent(99, s);
    for (Index t = 0; t < 8; ++t) cross += x.col(t) * x.col(t).transpose();
    for (Index i = 0; i < 4; ++i)
      for (Index t = 1; t < 8; ++t) {
        lag_num(i) += x(i, t) * x(i, t - 1);
        lag_den(i) += x(i, t) * x(i, t);
      }
  }
  cross /= double(n * 8);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(cross(i, i) - 1.0) <= 0.06);
    CHECK(std::abs(lag_num(i) / lag_den(i) - wind.corr.temporal(i)) <= 0.06);
    for (Index j = 0; j < 4; ++j)
      CHECK(std::abs(cross(i, j) - wind.corr.spatial(i, j)) <= 0.06);
  }
}

TEST_CASE("non-PSD correlation is rejected with the smallest eigenvalue") {
  CorrelationSpec corr;
  corr.temporal = Vector::Zero(2);
  corr.spatial = Matrix(2, 2);
  corr.spatial << 1.0, 1.2, 1.2, 1.0;  // eigenvalues -0.2 and 2.2
  try {
    corr.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("eigenvalue") != std::string::npos);
    CHECK(what.find("-0.2") != std::string::npos);
  }
}

TEST_CASE("parameter validation") {
  WecsParams w = table_wecs();
  w.v_rated = 2.0;  // below cut-in
  CHECK_THROWS_AS(w.validate(), ConfigError);
  CorrelationSpec corr = independent(2);
  corr.temporal(0) = 1.0;
  CHECK_THROWS_AS(corr.validate(), ConfigError);
  CHECK_THROWS_AS(generate(table_wecs(), independent(2), 3, 4, 10, 1), ConfigError);
}
