#include <doctest.h>

#include <random>

#include "ccdispatch/pep.hpp"
#include "test_support.hpp"

using namespace ccdispatch;
namespace ts = ccdispatch::testing;

TEST_CASE("three-sample instance keeps the top pair") {
  Matrix m(3, 1);
  m << 5, 7, 9;
  const ScenarioSet set = ts::set_from_matrix(m);
  const Vector lambda = Vector::Ones(1);
  const Vector ell = quantile_bound(set, 2.0 / 3.0);
  CHECK(ell(0) == 7.0);
  const PePoint pt = solve_mip(set, 2.0 / 3.0, lambda, ell);
  CHECK(pt.v(0) == 7.0);
  CHECK(pt.objective == 7.0);
  CHECK(pt.kept[0] == 0);
  CHECK(pt.kept[1] == 1);
  CHECK(pt.kept[2] == 1);
  CHECK(pt.kept_count() == 2);
}

TEST_CASE("zero multipliers fall back to the lexicographic quota") {
  std::mt19937_64 rng(3);
  const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, 9, 3));
  const Vector ell = quantile_bound(set, 0.6);
  const PePoint pt = solve_mip(set, 0.6, Vector::Zero(3), ell);
  CHECK(pt.objective == 0.0);
  const Index q = quota(0.6, 9);
  for (Index s = 0; s < 9; ++s) CHECK(pt.kept[static_cast<std::size_t>(s)] == (s < q ? 1 : 0));
  const PePoint ref = solve_exhaustive(set, 0.6, Vector::Zero(3), ell);
  CHECK((pt.v - ref.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pt.kept == ref.kept);
}

TEST_CASE("tiny p keeps the single best sample") {
  std::mt19937_64 rng(17);
  const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, 8, 2));
  const Vector lambda = ts::random_lambda(rng, 2);
  const double p = 0.05;  // quota 1
  const Vector ell = quantile_bound(set, p);
  const PePoint pt = solve_mip(set, p, lambda, ell);
  CHECK(pt.kept_count() == 1);
  double best = -1.0;
  for (Index s = 0; s < 8; ++s) {
    const Vector v = ell.cwiseMin(set.samples.row(s).transpose());
    best = std::max(best, lambda.dot(v));
  }
  CHECK(pt.objective == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("degenerate cases") {
  SUBCASE("single sample") {
    Matrix m(1, 2);
    m << 4, 6;
    const ScenarioSet set = ts::set_from_matrix(m);
    const Vector ell = quantile_bound(set, 0.5);
    const PePoint pt = solve_mip(set, 0.5, Vector::Ones(2), ell);
    CHECK(pt.kept[0] == 1);
    CHECK(pt.v(0) == 4.0);
    CHECK(pt.v(1) == 6.0);
  }
  SUBCASE("identical samples") {
    const ScenarioSet set = ts::set_from_matrix(Matrix::Constant(6, 2, 3.5));
    const Vector ell = quantile_bound(set, 0.5);
    const PePoint pt = solve_mip(set, 0.5, Vector::Ones(2), ell);
    CHECK((pt.v.array() == 3.5).all());
    CHECK(pt.kept_count() == 3);
  }
}

TEST_CASE("input guards") {
  std::mt19937_64 rng(1);
  const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, 5, 2));
  const Vector ell = quantile_bound(set, 0.5);
  Vector bad = Vector::Ones(2);
  bad(1) = -0.1;
  CHECK_THROWS_AS(solve_mip(set, 0.5, bad, ell), DomainError);
  CHECK_THROWS_AS(solve_exhaustive(set, 0.5, bad, ell), DomainError);
  const ScenarioSet big = ts::set_from_matrix(ts::random_samples(rng, 25, 2));
  CHECK_THROWS_AS(solve_exhaustive(big, 0.5, Vector::Ones(2), quantile_bound(big, 0.5)),
                  DomainError);
}

TEST_CASE("branch and bound matches exhaustive enumeration bitwise") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const Index n = 4 + Index(rng() % 12);  // up to 15
    const Index horizon = 1 + Index(rng() % 5);
    const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, n, horizon));
    const double p = std::uniform_real_distribution<double>(0.15, 0.95)(rng);
    Vector lambda = ts::random_lambda(rng, horizon);
    if (trial % 7 == 0) lambda(Index(rng() % horizon)) = 0.0;  // exercise flat components
    const Vector ell = quantile_bound(set, p);
    const PePoint a = solve_mip(set, p, lambda, ell);
    const PePoint b = solve_exhaustive(set, p, lambda, ell);
    REQUIRE(a.objective == b.objective);
    REQUIRE(a.kept == b.kept);
    REQUIRE((a.v.array() == b.v.array()).all());
  }
}

TEST_CASE("p-efficient point invariants") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 5 + Index(rng() % 30);
    const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, n, 4));
    const double p = std::uniform_real_distribution<double>(0.2, 0.9)(rng);
    const Vector lambda = ts::random_lambda(rng, 4);
    const Vector ell = quantile_bound(set, p);
    const PePoint pt = solve_mip(set, p, lambda, ell);
    CHECK(pt.kept_count() == quota(p, n));
    CHECK(survival_joint(set, pt.v) >= p - 1e-12);
    CHECK((pt.v.array() <= ell.array()).all());
    // kept samples dominate the point
    for (Index s = 0; s < n; ++s)
      if (pt.kept[static_cast<std::size_t>(s)])
        CHECK((set.samples.row(s).transpose().array() >= pt.v.array()).all());
  }
}

TEST_CASE("scaling the multipliers keeps the kept set") {
  std::mt19937_64 rng(88);
  const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, 14, 3));
  const Vector lambda = ts::random_lambda(rng, 3).array() + 0.05;
  const Vector ell = quantile_bound(set, 0.7);
  const PePoint a = solve_mip(set, 0.7, lambda, ell);
  const PePoint b = solve_mip(set, 0.7, Vector(4.0 * lambda), ell);
  CHECK(a.kept == b.kept);
  CHECK((a.v.array() == b.v.array()).all());
  CHECK(b.objective == doctest::Approx(4.0 * a.objective).epsilon(1e-12));
}

TEST_CASE("a sample dominating the bound is a costless keep") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 6 + Index(rng() % 8);
    Matrix m = ts::random_samples(rng, n, 3);
    const ScenarioSet set = ts::set_from_matrix(m);
    const double p = 0.5;
    const Vector lambda = ts::random_lambda(rng, 3);
    const Vector ell = quantile_bound(set, p);
    const PePoint before = solve_mip(set, p, lambda, ell);

    Matrix extended(n + 1, 3);
    extended.topRows(n) = m;
    extended.row(n) = (ell.array() + 1.0).transpose();  // dominates ell
    const ScenarioSet bigger = ts::set_from_matrix(extended);
    // same quota ratio; quota may grow by one but the new sample absorbs it
    const Vector ell2 = quantile_bound(bigger, p);
    const PePoint after = solve_mip(bigger, p, lambda, ell2);
    CHECK(after.objective >= before.objective - 1e-12);
  }
}

TEST_CASE("branch and bound explores few nodes at desk scale") {
  std::mt19937_64 rng(555);
  const ScenarioSet set = ts::set_from_matrix(ts::random_samples(rng, 400, 8));
  Vector lambda = ts::random_lambda(rng, 8);
  lambda(2) = 0.0;
  lambda(5) = 0.0;
  const Vector ell = quantile_bound(set, 0.9);
  BnbStats stats;
  const PePoint pt = solve_mip(set, 0.9, lambda, ell, &stats);
  CHECK(pt.kept_count() == quota(0.9, 400));
  CHECK(stats.incumbent <= stats.root_bound + 1e-12);
  MESSAGE("nodes explored: ", stats.nodes);
}
