#include <doctest.h>

#include <random>

#include "ccdispatch/io.hpp"
#include "ccdispatch/primal_dual.hpp"
#include "test_support.hpp"

using namespace ccdispatch;
namespace ts = ccdispatch::testing;

TEST_CASE("single-scenario run collapses to the worst case") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(1, 3);
  const SolveReport report = run(cfg, set, 0.8);
  REQUIRE(report.converged);
  CHECK(report.iterations <= 2);
  CHECK((report.state.columns.front().v - set.samples.row(0).transpose())
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK(report.f_u == doctest::Approx(report.f_rec).epsilon(1e-6));
  CHECK(report.f_u == doctest::Approx(report.f_saa).epsilon(1e-6));
}

TEST_CASE("bound chain against the exhaustive sample optimum") {
  const MicrogridConfig cfg = ts::oracle_config();
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const ScenarioSet set = ts::oracle_scenarios(12, seed);
    const double p = 0.75;
    const SolveReport report = run(cfg, set, p);
    REQUIRE(report.converged);
    const ts::SampleOptimum oracle = ts::exhaustive_sample_optimum(cfg, set, p);
    CHECK(report.f_u <= oracle.cost + 1e-6);
    CHECK(report.f_rec >= oracle.cost - 1e-6);
    CHECK(oracle.cost <= report.f_saa + 1e-6);
    CHECK(report.f_u <= report.f_rec + 1e-6);
    CHECK(report.f_rec <= report.f_saa + 1e-6);
  }
}

TEST_CASE("master value is non-increasing over iterations") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(40, 11);
  const SolveReport report = run(cfg, set, 0.8);
  REQUIRE(report.converged);
  for (std::size_t i = 1; i < report.master_history.size(); ++i)
    CHECK(report.master_history[i] <= report.master_history[i - 1] + 1e-7);
}

TEST_CASE("recovery") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(30, 21);
  const SolveReport report = run(cfg, set, 0.8);
  REQUIRE(report.converged);
  SUBCASE("single active column reproduces the master value") {
    if (report.active.size() == 1) {
      CHECK(report.epsilon_optimal);
      CHECK(report.f_rec == doctest::Approx(report.f_u).epsilon(1e-6));
    } else {
      CHECK(report.f_rec >= report.f_u - 1e-7);
    }
  }
  SUBCASE("recovered schedule satisfies the training risk") {
    CHECK(report.training_risk >= 0.8);
    const auto violations =
        validate_schedule(cfg, report.recovered,
                          report.state.columns[static_cast<std::size_t>(
                                                   report.recovered_column)]
                              .v);
    CHECK(violations.empty());
  }
}

TEST_CASE("explicit recover call agrees with the report") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(25, 33);
  const SolveReport report = run(cfg, set, 0.7);
  REQUIRE(report.converged);
  const Recovery rec = recover(cfg, report.state);
  REQUIRE(rec.feasible);
  CHECK(rec.cost == doctest::Approx(report.f_rec).epsilon(1e-9));
  CHECK(rec.cost >= report.f_u - 1e-7);
}

TEST_CASE("robust baseline") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(50, 4);
  const Baseline base = saa_baseline(cfg, set);
  REQUIRE(base.feasible);
  SUBCASE("worst-case dispatch is feasible for every sample") {
    CHECK(survival_joint(set, net_load(cfg, base.schedule)) == 1.0);
  }
  SUBCASE("cost does not depend on p") {
    const SolveReport a = run(cfg, set, 0.6);
    const SolveReport b = run(cfg, set, 0.9);
    CHECK(a.f_saa == doctest::Approx(b.f_saa).epsilon(1e-9));
  }
  SUBCASE("cost is non-decreasing as samples accumulate") {
    // Samples nest per seed, so the worst case only worsens.
    double previous = -1e9;
    for (Index ns : {10, 25, 50}) {
      const Baseline bl = saa_baseline(cfg, ts::oracle_scenarios(ns, 4));
      REQUIRE(bl.feasible);
      CHECK(bl.cost >= previous - 1e-8);
      previous = bl.cost;
    }
  }
}

TEST_CASE("dual function") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(12, 8);
  const double p = 0.75;
  SUBCASE("zero multipliers give the unconstrained dispatch optimum") {
    const double phi = dual_value(cfg, set, p, Vector::Zero(2));
    // With no coupling price the dispatch subproblem ignores wind entirely;
    // a far-slack right-hand side reproduces that optimum.
    Qp qp = build_qp(cfg, Vector::Constant(2, 100.0));
    const QpSolution sol = solve(qp);
    REQUIRE(sol.status == QpStatus::optimal);
    CHECK(phi == doctest::Approx(sol.value + storage_cost_constant(cfg)).epsilon(1e-6));
  }
  SUBCASE("weak duality against the enumeration oracle") {
    const ts::SampleOptimum oracle = ts::exhaustive_sample_optimum(cfg, set, p);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector lambda = ts::random_lambda(rng, 2, 2.0);
      CHECK(dual_value(cfg, set, p, lambda) <= oracle.cost + 1e-6);
    }
  }
  SUBCASE("at the converged multipliers the dual nearly attains the master") {
    const SolveReport report = run(cfg, set, p);
    REQUIRE(report.converged);
    const double phi = dual_value(cfg, set, p, report.state.lambda);
    CHECK(phi <= report.f_u + 1e-4 + 1e-6);
  }
}

TEST_CASE("infeasible demand is reported with diagnostics") {
  MicrogridConfig cfg = ts::oracle_config();
  cfg.base_load = Vector::Constant(2, 500.0);  // far beyond capacity plus wind
  const ScenarioSet set = ts::oracle_scenarios(10, 2);
  const SolveReport report = run(cfg, set, 0.75);
  CHECK(report.infeasible);
  CHECK(!report.converged);
  CHECK(report.note.find("infeasible") != std::string::npos);
}

TEST_CASE("master extension carries the columns") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(10, 14);
  const Vector ell = quantile_bound(set, 0.75);
  std::vector<PePoint> columns;
  columns.push_back(solve_mip(set, 0.75, Vector::Ones(2), ell));
  columns.push_back(solve_mip(set, 0.75, Vector(Vector::Constant(2, 0.2)), ell));
  const Qp master = build_master_qp(cfg, columns);
  const Index base_vars = DispatchLayout::of(cfg).size();
  CHECK(master.n_vars == base_vars + 2);
  // convex-combination row sums the alphas
  CHECK(master.a_eq.row(master.a_eq.rows() - 1).tail(2).sum() == doctest::Approx(2.0));
  const QpSolution sol = solve(master);
  REQUIRE(sol.status == QpStatus::optimal);
  CHECK(sol.x.tail(2).sum() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.x.tail(2).minCoeff() >= -1e-9);
}

TEST_CASE("fixed sample, growing p never cheapens the master") {
  const MicrogridConfig cfg = ts::oracle_config();
  const ScenarioSet set = ts::oracle_scenarios(60, 9);
  double previous = -1e9;
  for (double p : {0.6, 0.75, 0.9}) {
    const SolveReport report = run(cfg, set, p);
    REQUIRE(report.converged);
    CHECK(report.f_u >= previous - 1e-6);
    previous = report.f_u;
  }
}
