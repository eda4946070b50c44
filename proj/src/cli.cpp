#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include "ccdispatch/cli.hpp"
#include "ccdispatch/primal_dual.hpp"

namespace ccdispatch {

namespace {

ConfigFile resolve_config(const RunSpec& spec) {
  if (!spec.preset.empty()) {
    if (spec.preset == "paper_case") return paper_case();
    throw ConfigError("unknown preset: " + spec.preset);
  }
  if (spec.config_path.empty()) throw ConfigError("need --config or --preset");
  return load_config(spec.config_path);
}

int resolve_workers(const RunSpec& spec) {
  if (const char* env = std::getenv("CCDISPATCH_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (spec.workers > 0) return spec.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void check_grid(const RunSpec& spec, bool need_ns) {
  for (double p : spec.p_values)
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p values must lie in (0, 1)");
  if (spec.p_values.empty() && need_ns) throw ConfigError("no p values given");
  if (need_ns) {
    if (spec.ns_values.empty()) throw ConfigError("no sample sizes given");
    for (Index ns : spec.ns_values)
      if (ns < 1) throw DomainError("sample sizes must be at least 1");
    if (spec.seeds.empty()) throw ConfigError("no seeds given");
  }
  if (!(spec.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  std::filesystem::create_directories(spec.out_dir);
}

std::string cell_name(double p, Index ns, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "p%.6g_ns%lld_seed%llu", p, static_cast<long long>(ns),
                static_cast<unsigned long long>(seed));
  return buf;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ConvexityError*>(&e))
    return kExitInvalid;
  return kExitPartial;
}

struct Cell {
  double p = 0.0;
  Index ns = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double f_u = 0.0, f_rec = 0.0, f_saa = 0.0;
  std::string error;
};

}  // namespace

int cmd_generate(const RunSpec& spec) {
  try {
    const ConfigFile cfg = resolve_config(spec);
    if (!cfg.wind) throw ConfigError("config has no wind section to generate from");
    RunSpec checked = spec;
    if (checked.p_values.empty()) checked.p_values = {0.5};  // unused by generation
    check_grid(checked, true);
    const ScenarioGenerator gen(cfg.wind->wecs, cfg.wind->corr, cfg.wind->num_farms,
                                cfg.microgrid.horizon);
    for (Index ns : spec.ns_values) {
      for (std::uint64_t seed : spec.seeds) {
        const ScenarioSet set = gen.generate(ns, seed);
        const auto path =
            spec.out_dir / ("scenarios_ns" + std::to_string(ns) + "_seed" +
                            std::to_string(seed) + ".csv");
        save_scenarios(set, path);
        save_scenario_meta(set, path);
        std::cout << path.string() << "\n";
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "generate: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_solve(const RunSpec& spec) {
  ConfigFile cfg;
  std::vector<Cell> cells;
  std::optional<ScenarioSet> preloaded;
  try {
    cfg = resolve_config(spec);
    const bool from_csv = !spec.scenarios_csv.empty();
    check_grid(spec, !from_csv);
    if (from_csv) {
      preloaded = load_scenarios(spec.scenarios_csv);
      if (spec.p_values.empty()) throw ConfigError("no p values given");
      for (double p : spec.p_values)
        cells.push_back({p, preloaded->num_samples(), preloaded->seed});
    } else {
      if (!cfg.wind) throw ConfigError("config has no wind section; pass --scenarios");
      for (Index ns : spec.ns_values)
        for (double p : spec.p_values)
          for (std::uint64_t seed : spec.seeds) cells.push_back({p, ns, seed});
    }
  } catch (const std::exception& e) {
    std::cerr << "solve: " << e.what() << "\n";
    return exit_code_for(e);
  }

  const int workers = std::min<int>(resolve_workers(spec), static_cast<int>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      Cell& cell = cells[i];
      try {
        ScenarioSet set;
        if (preloaded) {
          set = *preloaded;
        } else {
          set = generate(cfg.wind->wecs, cfg.wind->corr, cfg.wind->num_farms,
                         cfg.microgrid.horizon, cell.ns, cell.seed);
        }
        RunOptions opts;
        opts.epsilon = spec.epsilon;
        const SolveReport report = run(cfg.microgrid, set, cell.p, opts);
        if (report.infeasible) throw std::runtime_error("model infeasible: " + report.note);
        cell.f_u = report.f_u;
        cell.f_rec = report.f_rec;
        cell.f_saa = report.f_saa;
        cell.ok = true;
        write_report(report, cfg.microgrid, cell.p, set.num_samples(), cell.seed,
                     spec.out_dir / ("report_" + cell_name(cell.p, cell.ns, cell.seed)));
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Summary shaped like the cost table: one row per sample size, one column
  // per p, plus the seed-averaged robust baseline.
  std::vector<Index> ns_order;
  for (const auto& cell : cells)
    if (std::find(ns_order.begin(), ns_order.end(), cell.ns) == ns_order.end())
      ns_order.push_back(cell.ns);
  std::ofstream out(spec.out_dir / "summary.csv");
  out << "ns";
  for (double p : spec.p_values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",p=%.6g", p);
    out << buf;
  }
  out << ",saa\n";
  std::size_t failures = 0;
  for (const auto& cell : cells)
    if (!cell.ok) ++failures;
  for (Index ns : ns_order) {
    out << ns;
    double saa_sum = 0.0;
    int saa_count = 0;
    for (double p : spec.p_values) {
      double sum = 0.0;
      int count = 0;
      for (const auto& cell : cells) {
        if (cell.ns != ns || cell.p != p) continue;
        if (!cell.ok) continue;
        sum += cell.f_rec;
        saa_sum += cell.f_saa;
        ++count;
        ++saa_count;
      }
      char buf[40];
      if (count > 0)
        std::snprintf(buf, sizeof buf, ",%.6f", sum / count);
      else
        std::snprintf(buf, sizeof buf, ",failed");
      out << buf;
    }
    if (saa_count > 0) {
      char buf[40];
      std::snprintf(buf, sizeof buf, ",%.6f", saa_sum / saa_count);
      out << buf;
    } else {
      out << ",failed";
    }
    out << "\n";
  }
  out.close();

  for (const auto& cell : cells)
    if (!cell.ok)
      std::cerr << "cell " << cell_name(cell.p, cell.ns, cell.seed)
                << " failed: " << cell.error << "\n";
  std::cout << (spec.out_dir / "summary.csv").string() << "\n";
  return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_validate(const std::filesystem::path& report_prefix,
                 const std::filesystem::path& fresh_csv, double slack, std::string* out) {
  std::ostringstream os;
  try {
    const LoadedReport report = load_report(report_prefix);
    if (report.net_load.size() == 0)
      throw ConfigError("report has no recovered schedule to validate");
    const ScenarioSet fresh = load_scenarios(fresh_csv);
    if (fresh.horizon() != report.net_load.size())
      throw ConfigError("fresh scenario horizon does not match the report");

    const double joint = survival_joint(fresh, report.net_load);
    os << "joint_survival " << joint << "\n";
    for (Index t = 0; t < fresh.horizon(); ++t)
      os << "marginal_survival_t" << (t + 1) << " "
         << survival_marginal(fresh, t, report.net_load(t)) << "\n";
    const bool pass = joint >= report.p - slack;
    os << "target_p " << report.p << "\n";
    os << "slack " << slack << "\n";
    os << "result " << (pass ? "pass" : "fail") << "\n";
    if (out) *out = os.str();
    std::cout << os.str();
    return pass ? kExitOk : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "validate: " << e.what() << "\n";
    if (out) *out = std::string("error: ") + e.what();
    return exit_code_for(e);
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Chance-constrained economic dispatch for islanded microgrids"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string out_dir = ".";
  std::string report_prefix, fresh_csv;
  double slack = 0.05;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", spec.config_path, "microgrid config file (JSON)");
    cmd->add_option("--preset", spec.preset, "built-in configuration (paper_case)");
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* gen = app.add_subcommand("generate", "sample wind scenarios to CSV");
  add_common(gen);
  gen->add_option("--ns", spec.ns_values, "sample counts");
  gen->add_option("--seed", spec.seeds, "seeds");

  auto* solve = app.add_subcommand("solve", "run the dispatch solver over a grid");
  add_common(solve);
  solve->add_option("--scenarios", spec.scenarios_csv, "pre-generated scenario CSV");
  solve->add_option("--p", spec.p_values, "probability levels");
  solve->add_option("--ns", spec.ns_values, "sample counts");
  solve->add_option("--seed", spec.seeds, "seeds");
  solve->add_option("--eps", spec.epsilon, "convergence tolerance");
  solve->add_option("--workers", spec.workers, "parallel cells (0 = hardware)");

  auto* validate = app.add_subcommand("validate", "out-of-sample risk check of a report");
  validate->add_option("--report", report_prefix, "report prefix (without .report.txt)")
      ->required();
  validate->add_option("--fresh", fresh_csv, "fresh scenario CSV")->required();
  validate->add_option("--slack", slack, "allowed shortfall below p");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  spec.out_dir = out_dir;
  if (gen->parsed()) return cmd_generate(spec);
  if (solve->parsed()) return cmd_solve(spec);
  if (validate->parsed()) return cmd_validate(report_prefix, fresh_csv, slack);
  return kExitInvalid;
}

}  // namespace ccdispatch
