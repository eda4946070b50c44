#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ccdispatch/microgrid.hpp"
#include "ccdispatch/primal_dual.hpp"
#include "ccdispatch/scenario.hpp"
#include "ccdispatch/types.hpp"

namespace ccdispatch {

/// Wind-side generation parameters as they appear in the config file.
struct WindSpec {
  WecsParams wecs;
  CorrelationSpec corr;
  Index num_farms = 0;
};

/// Full contents of a config file: the microgrid plus, optionally, the wind
/// generation model.
struct ConfigFile {
  MicrogridConfig microgrid;
  std::optional<WindSpec> wind;
};

ConfigFile load_config(const std::filesystem::path& path);
void save_config(const ConfigFile& cfg, const std::filesystem::path& path);

/// Reference configuration reproducing the desk study: three generators, six
/// dispatchable loads, three storage units, four wind farms, eight slots.
ConfigFile paper_case();

/// Scenario CSV: header t1..tT, one sample per line, full precision.
void save_scenarios(const ScenarioSet& set, const std::filesystem::path& csv_path);

/// Loads a scenario CSV; reads the `.meta.json` sidecar when present.
ScenarioSet load_scenarios(const std::filesystem::path& csv_path);

/// Sidecar metadata (seed and generation parameters) next to a scenario CSV.
void save_scenario_meta(const ScenarioSet& set, const std::filesystem::path& csv_path);

/// Report files for one solve: `<prefix>.report.txt` (key/value),
/// `<prefix>.history.csv` (per-iteration master value and gap) and
/// `<prefix>.schedule.csv` (per-slot aggregates P_G, P_D, P_B and net load).
void write_report(const SolveReport& report, const MicrogridConfig& cfg,
                  double p, Index num_samples, std::uint64_t seed,
                  const std::filesystem::path& prefix);

/// Minimal report contents needed by downstream validation.
struct LoadedReport {
  double p = 0.0;
  double f_u = 0.0;
  double f_rec = 0.0;
  double f_saa = 0.0;
  Index horizon = 0;
  Vector net_load;  // g^t of the recovered schedule
};

LoadedReport load_report(const std::filesystem::path& prefix);

}  // namespace ccdispatch
