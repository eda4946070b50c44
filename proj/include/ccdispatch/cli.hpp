#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccdispatch/io.hpp"
#include "ccdispatch/types.hpp"

namespace ccdispatch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some grid cells failed
inline constexpr int kExitInvalid = 2;  // input validation failure

/// One batch run: config source, scenario source, and the (p, N_s, seed)
/// grid to sweep.
struct RunSpec {
  std::string config_path;          // empty when preset is set
  std::string preset;               // "paper_case"
  std::string scenarios_csv;        // pre-generated scenarios; empty -> generate
  std::vector<double> p_values;
  std::vector<Index> ns_values;
  std::vector<std::uint64_t> seeds;
  double epsilon = 1e-4;
  std::filesystem::path out_dir = ".";
  int workers = 0;  // 0 -> hardware concurrency
};

/// Writes one scenario CSV (plus sidecar metadata) per (N_s, seed) cell.
int cmd_generate(const RunSpec& spec);

/// Runs the primal-dual solve for every (p, N_s, seed) cell, writes one
/// report per cell and a summary CSV with rows N_s, columns p, plus the
/// baseline column (seed-averaged).
int cmd_solve(const RunSpec& spec);

/// Out-of-sample risk assessment of a written report against a fresh
/// scenario CSV.
int cmd_validate(const std::filesystem::path& report_prefix,
                 const std::filesystem::path& fresh_csv, double slack,
                 std::string* out = nullptr);

int run_cli(int argc, char** argv);

}  // namespace ccdispatch
