#pragma once

// (P1, P2) grid sweeps over any engine, with an on-disk journal for resume.

#include <string>
#include <vector>

#include "rydchirp/classical.hpp"
#include "rydchirp/model.hpp"
#include "rydchirp/predictors.hpp"

namespace rydchirp {

enum class Engine { Full, Rwa, Classical, Predictors };
std::string to_string(Engine e);
Engine parse_engine(const std::string& name);

struct SweepConfig {
  static constexpr int kSchemaVersion = 1;

  ProblemSpec base;
  double p1_min = 0.03;
  double p1_max = 3.0;
  int p1_count = 12;
  double p2_min = 0.3;
  double p2_max = 100.0;
  int p2_count = 12;
  Engine engine = Engine::Rwa;
  EnsembleSpec ensemble{};    // classical only; i3/i1 default from the base spec
  std::string output_dir = "sweep_out";
  std::string cache_dir;      // coupling cache, empty = no cache
  int threads = 1;
  bool sra_guard = true;      // quantum engines refuse cells above the SRA line
  double gamma = 1.0;
  int max_cells = 0;          // stop after this many new cells (0 = all); used to test resume

  void validate() const;  // throws ConfigError
  std::vector<double> p1_grid() const;
  std::vector<double> p2_grid() const;

  // Keys: schema, engine, p1_min ... plus all ProblemSpec keys and ensemble_* keys.
  KeyValueConfig to_config() const;
  static SweepConfig from_config(const KeyValueConfig& cfg);  // unknown keys -> ConfigError
  // Hash of the parts that determine results (excludes threads, output_dir, max_cells).
  std::string result_hash() const;
};

// Default classical actions: I3 = n0, I1 = n0 for the circular m = n0 - 1 chain, I1 = m otherwise.
EnsembleSpec default_ensemble(const ProblemSpec& spec);

struct CellRecord {
  int i1 = 0;  // p1 index
  int i2 = 0;  // p2 index
  double p1 = 0.0;
  double p2 = 0.0;
  std::string status;  // ok | failed | refused
  double value = 0.0;  // excited or captured fraction
  double ionized = 0.0;
  std::string regime;
  std::string message;
};

struct SweepResult {
  SweepConfig config;
  RegimeLines lines;
  std::vector<CellRecord> cells;  // ordered by (i2, i1)
  int failed_cells = 0;
  int refused_cells = 0;
  int new_cells = 0;       // evaluated in this invocation
  bool complete = false;   // every cell has a record
  bool failed = false;     // more than 10% of cells failed
  double wall_seconds = 0.0;

  const CellRecord& at(int i1, int i2) const;
  std::string cells_csv() const;
  std::string lines_csv(bool include_sra) const;
};

// Evaluates every grid cell not already in the journal of config.output_dir.
SweepResult run_sweep(const SweepConfig& config);
// Reloads config.txt from an output directory and continues.
SweepResult resume_sweep(const std::string& output_dir, int threads = 1);
// Loads a finished or partial sweep without evaluating anything.
SweepResult load_sweep(const std::string& output_dir);

// figure_id: fig3 | fig4a | fig4b | fig5a | fig5b. Writes <id>_cells.csv,
// <id>_lines.csv and <id>_recipe.txt; returns the written paths.
std::vector<std::string> emit_figure_data(const SweepResult& result, const std::string& figure_id,
                                          const std::string& dir);

// Exit code for a finished sweep: 0 success, 3 partial failure, 4 sweep failed.
int sweep_exit_code(const SweepResult& result);

std::string code_version();

}  // namespace rydchirp
