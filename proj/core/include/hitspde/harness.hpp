#pragma once

// Experiment configuration, replica execution and report files.
//
// Config files are JSON objects with "schema_version": 1 and a "kind". All
// other keys are optional and default as below; unknown keys are rejected.
//
//   {
//     "schema_version": 1,
//     "kind": "hitting-sweep",
//     "name": "hitting",                 // file stem, defaults to the kind
//     "replicas": 200,
//     "master_seed": 20260101,
//     "output_dir": "out",
//     "grid":   {"nx": 64, "horizon": 1.0, "dt_ratio": 1.0, "interval": [0, 1],
//                "refinements": [32, 64, 128]},
//     "model":  {"deltas": [3, 3.5, 4, 5, 7], "boundary": 0.0, "family": "projected",
//                "epsilon": 1e-3, "lambda": 1e-3, "drift": "implicit-split",
//                "initial": "mean-bridge"},
//     "zeros":  {"threshold": 0.1, "kappa": 0.5, "alpha": 0.7, "min_separation": 4,
//                "boundary_layer": 0.125, "separations": [2, 4, 8, 16]},
//     "probe":  {"x": 0.5, "beta": 0.25},
//     "string": {"dims": [1], "half_width": 0.5, "horizon": 1.0, "dx": 0.03125,
//                "refinements": [0.0625, 0.03125], "probe_pairs": 10,
//                "scale": 1.4142135623730951},
//     "checks": ["reflection-profile"]
//   }

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hitspde/interval.hpp"
#include "hitspde/random.hpp"
#include "hitspde/spde_solver.hpp"
#include "hitspde/stats.hpp"
#include "hitspde/zero_analysis.hpp"

namespace hitspde {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  invariant_test,
  hitting_sweep,
  zeta_histogram,
  string_zeros,
  scaling_check,
  coupling_check,
  holder_check,
};

std::string_view to_string(ExperimentKind kind);
/// Throws ConfigError for an unknown name.
ExperimentKind parse_kind(std::string_view name);

/// How members with delta > 3 are discretized.
enum class FamilyMode { projected, penalized };
enum class InitialProfile { mean_bridge, bridge_draw, constant };

struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  ExperimentKind kind = ExperimentKind::hitting_sweep;
  std::string name;  // empty: the kind name
  std::size_t replicas = 0;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";

  // solver grid
  int nx = 64;
  double horizon = 1.0;
  double dt_ratio = 1.0;  // dt = dt_ratio * dx^2
  Interval interval{0.0, 1.0};
  std::vector<int> refinements;

  // model
  std::vector<double> deltas{3.0};
  double boundary = 0.0;
  FamilyMode family = FamilyMode::projected;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  bool implicit_drift = true;
  InitialProfile initial = InitialProfile::mean_bridge;

  // zero-set statistics
  std::optional<double> threshold;  // absent: kappa dx^(alpha / 2)
  double kappa = 0.5;
  double alpha = 0.7;
  int min_separation = 4;
  double boundary_layer = 0.125;   // fraction of the window excluded at each end
  std::vector<int> separations;    // extra min_separation values reported

  double probe_x = 0.5;
  double beta = 0.25;  // Holder exponent of the modulus statistics

  /// Optional sub-checks of a kind (e.g. "reflection-profile", "scaling").
  std::vector<std::string> checks;

  // pinned string
  std::vector<int> dims{1};
  double string_half_width = 0.5;
  double string_horizon = 1.0;
  double string_dx = 1.0 / 32.0;
  std::vector<double> string_refinements;  // extra dx values
  int probe_pairs = 10;
  double scale = 1.4142135623730951;

  std::string stem() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses and validates a config document; `origin` labels errors.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "config");
/// Reads a config file; I/O failures and parse errors are ConfigError.
ExperimentConfig load_config(const std::filesystem::path& file);
/// Canonical JSON form (every field spelled out, fixed key order).
std::string config_to_json(const ExperimentConfig& config);

/// Solver grid of a config at nx interior nodes.
GridSpec solver_grid(const ExperimentConfig& config, int nx);
/// Member of dimension delta: reflected for 3, otherwise projected or
/// penalized per config.family. Validated against the grid.
SolverConfig member_config(const ExperimentConfig& config, double delta, const GridSpec& grid);
/// Initial row (all nodes) per config.initial; bridge draws use `rng`.
std::vector<double> initial_profile(const ExperimentConfig& config, const GridSpec& grid, double delta, Rng& rng);
/// Clustering at the config threshold (or kappa dx^(alpha/2)) with the
/// boundary layer excluded.
ClusterConfig cluster_config(const ExperimentConfig& config, const GridSpec& grid, int min_separation);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicaMetrics> replicas;
  Summary summary;
  std::vector<TestResult> tests;
  /// Scalar results that are reported but not asserted.
  std::map<std::string, double> observations;
  /// Kind-specific JSON blocks of the summary (name -> serialized value).
  std::map<std::string, std::string> sections;
  std::vector<std::filesystem::path> files;

  /// All tests pass (vacuously true without tests).
  bool pass() const;
};

struct RunOptions {
  bool write_files = true;
  /// Threads for the replica loop; 0 uses worker_count().
  unsigned workers = 0;
};

/// Runs the replicas of `config`, aggregates, evaluates the kind's tests and
/// writes <stem>.replicas.csv, <stem>.summary.csv and <stem>.json into the
/// output directory. Replica failures are rethrown as std::runtime_error
/// carrying the replica index and seed; I/O failures as IoError.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// The summary JSON of a report (schema-versioned; deterministic bytes).
std::string report_json(const ExperimentReport& report);
/// Per-replica CSV: replica,seed,<metric>...
std::string replicas_csv(const ExperimentReport& report);

/// Writes `text` to `file`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& file, std::string_view text);

}  // namespace hitspde
