#pragma once

// The acceptance suite: twelve criteria, each a set of tests plus a runtime
// budget. Criteria 3-11 are harness experiments; 1 and 2 call the Bessel
// module directly; 12 reruns everything with another worker count and
// compares the written files byte for byte.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hitspde/harness.hpp"

namespace hitspde {

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<TestResult> tests;
  std::map<std::string, double> observations;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::filesystem::path> files;

  bool tests_pass() const;
  bool within_budget() const { return seconds <= budget_seconds; }
  bool pass() const { return tests_pass() && within_budget(); }
  /// "criterion N <title>: PASS|FAIL ..." with the failing tests and timing.
  std::string status_line() const;
};

struct SuiteEntry {
  int criterion = 0;
  ExperimentConfig config;
};

/// Experiment configs of criteria 3-11, writing into `output_dir`.
std::vector<SuiteEntry> suite_configs(const std::filesystem::path& output_dir);

/// Criterion 1: normalization and Chapman-Kolmogorov residuals.
CriterionResult density_suite(const std::filesystem::path& output_dir);
/// Criterion 2: sampler KS tests against quadrature CDFs and modulus samplers.
CriterionResult sampler_suite(const std::filesystem::path& output_dir);

struct SuiteOptions {
  std::filesystem::path output_dir = "check";
  /// Second output tree of criterion 12; empty: <output_dir>.rerun
  std::filesystem::path rerun_dir;
  unsigned workers = 0;
  /// Criterion ids to run; empty runs all. 12 implies a full rerun.
  std::vector<int> only;
  std::uint64_t seed_offset = 0;  // added to every master seed (0 for acceptance)
};

/// Runs the selected criteria, printing one status line per criterion to
/// `log` (if given) as it completes, and writes <output_dir>/check.json.
std::vector<CriterionResult> run_check_suite(const SuiteOptions& options, std::ostream* log = nullptr);

/// Relative paths of regular files that differ between two trees or exist
/// in only one of them.
std::vector<std::string> compare_trees(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace hitspde
