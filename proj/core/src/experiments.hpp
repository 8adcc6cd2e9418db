#pragma once

// Kind-specific replica runners behind run_experiment.

#include <map>
#include <string>
#include <vector>

#include "hitspde/harness.hpp"

namespace hitspde::detail {

struct KindResult {
  std::vector<ReplicaMetrics> replicas;
  std::vector<TestResult> tests;
  std::map<std::string, double> observations;
  /// Extra JSON-ready blocks (name -> already serialized JSON value).
  std::map<std::string, std::string> sections;
};

KindResult run_kind(const ExperimentConfig& config, unsigned workers);

}  // namespace hitspde::detail
