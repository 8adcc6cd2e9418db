#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hitspde {

struct KsResult {
  double statistic = 0.0;  // D
  double p_value = 1.0;    // asymptotic Kolmogorov
  std::size_t n = 0;
};

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// One-sample test; requires >= 20 samples, not all equal.
KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf);
/// Two-sample test with effective size n m / (n + m).
KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};
MeanEstimate mean_estimate(std::span<const double> values);

struct TestResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// how value is compared with threshold
  enum class Compare { less, less_equal, greater, greater_equal } compare = Compare::greater_equal;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;

  bool pass() const;
};

/// One replica's scalar metrics, keyed by name.
using ReplicaMetrics = std::map<std::string, double>;

struct MetricSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

struct Summary {
  std::map<std::string, MetricSummary> metrics;
  /// Histogram of the "zeta_sup" metric if present: value -> count.
  std::map<int, std::size_t> zeta_histogram;
  /// zeta_sup values above the flag level (replica index, value).
  std::vector<std::pair<std::size_t, int>> flagged;
};

/// Aggregates homogeneous replica outputs; throws std::invalid_argument on a
/// schema mismatch (differing metric names). zeta_sup values > flag_above
/// are flagged.
Summary summarize(std::span<const ReplicaMetrics> replicas, int flag_above = 4);

/// CSV "metric,mean,stderr,min,max,n" then "zeta_sup,count" histogram block.
std::string summary_csv(const Summary& summary);

}  // namespace hitspde
