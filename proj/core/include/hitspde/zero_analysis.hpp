#pragma once

// Thresholded zero-set statistics of discrete fields.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hitspde/spde_solver.hpp"

namespace hitspde {

struct ClusterConfig {
  double threshold = 0.1;     // nodes with value < threshold are near-zero
  int min_separation = 4;     // runs separated by fewer above-threshold nodes merge
  int boundary_exclusion = 1; // nodes dropped at each end, >= 1

  /// threshold = kappa * dx^(alpha / 2)
  static ClusterConfig schedule(double dx, double kappa = 0.5, double alpha = 0.7, int min_separation = 4,
                                int boundary_exclusion = 1);
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Nodes excluded at each end for a layer that is `fraction` of the window,
/// at least one node.
int boundary_layer_nodes(const GridSpec& grid, double fraction);

/// slice holds every node of a time slice, boundary nodes included.
int count_zero_clusters(std::span<const double> slice, const ClusterConfig& config);
/// Vector slice [nodes][dim], reduced through the Euclidean norm first.
int count_zero_clusters(std::span<const double> slice, int dim, const ClusterConfig& config);
/// Indices of sub-threshold interior nodes (monotone in the threshold).
std::vector<int> near_zero_nodes(std::span<const double> slice, const ClusterConfig& config);

struct ZeroReport {
  std::vector<int> counts;  // per slice, k = 0..nt
  int zeta_sup = 0;         // max over k >= 1
  double threshold = 0.0;
  std::optional<GridSpec> grid;
  std::uint64_t seed = 0;
};

/// Incremental version for streamed paths.
class ZeroTracker {
 public:
  ZeroTracker(const ClusterConfig& config, int dim = 1) : config_(config), dim_(dim) { config.validate(); }
  void observe(int k, std::span<const double> slice);
  ZeroReport report(std::optional<GridSpec> grid = std::nullopt, std::uint64_t seed = 0) const;
  int zeta_sup() const noexcept { return zeta_sup_; }
  const std::vector<int>& counts() const noexcept { return counts_; }

 private:
  ClusterConfig config_;
  int dim_;
  std::vector<int> counts_;
  int zeta_sup_ = 0;
};

ZeroReport zeta_sup(const FieldPath& path, const ClusterConfig& config, std::uint64_t seed = 0);

/// CSV "t,count", one line per slice; t is the slice index without a grid.
std::string zero_report_csv(const ZeroReport& report);
/// {"schema_version": 1, "zeta_sup", "threshold", "grid", "seed"}; grid is
/// null when absent.
std::string zero_report_json(const ZeroReport& report);

/// floor(4 / (delta - 2)) by the case split at 10/3, 4 and 6.
int theoretical_bound(double delta);
/// Bound on the string zero count; nullopt when unbounded (d <= 2).
std::optional<int> string_bound(int d);

struct HolderReport {
  double beta = 0.0;
  double gamma_space = 0.0;
  double gamma_time_lower = 0.0;
  double gamma_time_two_sided = 0.0;  // observational only
  std::optional<double> refinement_ratio;
};

/// Dyadic-lag modulus statistics; vector paths are reduced through the norm.
HolderReport holder_estimate(const FieldPath& path, double beta);
/// fine report with refinement_ratio = fine.gamma_space / coarse.gamma_space.
HolderReport holder_refinement(const HolderReport& coarse, const HolderReport& fine);

struct ReflectionProfile {
  std::vector<double> slice_mass;  // eta mass of step k (k = 0..nt-1)
  double total_mass = 0.0;
  /// Steps forming the smallest set carrying >= 99% of the mass (ascending).
  std::vector<int> carrying_steps;
  int slices_with_one = 0;
  std::optional<double> fraction_one;  // empty profile -> nullopt
  double misplaced_mass = 0.0;         // mass on cells with u after the step > threshold
};

/// Throws std::invalid_argument for a path without eta.
ReflectionProfile reflection_measure_profile(const FieldPath& path, const ClusterConfig& config);

}  // namespace hitspde
