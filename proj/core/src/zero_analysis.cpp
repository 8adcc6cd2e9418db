#include "hitspde/zero_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hitspde/field_io.hpp"

namespace hitspde {

ClusterConfig ClusterConfig::schedule(double dx, double kappa, double alpha, int min_separation,
                                      int boundary_exclusion) {
  if (!(dx > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("threshold schedule needs dx, kappa > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("threshold exponent alpha must lie in (0, 1)");
  ClusterConfig c;
  c.threshold = kappa * std::pow(dx, 0.5 * alpha);
  c.min_separation = min_separation;
  c.boundary_exclusion = boundary_exclusion;
  c.validate();
  return c;
}

void ClusterConfig::validate() const {
  if (!(threshold > 0.0)) throw std::invalid_argument("cluster threshold must be > 0");
  if (min_separation < 1) throw std::invalid_argument("min_separation must be >= 1");
  if (boundary_exclusion < 1) throw std::invalid_argument("boundary_exclusion must be >= 1");
}

int boundary_layer_nodes(const GridSpec& grid, double fraction) {
  if (!(fraction >= 0.0 && fraction < 0.5)) throw std::invalid_argument("boundary layer fraction must lie in [0, 0.5)");
  const auto n = static_cast<int>(std::lround(fraction * (grid.nx() + 1)));
  return std::max(1, n);
}

namespace {

template <class Value>
int count_runs(std::size_t n, const ClusterConfig& config, Value value) {
  const auto be = static_cast<std::size_t>(config.boundary_exclusion);
  if (n < 2 * be + 1) throw std::invalid_argument("slice too short for the boundary exclusion");
  int clusters = 0;
  bool open = false;
  long gap = 0;
  for (std::size_t i = be; i + be < n; ++i) {
    if (value(i) < config.threshold) {
      if (!open && (clusters == 0 || gap >= config.min_separation)) ++clusters;
      open = true;
      gap = 0;
    } else {
      open = false;
      ++gap;
    }
  }
  return clusters;
}

}  // namespace

int count_zero_clusters(std::span<const double> slice, const ClusterConfig& config) {
  return count_runs(slice.size(), config, [&](std::size_t i) { return slice[i]; });
}

int count_zero_clusters(std::span<const double> slice, int dim, const ClusterConfig& config) {
  if (dim == 1) return count_zero_clusters(slice, config);
  if (dim < 1 || slice.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("vector slice length is not a multiple of the dimension");
  }
  return count_runs(slice.size() / dim, config, [&](std::size_t i) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += slice[i * dim + c] * slice[i * dim + c];
    return std::sqrt(s);
  });
}

std::vector<int> near_zero_nodes(std::span<const double> slice, const ClusterConfig& config) {
  const auto be = static_cast<std::size_t>(config.boundary_exclusion);
  std::vector<int> out;
  for (std::size_t i = be; i + be < slice.size(); ++i) {
    if (slice[i] < config.threshold) out.push_back(static_cast<int>(i));
  }
  return out;
}

void ZeroTracker::observe(int k, std::span<const double> slice) {
  const int count = count_zero_clusters(slice, dim_, config_);
  if (static_cast<std::size_t>(k) >= counts_.size()) counts_.resize(k + 1, 0);
  counts_[k] = count;
  if (k >= 1) zeta_sup_ = std::max(zeta_sup_, count);
}

ZeroReport ZeroTracker::report(std::optional<GridSpec> grid, std::uint64_t seed) const {
  return ZeroReport{counts_, zeta_sup_, config_.threshold, grid, seed};
}

ZeroReport zeta_sup(const FieldPath& path, const ClusterConfig& config, std::uint64_t seed) {
  ZeroTracker tracker(config, path.dim);
  for (int k = 0; k <= path.grid.nt(); ++k) tracker.observe(k, path.row(k));
  return tracker.report(path.grid, seed);
}

int theoretical_bound(double delta) {
  if (!(delta >= 3.0)) throw std::invalid_argument("theoretical bound requires delta >= 3");
  if (delta > 6.0) return 0;
  if (delta > 4.0) return 1;
  if (3.0 * delta > 10.0) return 2;
  if (delta > 3.0) return 3;
  return 4;
}

std::optional<int> string_bound(int d) {
  if (d < 1) throw std::invalid_argument("string dimension must be >= 1");
  if (d >= 6) return 0;
  if (d >= 4) return 1;
  if (d == 3) return 3;
  return std::nullopt;
}

HolderReport holder_estimate(const FieldPath& path, double beta) {
  if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("Holder exponent must lie in (0, 1/2)");
  const GridSpec& g = path.grid;
  const int nodes = g.nodes();
  const int nt = g.nt();
  std::vector<double> u(static_cast<std::size_t>(nt + 1) * nodes);
  for (int k = 0; k <= nt; ++k) {
    for (int i = 0; i < nodes; ++i) {
      double s = 0.0;
      if (path.dim == 1) {
        s = path.at(k, i);
      } else {
        for (int c = 0; c < path.dim; ++c) s += path.at(k, i, c) * path.at(k, i, c);
        s = std::sqrt(s);
      }
      u[static_cast<std::size_t>(k) * nodes + i] = s;
    }
  }
  auto at = [&](int k, int i) { return u[static_cast<std::size_t>(k) * nodes + i]; };
  HolderReport rep;
  rep.beta = beta;
  for (int lag = 1; lag < nodes; lag *= 2) {
    const double scale = std::pow(lag * g.dx(), beta);
    for (int k = 0; k <= nt; ++k) {
      for (int i = 0; i + lag < nodes; ++i) {
        rep.gamma_space = std::max(rep.gamma_space, std::abs(at(k, i + lag) - at(k, i)) / scale);
      }
    }
  }
  for (int lag = 1; lag <= nt; lag *= 2) {
    const double scale = std::pow(lag * g.dt(), 0.5 * beta);
    for (int k = 0; k + lag <= nt; ++k) {
      for (int i = 0; i < nodes; ++i) {
        const double diff = at(k + lag, i) - at(k, i);
        rep.gamma_time_lower = std::max(rep.gamma_time_lower, std::max(0.0, -diff) / scale);
        rep.gamma_time_two_sided = std::max(rep.gamma_time_two_sided, std::abs(diff) / scale);
      }
    }
  }
  return rep;
}

HolderReport holder_refinement(const HolderReport& coarse, const HolderReport& fine) {
  HolderReport out = fine;
  out.refinement_ratio = coarse.gamma_space > 0.0 ? fine.gamma_space / coarse.gamma_space : 0.0;
  return out;
}

ReflectionProfile reflection_measure_profile(const FieldPath& path, const ClusterConfig& config) {
  if (!path.eta) throw std::invalid_argument("reflection profile requires a path with eta");
  if (path.dim != 1) throw std::invalid_argument("reflection profile requires a scalar path");
  config.validate();
  const GridSpec& g = path.grid;
  const int nx = g.nx();
  const double cell = g.dt() * g.dx();
  ReflectionProfile prof;
  prof.slice_mass.assign(g.nt(), 0.0);
  for (int k = 0; k < g.nt(); ++k) {
    const auto eta = path.eta_row(k);
    double m = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double mass = eta[i] * cell;
      m += mass;
      if (eta[i] > 0.0 && path.at(k + 1, i + 1) > config.threshold) prof.misplaced_mass += mass;
    }
    prof.slice_mass[k] = m;
    prof.total_mass += m;
  }
  if (!(prof.total_mass > 0.0)) return prof;
  std::vector<int> order(g.nt());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return prof.slice_mass[a] > prof.slice_mass[b]; });
  double acc = 0.0;
  for (int k : order) {
    if (acc >= 0.99 * prof.total_mass) break;
    acc += prof.slice_mass[k];
    prof.carrying_steps.push_back(k);
  }
  std::sort(prof.carrying_steps.begin(), prof.carrying_steps.end());
  for (int k : prof.carrying_steps) {
    if (count_zero_clusters(path.row(k + 1), config) == 1) ++prof.slices_with_one;
  }
  prof.fraction_one = static_cast<double>(prof.slices_with_one) / static_cast<double>(prof.carrying_steps.size());
  return prof;
}

std::string zero_report_csv(const ZeroReport& report) {
  std::ostringstream os;
  os << "t,count\n";
  for (std::size_t k = 0; k < report.counts.size(); ++k) {
    const int ki = static_cast<int>(k);
    os << (report.grid ? format_double(report.grid->t(ki)) : std::to_string(k)) << ',' << report.counts[k] << '\n';
  }
  return os.str();
}

std::string zero_report_json(const ZeroReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["zeta_sup"] = report.zeta_sup;
  j["threshold"] = report.threshold;
  if (report.grid) {
    const GridSpec& g = *report.grid;
    j["grid"] = {{"interval", {g.space().lo, g.space().hi}}, {"nx", g.nx()}, {"nt", g.nt()},
                 {"dx", g.dx()}, {"dt", g.dt()}, {"horizon", g.horizon()}};
  } else {
    j["grid"] = nullptr;
  }
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

}  // namespace hitspde
