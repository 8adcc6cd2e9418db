#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include <json.hpp>

#include "hitspde/bessel.hpp"
#include "hitspde/field_io.hpp"
#include "hitspde/parallel.hpp"
#include "hitspde/pinned_string.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/random.hpp"
#include "hitspde/spde_solver.hpp"
#include "hitspde/zero_analysis.hpp"

namespace hitspde {

namespace {

double resolved_threshold_of(const ExperimentConfig& c, const GridSpec& g) {
  return c.threshold ? *c.threshold : c.kappa * std::pow(g.dx(), 0.5 * c.alpha);
}

}  // namespace

GridSpec solver_grid(const ExperimentConfig& c, int nx) {
  return GridSpec::diffusive(c.interval, nx, c.horizon, c.dt_ratio);
}

ClusterConfig cluster_config(const ExperimentConfig& c, const GridSpec& g, int separation) {
  ClusterConfig cc;
  cc.threshold = resolved_threshold_of(c, g);
  cc.min_separation = separation;
  cc.boundary_exclusion = boundary_layer_nodes(g, c.boundary_layer);
  cc.validate();
  return cc;
}

SolverConfig member_config(const ExperimentConfig& c, double delta, const GridSpec& g) {
  SolverConfig m;
  if (delta == 3.0) {
    m = SolverConfig::reflected(c.boundary);
  } else if (c.family == FamilyMode::projected) {
    m = SolverConfig::projected(delta, c.lambda, c.boundary);
  } else {
    m = SolverConfig::penalized(delta, *c.epsilon, *c.lambda, c.boundary);
    m.drift = c.implicit_drift ? DriftTreatment::implicit_split : DriftTreatment::explicit_step;
  }
  m.validate(g);
  return m;
}

std::vector<double> initial_profile(const ExperimentConfig& c, const GridSpec& g, double delta, Rng& rng) {
  switch (c.initial) {
    case InitialProfile::constant: return constant_profile(g, c.boundary);
    case InitialProfile::bridge_draw: {
      std::vector<double> xs(g.nodes());
      for (int i = 0; i < g.nodes(); ++i) xs[i] = g.x(i);
      return sample_bessel_bridge(BesselParams(delta, c.boundary, c.interval), xs, rng).values;
    }
    case InitialProfile::mean_bridge: break;
  }
  auto row = mean_bridge_profile(g);
  for (auto& v : row) v += c.boundary;
  return row;
}

}  // namespace hitspde

namespace hitspde::detail {
namespace {

using json = nlohmann::ordered_json;
using Compare = TestResult::Compare;

// Acceptance levels of the kinds' tests.
constexpr double kKsAlpha = 1e-3;
constexpr std::size_t kKsMinAssert = 500;
constexpr double kHitFloor = 0.95;
constexpr double kHitCeiling = 0.05;
constexpr double kBoundQuantile = 0.99;
constexpr double kFractionOne = 0.9;
constexpr double kOrderTolerance = -1e-8;
constexpr double kMultiCeiling = 0.01;
constexpr double kZMax = 3.0;
constexpr double kLowerRatio = 0.1;
constexpr double kUpperFactor = 2.0;
constexpr double kHolderRatio = 2.0;
constexpr double kStringThreshold = 0.02;

std::string key(std::string base, const char* tag, double v) {
  return base + "_" + tag + "_" + format_double(v);
}

bool has_check(const ExperimentConfig& c, const std::string& name) {
  return std::find(c.checks.begin(), c.checks.end(), name) != c.checks.end();
}

template <class Fn>
std::vector<ReplicaMetrics> run_replicas(const ExperimentConfig& c, unsigned workers, Fn&& fn) {
  std::vector<ReplicaMetrics> out(c.replicas);
  parallel_for(
      c.replicas,
      [&](std::size_t i) {
        const std::uint64_t seed = split_seed(c.master_seed, i);
        try {
          out[i] = fn(seed);
        } catch (const std::exception& e) {
          throw std::runtime_error("replica " + std::to_string(i) + " (seed " + std::to_string(seed) +
                                   "): " + e.what());
        }
      },
      workers);
  return out;
}

std::vector<double> column(const std::vector<ReplicaMetrics>& reps, const std::string& name) {
  std::vector<double> v;
  v.reserve(reps.size());
  for (const auto& r : reps) v.push_back(r.at(name));
  return v;
}

double fraction(const std::vector<ReplicaMetrics>& reps, const std::string& name,
                const std::function<bool(double)>& pred) {
  if (reps.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& r : reps) n += pred(r.at(name)) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(reps.size());
}

// Largest step up along a sequence; 0 for fewer than two entries.
double max_increase(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] - v[i - 1]);
  return worst;
}

TestResult test(std::string name, double value, Compare cmp, double threshold, const ExperimentConfig& c) {
  TestResult t;
  t.name = std::move(name);
  t.value = value;
  t.threshold = threshold;
  t.compare = cmp;
  t.sample_size = c.replicas;
  t.seed = c.master_seed;
  return t;
}

json histogram_json(const std::vector<double>& values) {
  std::map<long, std::size_t> h;
  for (double v : values) ++h[std::lround(v)];
  json j = json::object();
  for (const auto& [k, n] : h) j[std::to_string(k)] = n;
  return j;
}

// ---------------------------------------------------------------------------
// solver kinds

json grid_json(const GridSpec& g, const ExperimentConfig& c) {
  return {{"interval", {g.space().lo, g.space().hi}}, {"nx", g.nx()},     {"nt", g.nt()},
          {"dx", g.dx()},                            {"dt", g.dt()},     {"horizon", g.horizon()},
          {"dt_ratio", c.dt_ratio},                  {"refinements", c.refinements}};
}

void common_sections(KindResult& out, const ExperimentConfig& c, const GridSpec& g) {
  out.sections["grid"] = grid_json(g, c).dump();
  out.sections["threshold"] = json(resolved_threshold_of(c, g)).dump();
}

KindResult invariant_test(const ExperimentConfig& c, unsigned workers) {
  const double delta = c.deltas.front();
  const GridSpec g = solver_grid(c, c.nx);
  const SolverConfig m = member_config(c, delta, g);
  const int node = std::clamp(static_cast<int>(std::lround((c.probe_x - g.space().lo) / g.dx())), 1, g.nx());
  const double x = g.x(node);

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    Rng init_rng(substream_seed(seed, 0));
    NoiseStream noise(substream_seed(seed, 1), g);
    auto state = initial_profile(c, g, delta, init_rng);
    validate_initial(state, g, c.boundary);
    const double u0 = state[node];
    SpdeStepper stepper(g, m);
    std::vector<double> row(g.nx());
    for (int k = 0; k < g.nt(); ++k) {
      noise.next(row);
      stepper.step(state, row);
    }
    return ReplicaMetrics{{"initial", u0}, {"final", state[node]}};
  });

  common_sections(out, c, g);
  out.observations["probe_node_x"] = x;
  const BesselParams params(delta, c.boundary, c.interval);
  out.observations["bridge_mean"] = integrate_to_infinity(
      [&](double y) { return y * bridge_marginal_density(params, x, y); }, 0.0, 1e-10);
  const auto finals = column(out.replicas, "final");
  const auto initials = column(out.replicas, "initial");
  out.observations["mean_final"] = mean_estimate(finals).mean;
  out.observations["mean_initial"] = mean_estimate(initials).mean;
  if (c.replicas < 20) return out;

  const TabulatedCdf cdf = bridge_marginal_cdf(params, x);
  auto cdf_fn = [&](double y) { return cdf(y); };
  const KsResult ks_final = ks_test(finals, cdf_fn);
  out.observations["ks_d_final"] = ks_final.statistic;
  out.observations["ks_p_final"] = ks_final.p_value;
  if (c.replicas >= kKsMinAssert) {
    out.tests.push_back(test("ks_p_final", ks_final.p_value, Compare::greater, kKsAlpha, c));
  }
  if (c.initial == InitialProfile::bridge_draw) {
    const KsResult ks_init = ks_test(initials, cdf_fn);
    out.observations["ks_d_initial"] = ks_init.statistic;
    out.observations["ks_p_initial"] = ks_init.p_value;
    if (c.replicas >= kKsMinAssert) {
      out.tests.push_back(test("ks_p_initial", ks_init.p_value, Compare::greater, kKsAlpha, c));
    }
  }
  return out;
}

KindResult hitting_sweep(const ExperimentConfig& c, unsigned workers) {
  const GridSpec g = solver_grid(c, c.nx);
  std::vector<SolverConfig> members;
  for (double d : c.deltas) members.push_back(member_config(c, d, g));
  const ClusterConfig cc = cluster_config(c, g, c.min_separation);
  const double top = c.deltas.back();

  struct Level {
    int nx;
    GridSpec grid;
    SolverConfig member;
    ClusterConfig clusters;
  };
  std::vector<Level> levels;
  for (int nx : c.refinements) {
    const GridSpec gr = solver_grid(c, nx);
    levels.push_back({nx, gr, member_config(c, top, gr), cluster_config(c, gr, c.min_separation)});
  }

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics r;
    Rng init_rng(substream_seed(seed, 0));
    const auto initial = initial_profile(c, g, c.deltas.front(), init_rng);
    NoiseStream noise(substream_seed(seed, 1), g);
    std::vector<ZeroTracker> trackers(members.size(), ZeroTracker(cc));
    run_coupled_family(members, initial, g, noise,
                       [&](int k, int m, std::span<const double> row, std::span<const double>) {
                         trackers[m].observe(k, row);
                       });
    for (std::size_t m = 0; m < members.size(); ++m) r[key("zeta_sup", "delta", c.deltas[m])] = trackers[m].zeta_sup();
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const Level& lv = levels[l];
      Rng lr(substream_seed(seed, 2 * l + 2));
      const auto init = initial_profile(c, lv.grid, top, lr);
      NoiseStream ln(substream_seed(seed, 2 * l + 3), lv.grid);
      ZeroTracker t(lv.clusters);
      run_coupled_family(std::span(&lv.member, 1), init, lv.grid, ln,
                         [&](int k, int, std::span<const double> row, std::span<const double>) { t.observe(k, row); });
      r[key(key("zeta_sup", "delta", top), "nx", lv.nx)] = t.zeta_sup();
    }
    return r;
  });

  common_sections(out, c, g);
  auto hit = [](double z) { return z >= 1.0; };
  std::vector<double> fractions;
  json hist = json::object();
  for (double d : c.deltas) {
    const auto name = key("zeta_sup", "delta", d);
    fractions.push_back(fraction(out.replicas, name, hit));
    out.observations[key("hit_fraction", "delta", d)] = fractions.back();
    hist[format_double(d)] = histogram_json(column(out.replicas, name));
  }
  out.sections["zeta_sup"] = hist.dump();
  if (fractions.size() > 1) {
    out.tests.push_back(test("hit_fraction_max_increase_in_delta", max_increase(fractions), Compare::less_equal, 0.0, c));
  }
  if (c.deltas.front() == 3.0) {
    out.tests.push_back(test("hit_fraction_delta_3", fractions.front(), Compare::greater_equal, kHitFloor, c));
  }
  if (top > 6.0) {
    out.tests.push_back(test(key("hit_fraction", "delta", top), fractions.back(), Compare::less_equal, kHitCeiling, c));
  }
  if (!levels.empty()) {
    std::vector<std::pair<int, double>> trend;
    for (const auto& lv : levels) {
      const double f = fraction(out.replicas, key(key("zeta_sup", "delta", top), "nx", lv.nx), hit);
      trend.emplace_back(lv.nx, f);
      out.observations[key(key("hit_fraction", "delta", top), "nx", lv.nx)] = f;
    }
    std::stable_sort(trend.begin(), trend.end());
    std::vector<double> f;
    for (const auto& [_, v] : trend) f.push_back(v);
    out.tests.push_back(test(key("hit_fraction_max_increase_under_refinement", "delta", top), max_increase(f),
                             Compare::less_equal, 0.0, c));
    if (top > 6.0) {
      out.tests.push_back(test(key("hit_fraction_max_under_refinement", "delta", top),
                               *std::max_element(f.begin(), f.end()), Compare::less_equal, kHitCeiling, c));
    }
  }
  return out;
}

KindResult zeta_histogram(const ExperimentConfig& c, unsigned workers) {
  const double delta = c.deltas.front();
  const GridSpec g = solver_grid(c, c.nx);
  const SolverConfig m = member_config(c, delta, g);
  const ClusterConfig cc = cluster_config(c, g, c.min_separation);
  std::vector<ClusterConfig> extra;
  for (int s : c.separations) extra.push_back(cluster_config(c, g, s));
  const bool profile = has_check(c, "reflection-profile");
  if (profile && !m.projects()) throw ConfigError("reflection-profile needs a projected member");

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics r;
    Rng init_rng(substream_seed(seed, 0));
    const auto initial = initial_profile(c, g, delta, init_rng);
    std::vector<ZeroTracker> trackers;
    trackers.emplace_back(cc);
    for (const auto& e : extra) trackers.emplace_back(e);
    if (profile) {
      const auto noise = NoiseRealization::generate(substream_seed(seed, 1), g);
      const FieldPath path = solve(initial, m, g, noise);
      for (int k = 0; k <= g.nt(); ++k) {
        for (auto& t : trackers) t.observe(k, path.row(k));
      }
      const ReflectionProfile p = reflection_measure_profile(path, cc);
      double layer = 0.0;
      for (int k = 0; k < g.nt(); ++k) {
        const auto eta = path.eta_row(k);
        for (int i = 0; i < g.nx(); ++i) {
          const int node = i + 1;
          if (node <= cc.boundary_exclusion || node > g.nx() - cc.boundary_exclusion) {
            layer += eta[i] * g.dt() * g.dx();
          }
        }
      }
      r["eta_mass"] = p.total_mass;
      r["eta_layer_mass"] = layer;
      r["carrying_slices"] = static_cast<double>(p.carrying_steps.size());
      r["slices_with_one"] = p.slices_with_one;
      r["misplaced_mass"] = p.misplaced_mass;
    } else {
      NoiseStream noise(substream_seed(seed, 1), g);
      run_coupled_family(std::span(&m, 1), initial, g, noise,
                         [&](int k, int, std::span<const double> row, std::span<const double>) {
                           for (auto& t : trackers) t.observe(k, row);
                         });
    }
    r["zeta_sup"] = trackers[0].zeta_sup();
    for (std::size_t i = 0; i < extra.size(); ++i) r[key("zeta_sup", "sep", c.separations[i])] = trackers[i + 1].zeta_sup();
    return r;
  });

  common_sections(out, c, g);
  const int bound = theoretical_bound(delta);
  auto within = [bound](double z) { return z <= bound; };
  const auto z = column(out.replicas, "zeta_sup");
  out.sections["zeta_sup"] = histogram_json(z).dump();
  json flagged = json::array();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] > bound) flagged.push_back({{"replica", i}, {"seed", split_seed(c.master_seed, i)}, {"zeta_sup", z[i]}});
  }
  out.sections["flagged"] = flagged.dump();
  out.observations["bound"] = bound;
  out.observations["zeta_sup_max"] = z.empty() ? 0.0 : *std::max_element(z.begin(), z.end());
  json sens = json::object();
  for (int s : c.separations) {
    const auto name = key("zeta_sup", "sep", s);
    out.observations[key("fraction_within_bound", "sep", s)] = fraction(out.replicas, name, within);
    sens[std::to_string(s)] = histogram_json(column(out.replicas, name));
  }
  out.sections["separation_sensitivity"] = sens.dump();
  out.tests.push_back(test("fraction_within_bound", fraction(out.replicas, "zeta_sup", within),
                           Compare::greater_equal, kBoundQuantile, c));
  if (profile) {
    double one = 0.0, carrying = 0.0, mass = 0.0, layer = 0.0, misplaced = 0.0;
    for (const auto& r : out.replicas) {
      one += r.at("slices_with_one");
      carrying += r.at("carrying_slices");
      mass += r.at("eta_mass");
      layer += r.at("eta_layer_mass");
      misplaced += r.at("misplaced_mass");
    }
    out.observations["eta_layer_mass_fraction"] = mass > 0.0 ? layer / mass : 0.0;
    out.observations["misplaced_mass_fraction"] = mass > 0.0 ? misplaced / mass : 0.0;
    out.tests.push_back(test("reflection_fraction_one", carrying > 0.0 ? one / carrying : 0.0,
                             Compare::greater_equal, kFractionOne, c));
  }
  return out;
}

KindResult coupling_check(const ExperimentConfig& c, unsigned workers) {
  std::vector<int> levels{c.nx};
  for (int n : c.refinements) {
    if (std::find(levels.begin(), levels.end(), n) == levels.end()) levels.push_back(n);
  }
  struct Level {
    GridSpec grid;
    std::vector<SolverConfig> members;
  };
  std::vector<Level> lv;
  for (int nx : levels) {
    const GridSpec g = solver_grid(c, nx);
    Level l{g, {}};
    for (double d : c.deltas) l.members.push_back(member_config(c, d, g));
    lv.push_back(std::move(l));
  }
  const bool pairs = c.deltas.size() > 1;
  const bool projecting = std::any_of(lv[0].members.begin(), lv[0].members.end(),
                                      [](const SolverConfig& m) { return m.projects(); });

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics r;
    for (std::size_t l = 0; l < lv.size(); ++l) {
      const Level& L = lv[l];
      const GridSpec& g = L.grid;
      Rng init_rng(substream_seed(seed, 2 * l));
      const auto initial = initial_profile(c, g, c.deltas.front(), init_rng);
      NoiseStream noise(substream_seed(seed, 2 * l + 1), g);
      const std::size_t nm = L.members.size();
      std::vector<std::vector<double>> rows(nm);
      double min_diff = std::numeric_limits<double>::infinity();
      double violations = 0.0;
      double eta_mass = 0.0;
      run_coupled_family(L.members, initial, g, noise,
                         [&](int k, int m, std::span<const double> row, std::span<const double> eta) {
                           rows[m].assign(row.begin(), row.end());
                           if (!eta.empty()) {
                             for (int i = 0; i < g.nx(); ++i) {
                               const double u = row[i + 1];
                               if (!(u >= 0.0) || !(eta[i] >= 0.0) || u * eta[i] != 0.0) violations += 1.0;
                               eta_mass += eta[i] * g.dt() * g.dx();
                             }
                           } else if (k > 0 && L.members[m].projects()) {
                             violations += 1.0;
                           }
                           if (static_cast<std::size_t>(m) + 1 == nm) {
                             for (std::size_t j = 1; j < nm; ++j) {
                               for (std::size_t i = 0; i < rows[j].size(); ++i) {
                                 min_diff = std::min(min_diff, rows[j][i] - rows[j - 1][i]);
                               }
                             }
                           }
                         });
      const int nx = g.nx();
      if (pairs) r[key("min_difference", "nx", nx)] = min_diff;
      if (projecting) {
        r[key("complementarity_violations", "nx", nx)] = violations;
        r[key("eta_mass", "nx", nx)] = eta_mass;
      }
    }
    return r;
  });

  common_sections(out, c, lv[0].grid);
  if (pairs) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& L : lv) {
      const auto v = column(out.replicas, key("min_difference", "nx", L.grid.nx()));
      const double m = v.empty() ? worst : *std::min_element(v.begin(), v.end());
      out.observations[key("min_difference", "nx", L.grid.nx())] = m;
      worst = std::min(worst, m);
    }
    out.tests.push_back(test("min_ordered_difference", worst, Compare::greater_equal, kOrderTolerance, c));
  }
  if (projecting) {
    double total = 0.0;
    double min_mass = std::numeric_limits<double>::infinity();
    for (const auto& L : lv) {
      for (double v : column(out.replicas, key("complementarity_violations", "nx", L.grid.nx()))) total += v;
      for (double v : column(out.replicas, key("eta_mass", "nx", L.grid.nx()))) min_mass = std::min(min_mass, v);
    }
    out.tests.push_back(test("complementarity_violations", total, Compare::less_equal, 0.0, c));
    out.observations["eta_mass_min"] = min_mass;
  }
  return out;
}

KindResult holder_check(const ExperimentConfig& c, unsigned workers) {
  std::vector<int> levels{c.nx};
  for (int n : c.refinements) {
    if (std::find(levels.begin(), levels.end(), n) == levels.end()) levels.push_back(n);
  }
  std::sort(levels.begin(), levels.end());
  const double delta = c.deltas.front();
  std::vector<GridSpec> grids;
  std::vector<SolverConfig> members;
  for (int nx : levels) {
    grids.push_back(solver_grid(c, nx));
    members.push_back(member_config(c, delta, grids.back()));
  }

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics r;
    for (std::size_t l = 0; l < grids.size(); ++l) {
      Rng init_rng(substream_seed(seed, 2 * l));
      const auto initial = initial_profile(c, grids[l], delta, init_rng);
      const auto noise = NoiseRealization::generate(substream_seed(seed, 2 * l + 1), grids[l]);
      const HolderReport h = holder_estimate(solve(initial, members[l], grids[l], noise), c.beta);
      r[key("gamma_space", "nx", levels[l])] = h.gamma_space;
      r[key("gamma_time_lower", "nx", levels[l])] = h.gamma_time_lower;
      r[key("gamma_time_two_sided", "nx", levels[l])] = h.gamma_time_two_sided;
    }
    return r;
  });

  common_sections(out, c, grids.front());
  std::vector<double> means;
  for (int nx : levels) means.push_back(mean_estimate(column(out.replicas, key("gamma_space", "nx", nx))).mean);
  double worst = 0.0;
  for (std::size_t i = 1; i < means.size(); ++i) {
    const double ratio = means[i - 1] > 0.0 ? means[i] / means[i - 1] : std::numeric_limits<double>::infinity();
    out.observations[key("gamma_space_ratio", "nx", levels[i])] = ratio;
    worst = std::max(worst, ratio);
  }
  if (means.size() > 1) out.tests.push_back(test("gamma_space_refinement_ratio_max", worst, Compare::less_equal, kHolderRatio, c));
  return out;
}

// ---------------------------------------------------------------------------
// string kinds

json string_grid_json(const ExperimentConfig& c, const StringSpec& s) {
  return {{"half_width", s.half_width}, {"margin", s.margin},     {"dx", s.dx},
          {"dt", s.dt},                 {"nt", s.nt},             {"horizon", s.horizon()},
          {"dims", c.dims},             {"refinements", c.string_refinements}};
}

KindResult string_zeros(const ExperimentConfig& c, unsigned workers) {
  ClusterConfig cc;
  cc.threshold = c.threshold.value_or(kStringThreshold);
  cc.min_separation = c.min_separation;
  cc.boundary_exclusion = 1;
  cc.validate();

  struct Run {
    int d;
    std::optional<double> dx;  // refinement level, if any
    StringSimulator sim;
  };
  std::vector<Run> runs;
  for (int d : c.dims) runs.push_back({d, std::nullopt, StringSimulator(StringSpec::unit(d, c.string_half_width, c.string_horizon, c.string_dx))});
  const int top = c.dims.back();
  for (double dx : c.string_refinements) {
    if (dx == c.string_dx) continue;  // the base run of the largest d serves this level
    runs.push_back({top, dx, StringSimulator(StringSpec::unit(top, c.string_half_width, c.string_horizon, dx))});
  }
  auto base = [](const Run& r) {
    std::string s = "d_" + std::to_string(r.d);
    if (r.dx) s += "_dx_" + format_double(*r.dx);
    return s;
  };

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics m;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const Run& run = runs[i];
      ZeroTracker t(cc, run.d);
      run.sim.run(substream_seed(seed, i), [&](int k, std::span<const double> row) { t.observe(k, row); });
      int multi = 0, triple = 0;
      for (std::size_t k = 1; k < t.counts().size(); ++k) {
        multi += t.counts()[k] >= 2 ? 1 : 0;
        triple += t.counts()[k] >= 3 ? 1 : 0;
      }
      m["zeta_sup_" + base(run)] = t.zeta_sup();
      m["multi_slices_" + base(run)] = multi;
      m["triple_slices_" + base(run)] = triple;
    }
    return m;
  });

  out.sections["grid"] = string_grid_json(c, runs.front().sim.spec()).dump();
  out.sections["threshold"] = json(cc.threshold).dump();
  json hist = json::object();
  for (const auto& run : runs) hist[base(run)] = histogram_json(column(out.replicas, "zeta_sup_" + base(run)));
  out.sections["zeta_sup"] = hist.dump();

  auto at_least = [](double k) { return [k](double z) { return z >= k; }; };
  for (const auto& run : runs) {
    const std::string b = base(run);
    out.observations["hit_fraction_" + b] = fraction(out.replicas, "zeta_sup_" + b, at_least(1));
    out.observations["multi_fraction_" + b] = fraction(out.replicas, "multi_slices_" + b, at_least(1));
    out.observations["triple_fraction_" + b] = fraction(out.replicas, "triple_slices_" + b, at_least(1));
  }
  for (const auto& run : runs) {
    if (run.dx) continue;
    const std::string b = base(run);
    const double hit = out.observations["hit_fraction_" + b];
    if (run.d == 1) out.tests.push_back(test("hit_fraction_" + b, hit, Compare::greater_equal, kHitFloor, c));
    if (run.d == 2) {
      out.tests.push_back(test("hit_fraction_" + b, hit, Compare::greater, 0.0, c));
      out.tests.push_back(test("triple_fraction_" + b, out.observations["triple_fraction_" + b], Compare::greater, 0.0, c));
    }
    if (run.d == 4 || run.d == 5) {
      out.tests.push_back(test("multi_fraction_" + b, out.observations["multi_fraction_" + b], Compare::less_equal, kMultiCeiling, c));
    }
    if (run.d >= 6) out.tests.push_back(test("hit_fraction_" + b, hit, Compare::less_equal, kHitCeiling, c));
  }
  if (!c.string_refinements.empty()) {
    // coarse to fine
    std::vector<std::pair<double, double>> trend;
    for (const auto& run : runs) {
      if (run.dx) {
        trend.emplace_back(-*run.dx, out.observations["hit_fraction_" + base(run)]);
      } else if (run.d == top && std::count(c.string_refinements.begin(), c.string_refinements.end(), c.string_dx)) {
        trend.emplace_back(-c.string_dx, out.observations["hit_fraction_" + base(run)]);
      }
    }
    std::stable_sort(trend.begin(), trend.end());
    std::vector<double> f;
    for (const auto& [_, v] : trend) f.push_back(v);
    out.tests.push_back(test("hit_fraction_max_increase_under_refinement_d_" + std::to_string(top), max_increase(f),
                             Compare::less_equal, 0.0, c));
  }
  return out;
}

struct Point {
  int k;
  int j;  // lattice offset from x = 0
};

struct Pair {
  Point a;
  Point b;
};

double value_at(const StringField& f, double t, double x) {
  const int k = static_cast<int>(std::lround(t / f.spec.dt));
  const int j = static_cast<int>(std::lround(x / f.spec.dx));
  const int jw = f.spec.window_index();
  if (k < 0 || k > f.spec.nt || std::abs(j) > jw || std::abs(k * f.spec.dt - t) > 1e-9 ||
      std::abs(j * f.spec.dx - x) > 1e-9) {
    throw std::domain_error("probe point is not a lattice point of the field");
  }
  return f.path.at(k, jw + j);
}

// Pairs of distinct lattice points of a window field; the pinned point
// (t, x) = (0, 0) is never used.
std::vector<Pair> draw_pairs(std::uint64_t seed, int count, int k_lo, int k_hi, int half) {
  Rng rng(seed);
  std::uniform_int_distribution<int> kd(k_lo, k_hi);
  std::uniform_int_distribution<int> jd(-half, half);
  std::vector<Pair> out;
  while (static_cast<int>(out.size()) < count) {
    Pair p{{kd(rng), jd(rng)}, {kd(rng), jd(rng)}};
    if (p.a.k == p.b.k && p.a.j == p.b.j) continue;
    if ((p.a.k == 0 && p.a.j == 0) || (p.b.k == 0 && p.b.j == 0)) continue;
    out.push_back(p);
  }
  return out;
}

KindResult scaling_check(const ExperimentConfig& c, unsigned workers) {
  const StringSpec spec = StringSpec::unit(1, c.string_half_width, c.string_horizon, c.string_dx);
  const StringSimulator sim(spec);
  const double dt = spec.dt;
  const double dx = spec.dx;
  const int jw = spec.window_index();

  const bool bounds = has_check(c, "covariance-bounds");
  std::vector<Pair> bound_pairs;
  if (bounds) bound_pairs = draw_pairs(substream_seed(c.master_seed, 7), c.probe_pairs, spec.nt / 2, spec.nt, jw);

  // Law checks: transform of field A against an independent field B.
  struct Law {
    std::string name;
    std::function<StringField(const StringField&)> apply;
    std::vector<Pair> pairs;
    StringSpec out;  // grid of the transformed field
  };
  std::vector<Law> laws;
  auto add_law = [&](const std::string& name, std::function<StringField(const StringField&)> fn) {
    if (!has_check(c, name)) return;
    // Transform a zero field once to learn the output grid.
    StringField probe{spec, FieldPath(spec.window_grid(), 1), 0};
    const StringField shape = fn(probe);
    Law law{name, std::move(fn), {}, shape.spec};
    const int half = shape.spec.window_index();
    law.pairs = draw_pairs(substream_seed(c.master_seed, 11 + laws.size()), c.probe_pairs, 0, shape.spec.nt, half);
    laws.push_back(std::move(law));
  };
  add_law("scaling", [L = c.scale](const StringField& f) { return scaling_transform(f, L); });
  add_law("translate", [&](const StringField& f) {
    return translate_and_reverse(f, std::round(spec.horizon() / 2 / dt) * dt, std::round(jw / 2.0) * dx,
                                 StringTransform::translate);
  });
  add_law("reverse", [](const StringField& f) { return translate_and_reverse(f, 0.0, 0.0, StringTransform::reverse); });

  auto pkey = [](const std::string& base, std::size_t i) { return base + "_" + std::to_string(i); };

  KindResult out;
  out.replicas = run_replicas(c, workers, [&](std::uint64_t seed) {
    ReplicaMetrics r;
    const StringField a = sim.simulate(substream_seed(seed, 0));
    if (bounds) {
      for (std::size_t i = 0; i < bound_pairs.size(); ++i) {
        const auto& p = bound_pairs[i];
        const double d = a.path.at(p.a.k, jw + p.a.j) - a.path.at(p.b.k, jw + p.b.j);
        r[pkey("sqinc", i)] = d * d;
      }
    }
    if (!laws.empty()) {
      const StringField b = sim.simulate(substream_seed(seed, 1));
      for (const auto& law : laws) {
        const StringField v = law.apply(a);
        for (std::size_t i = 0; i < law.pairs.size(); ++i) {
          const auto& p = law.pairs[i];
          const double ta = p.a.k * law.out.dt, xa = p.a.j * law.out.dx;
          const double tb = p.b.k * law.out.dt, xb = p.b.j * law.out.dx;
          r[pkey(law.name, i)] = value_at(v, ta, xa) * value_at(v, tb, xb);
          r[pkey("fresh_" + law.name, i)] = value_at(b, ta, xa) * value_at(b, tb, xb);
        }
      }
    }
    return r;
  });

  out.sections["grid"] = string_grid_json(c, spec).dump();
  if (bounds) {
    double worst_z = -std::numeric_limits<double>::infinity();
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    double worst_exact = 0.0;
    json rows = json::array();
    for (std::size_t i = 0; i < bound_pairs.size(); ++i) {
      const auto& p = bound_pairs[i];
      const double tau = std::abs(p.a.k - p.b.k) * dt;
      const double h = std::abs(p.a.j - p.b.j) * dx;
      const double scale = h + std::sqrt(tau);
      const MeanEstimate e = mean_estimate(column(out.replicas, pkey("sqinc", i)));
      const double z = e.stderr_ > 0.0 ? (e.mean - kUpperFactor * scale) / e.stderr_ : 0.0;
      const double exact = string_variogram(tau, h);
      const double ze = e.stderr_ > 0.0 ? (e.mean - exact) / e.stderr_ : 0.0;
      worst_z = std::max(worst_z, z);
      min_ratio = std::min(min_ratio, e.mean / scale);
      max_ratio = std::max(max_ratio, e.mean / scale);
      worst_exact = std::max(worst_exact, std::abs(ze));
      rows.push_back({{"t", p.a.k * dt}, {"x", p.a.j * dx}, {"s", p.b.k * dt}, {"y", p.b.j * dx},
                      {"mean", e.mean}, {"stderr", e.stderr_}, {"exact", exact}});
    }
    out.sections["covariance_pairs"] = rows.dump();
    out.observations["upper_ratio_max"] = max_ratio;
    out.observations["exact_abs_z_max"] = worst_exact;
    out.tests.push_back(test("upper_bound_excess_z_max", worst_z, Compare::less_equal, kZMax, c));
    out.tests.push_back(test("lower_bound_ratio_min", min_ratio, Compare::greater_equal, kLowerRatio, c));
  }
  for (const auto& law : laws) {
    double worst = 0.0;
    double worst_exact = 0.0;
    json rows = json::array();
    for (std::size_t i = 0; i < law.pairs.size(); ++i) {
      const auto& p = law.pairs[i];
      const MeanEstimate ea = mean_estimate(column(out.replicas, pkey(law.name, i)));
      const MeanEstimate eb = mean_estimate(column(out.replicas, pkey("fresh_" + law.name, i)));
      const double se = std::hypot(ea.stderr_, eb.stderr_);
      const double z = se > 0.0 ? std::abs(ea.mean - eb.mean) / se : 0.0;
      const double ta = p.a.k * law.out.dt, xa = p.a.j * law.out.dx;
      const double tb = p.b.k * law.out.dt, xb = p.b.j * law.out.dx;
      const double exact = string_covariance(ta, xa, tb, xb);
      worst = std::max(worst, z);
      worst_exact = std::max(worst_exact, ea.stderr_ > 0.0 ? std::abs(ea.mean - exact) / ea.stderr_ : 0.0);
      rows.push_back({{"t", ta}, {"x", xa}, {"s", tb}, {"y", xb}, {"transformed", ea.mean},
                      {"transformed_stderr", ea.stderr_}, {"fresh", eb.mean}, {"fresh_stderr", eb.stderr_},
                      {"exact", exact}});
    }
    out.sections[law.name + "_pairs"] = rows.dump();
    out.observations[law.name + "_exact_abs_z_max"] = worst_exact;
    out.tests.push_back(test(law.name + "_covariance_z_max", worst, Compare::less_equal, kZMax, c));
  }
  return out;
}

}  // namespace

KindResult run_kind(const ExperimentConfig& config, unsigned workers) {
  switch (config.kind) {
    case ExperimentKind::invariant_test: return invariant_test(config, workers);
    case ExperimentKind::hitting_sweep: return hitting_sweep(config, workers);
    case ExperimentKind::zeta_histogram: return zeta_histogram(config, workers);
    case ExperimentKind::coupling_check: return coupling_check(config, workers);
    case ExperimentKind::holder_check: return holder_check(config, workers);
    case ExperimentKind::string_zeros: return string_zeros(config, workers);
    case ExperimentKind::scaling_check: return scaling_check(config, workers);
  }
  throw ConfigError("unhandled experiment kind");
}

}  // namespace hitspde::detail
