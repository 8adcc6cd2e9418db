#include "hitspde/check_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hitspde/bessel.hpp"
#include "hitspde/field_io.hpp"
#include "hitspde/parallel.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/random.hpp"

namespace hitspde {

using json = nlohmann::ordered_json;
using Compare = TestResult::Compare;

bool CriterionResult::tests_pass() const {
  return !tests.empty() && std::all_of(tests.begin(), tests.end(), [](const TestResult& t) { return t.pass(); });
}

namespace {

std::string_view symbol(Compare c) {
  switch (c) {
    case Compare::less: return "<";
    case Compare::less_equal: return "<=";
    case Compare::greater: return ">";
    case Compare::greater_equal: return ">=";
  }
  return "?";
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

TestResult make_test(std::string name, double value, Compare cmp, double threshold, std::size_t n,
                     std::uint64_t seed) {
  TestResult t;
  t.name = std::move(name);
  t.value = value;
  t.compare = cmp;
  t.threshold = threshold;
  t.sample_size = n;
  t.seed = seed;
  return t;
}

json tests_json(const std::vector<TestResult>& tests) {
  json a = json::array();
  for (const auto& t : tests) {
    a.push_back({{"name", t.name},
                 {"value", std::isfinite(t.value) ? json(t.value) : json(nullptr)},
                 {"compare", std::string(symbol(t.compare))},
                 {"threshold", t.threshold},
                 {"pass", t.pass()},
                 {"sample_size", t.sample_size},
                 {"seed", t.seed}});
  }
  return a;
}

void write_criterion_file(CriterionResult& r, const std::filesystem::path& file) {
  json j;
  j["schema_version"] = ExperimentConfig::kSchemaVersion;
  j["criterion"] = r.id;
  j["title"] = r.title;
  j["pass"] = r.tests_pass();
  j["tests"] = tests_json(r.tests);
  json obs = json::object();
  for (const auto& [k, v] : r.observations) obs[k] = std::isfinite(v) ? json(v) : json(nullptr);
  j["observations"] = obs;
  write_text_file(file, j.dump(2) + "\n");
  r.files.push_back(file);
}

std::string tag(double v) { return format_double(v); }

ExperimentConfig base(ExperimentKind kind, std::string name, std::size_t replicas, std::uint64_t seed,
                      const std::filesystem::path& dir) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = std::move(name);
  c.replicas = replicas;
  c.master_seed = seed;
  c.output_dir = dir;
  return c;
}

struct Meta {
  int id;
  const char* title;
  double budget;
};

constexpr Meta kCriteria[] = {
    {1, "density suite", 10},
    {2, "sampler fidelity", 60},
    {3, "discrete complementarity", 60},
    {4, "coupled monotonicity", 300},
    {5, "stationarity", 900},
    {6, "hitting trend", 1800},
    {7, "zeta histogram", 1800},
    {8, "reflection-measure profile", 300},
    {9, "string covariance bounds", 900},
    {10, "string scaling law", 600},
    {11, "string zero trends", 1800},
    {12, "harness determinism", 0},
};

const Meta& meta(int id) {
  for (const auto& m : kCriteria) {
    if (m.id == id) return m;
  }
  throw std::invalid_argument("unknown criterion " + std::to_string(id));
}

}  // namespace

std::string CriterionResult::status_line() const {
  std::ostringstream os;
  os << "criterion " << id << " " << title << ": " << (pass() ? "PASS" : "FAIL");
  std::vector<std::string> failing;
  for (const auto& t : tests) {
    if (!t.pass()) failing.push_back(t.name + "=" + format_double(t.value) + " (need " + std::string(symbol(t.compare)) +
                                     " " + format_double(t.threshold) + ")");
  }
  if (tests.empty()) failing.emplace_back("no tests ran");
  if (!failing.empty()) {
    os << " [";
    for (std::size_t i = 0; i < failing.size(); ++i) os << (i ? "; " : "") << failing[i];
    os << "]";
  }
  os << " (" << tests.size() << " tests, " << fixed(seconds, 1) << " s";
  if (std::isfinite(budget_seconds)) os << " of " << fixed(budget_seconds, 0) << " s budget";
  if (!within_budget()) os << ", over budget";
  os << ")";
  return os.str();
}

std::vector<SuiteEntry> suite_configs(const std::filesystem::path& dir) {
  std::vector<SuiteEntry> out;

  {
    auto c = base(ExperimentKind::coupling_check, "c03_complementarity", 20, 3003, dir);
    c.nx = 32;
    c.refinements = {64};
    c.deltas = {3.0};
    out.push_back({3, c});
  }
  {
    auto c = base(ExperimentKind::coupling_check, "c04_monotonicity", 10, 4004, dir);
    c.nx = 64;
    c.deltas = {3.0, 5.0, 8.0};
    c.family = FamilyMode::penalized;
    c.epsilon = 1e-3;
    c.lambda = 1e-3;
    c.implicit_drift = true;
    out.push_back({4, c});
  }
  {
    auto c = base(ExperimentKind::invariant_test, "c05_stationarity", 2000, 5005, dir);
    c.nx = 64;
    c.horizon = 0.5;
    c.deltas = {3.0};
    c.initial = InitialProfile::bridge_draw;
    c.probe_x = 0.5;
    out.push_back({5, c});
  }
  {
    auto c = base(ExperimentKind::hitting_sweep, "c06_hitting", 200, 6006, dir);
    c.nx = 64;
    c.horizon = 1.0;
    c.deltas = {3.0, 3.5, 4.0, 5.0, 7.0};
    c.refinements = {32, 64, 128};
    out.push_back({6, c});
  }
  {
    auto c = base(ExperimentKind::zeta_histogram, "c07_zeta_delta_3", 200, 7007, dir);
    c.deltas = {3.0};
    c.separations = {2, 4, 8, 16};
    out.push_back({7, c});
    auto d = base(ExperimentKind::zeta_histogram, "c07_zeta_delta_5", 200, 7008, dir);
    d.deltas = {5.0};
    d.separations = {2, 4, 8, 16};
    out.push_back({7, d});
  }
  {
    auto c = base(ExperimentKind::zeta_histogram, "c08_reflection", 20, 8008, dir);
    c.deltas = {3.0};
    c.checks = {"reflection-profile"};
    out.push_back({8, c});
  }
  {
    auto c = base(ExperimentKind::scaling_check, "c09_covariance", 5000, 9009, dir);
    c.dims = {1};
    c.string_horizon = 2.0;
    c.string_half_width = 1.0;
    c.string_dx = 1.0 / 16.0;
    c.probe_pairs = 200;
    c.checks = {"covariance-bounds"};
    out.push_back({9, c});
  }
  {
    auto c = base(ExperimentKind::scaling_check, "c10_scaling", 2000, 10010, dir);
    c.dims = {1};
    c.string_horizon = 1.0;
    c.string_half_width = 0.5;
    c.string_dx = 1.0 / 32.0;
    c.probe_pairs = 10;
    c.scale = std::sqrt(2.0);
    c.checks = {"scaling", "translate", "reverse"};
    out.push_back({10, c});
  }
  {
    auto c = base(ExperimentKind::string_zeros, "c11_string_zeros", 200, 11011, dir);
    c.dims = {1, 2, 4, 6};
    c.threshold = 0.02;
    c.string_half_width = 0.5;
    c.string_horizon = 1.0;
    c.string_dx = 1.0 / 32.0;
    c.string_refinements = {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0};
    out.push_back({11, c});
  }
  return out;
}

CriterionResult density_suite(const std::filesystem::path& dir) {
  CriterionResult r;
  r.id = 1;
  r.title = meta(1).title;
  double worst_norm = 0.0;
  double worst_ck = 0.0;
  for (double delta : {3.0, 4.0, 5.0, 7.0}) {
    const BesselParams p(delta);
    for (double t : {0.25, 1.0}) {
      for (double x : {0.0, 0.5, 1.0}) {
        const double mass = integrate_to_infinity([&](double y) { return bessel_transition_density(p, t, x, y); }, 0.0);
        const double norm = std::abs(mass - 1.0);
        const std::string at = "delta_" + tag(delta) + "_t_" + tag(t) + "_x_" + tag(x);
        r.observations["normalization_" + at] = norm;
        worst_norm = std::max(worst_norm, norm);
        // uneven split s + (t - s)
        const double s = 0.25 * t;
        for (double z : {0.5, 1.0, 2.0}) {
          const double direct = bessel_transition_density(p, t, x, z);
          const double composed = integrate_to_infinity(
              [&](double y) { return bessel_transition_density(p, s, x, y) * bessel_transition_density(p, t - s, y, z); },
              0.0);
          const double res = std::abs(direct - composed);
          r.observations["chapman_kolmogorov_" + at + "_z_" + tag(z)] = res;
          worst_ck = std::max(worst_ck, res);
        }
      }
    }
  }
  r.tests.push_back(make_test("normalization_error_max", worst_norm, Compare::less, 1e-6, 24, 0));
  r.tests.push_back(make_test("chapman_kolmogorov_residual_max", worst_ck, Compare::less, 1e-5, 72, 0));
  write_criterion_file(r, dir / "c01_density.json");
  return r;
}

CriterionResult sampler_suite(const std::filesystem::path& dir) {
  constexpr std::size_t n = 10000;
  constexpr double alpha = 0.01;
  CriterionResult r;
  r.id = 2;
  r.title = meta(2).title;
  std::uint64_t seed = 2002;
  auto ks = [&](const std::string& name, const KsResult& k, std::uint64_t s) {
    r.observations[name + "_d"] = k.statistic;
    r.tests.push_back(make_test(name + "_p", k.p_value, Compare::greater, alpha, n, s));
  };

  // process at t = 1 from x0 = 0.5
  const double x0 = 0.5;
  const std::vector<double> times{0.0, 1.0};
  for (double delta : {3.0, 3.5, 4.0, 7.0}) {
    const BesselParams p(delta);
    const std::uint64_t s = seed++;
    Rng rng(s);
    std::vector<double> v(n);
    for (auto& y : v) y = sample_bessel_process(p, x0, times, rng).values.back();
    const TabulatedCdf cdf = transition_cdf(p, 1.0, x0);
    ks("process_delta_" + tag(delta) + "_vs_quadrature", ks_test(v, [&](double y) { return cdf(y); }), s);
    const double rd = std::round(delta);
    if (rd == delta) {
      const std::uint64_t s2 = seed++;
      Rng orng(s2);
      std::vector<double> w(n);
      for (auto& y : w) y = sample_brownian_modulus(static_cast<int>(rd), x0, times, orng).values.back();
      ks("process_delta_" + tag(delta) + "_vs_modulus", ks_test_two_sample(v, w), s2);
    }
  }

  // bridge 0 -> 0 over [0, 1] at theta = 0.3, plus one bridge with a > 0
  const double theta = 0.3;
  const std::vector<double> grid{0.0, theta, 1.0};
  struct BridgeCase {
    double delta;
    double a;
  };
  for (const BridgeCase bc : {BridgeCase{3.0, 0.0}, BridgeCase{3.5, 0.0}, BridgeCase{4.0, 0.0}, BridgeCase{7.0, 0.0},
                              BridgeCase{3.0, 0.5}}) {
    const BesselParams p(bc.delta, bc.a);
    const std::uint64_t s = seed++;
    Rng rng(s);
    std::vector<double> v(n);
    for (auto& y : v) y = sample_bessel_bridge(p, grid, rng).values[1];
    const TabulatedCdf cdf = bridge_marginal_cdf(p, theta);
    const std::string name = "bridge_delta_" + tag(bc.delta) + "_a_" + tag(bc.a);
    ks(name + "_vs_quadrature", ks_test(v, [&](double y) { return cdf(y); }), s);
    const double rd = std::round(bc.delta);
    if (rd == bc.delta && bc.a == 0.0) {
      const std::uint64_t s2 = seed++;
      Rng orng(s2);
      std::vector<double> w(n);
      for (auto& y : w) y = sample_brownian_bridge_modulus(static_cast<int>(rd), grid, orng).values[1];
      ks(name + "_vs_modulus", ks_test_two_sample(v, w), s2);
    }
  }
  write_criterion_file(r, dir / "c02_samplers.json");
  return r;
}

namespace {

std::string slurp(const std::filesystem::path& f) {
  std::ifstream in(f, std::ios::binary);
  if (!in) throw IoError(f.string() + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) { return slurp(a) == slurp(b); }

}  // namespace

std::vector<std::string> compare_trees(const std::filesystem::path& a, const std::filesystem::path& b) {
  namespace fs = std::filesystem;
  auto list = [](const fs::path& root) {
    std::vector<std::string> files;
    if (!fs::exists(root)) return files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  const auto fa = list(a);
  const auto fb = list(b);
  std::vector<std::string> diff;
  std::set_symmetric_difference(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(diff));
  std::vector<std::string> common;
  std::set_intersection(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(common));
  for (const auto& f : common) {
    if (!same_bytes(a / f, b / f)) diff.push_back(f);
  }
  std::sort(diff.begin(), diff.end());
  return diff;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool selected(const std::vector<int>& only, int id) {
  return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
}

// One pass over criteria 1-11 into `dir`.
std::vector<CriterionResult> run_pass(const SuiteOptions& options, const std::filesystem::path& dir, unsigned workers,
                                      std::ostream* log) {
  std::vector<CriterionResult> out;
  auto finish = [&](CriterionResult r) {
    if (log) *log << r.status_line() << std::endl;
    out.push_back(std::move(r));
  };
  if (selected(options.only, 1)) {
    const auto t0 = Clock::now();
    CriterionResult r = density_suite(dir);
    r.seconds = since(t0);
    r.budget_seconds = meta(1).budget;
    finish(std::move(r));
  }
  if (selected(options.only, 2)) {
    const auto t0 = Clock::now();
    CriterionResult r = sampler_suite(dir);
    r.seconds = since(t0);
    r.budget_seconds = meta(2).budget;
    finish(std::move(r));
  }
  const auto entries = suite_configs(dir);
  for (int id = 3; id <= 11; ++id) {
    if (!selected(options.only, id)) continue;
    CriterionResult r;
    r.id = id;
    r.title = meta(id).title;
    r.budget_seconds = meta(id).budget;
    const auto t0 = Clock::now();
    for (const auto& e : entries) {
      if (e.criterion != id) continue;
      ExperimentConfig c = e.config;
      c.master_seed += options.seed_offset;
      RunOptions ro;
      ro.workers = workers;
      const ExperimentReport rep = run_experiment(c, ro);
      const std::string prefix = c.stem() + ".";
      for (auto t : rep.tests) {
        // the profile criterion asserts only the profile; the histogram bound is criterion 7's
        if (id == 8 && t.name != "reflection_fraction_one") {
          r.observations[prefix + t.name] = t.value;
          continue;
        }
        t.name = prefix + t.name;
        r.tests.push_back(std::move(t));
      }
      for (const auto& [k, v] : rep.observations) r.observations[prefix + k] = v;
      r.files.insert(r.files.end(), rep.files.begin(), rep.files.end());
    }
    r.seconds = since(t0);
    finish(std::move(r));
  }
  return out;
}

void write_suite_file(const std::vector<CriterionResult>& results, const std::filesystem::path& file) {
  json j;
  j["schema_version"] = ExperimentConfig::kSchemaVersion;
  json a = json::array();
  for (const auto& r : results) {
    a.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.tests_pass()}, {"tests", tests_json(r.tests)}});
  }
  j["criteria"] = a;
  write_text_file(file, j.dump(2) + "\n");
}

}  // namespace

std::vector<CriterionResult> run_check_suite(const SuiteOptions& options, std::ostream* log) {
  const unsigned workers = options.workers == 0 ? worker_count() : options.workers;
  std::vector<CriterionResult> results = run_pass(options, options.output_dir, workers, log);
  write_suite_file(results, options.output_dir / "check.json");

  if (selected(options.only, 12)) {
    const auto t0 = Clock::now();
    std::filesystem::path rerun = options.rerun_dir;
    if (rerun.empty()) rerun = options.output_dir.string() + ".rerun";
    std::error_code ec;
    std::filesystem::remove_all(rerun, ec);
    const unsigned other = workers == 1 ? 3 : 1;
    const std::vector<CriterionResult> again = run_pass(options, rerun, other, nullptr);
    write_suite_file(again, rerun / "check.json");
    // Only files this run produced; the output directory may hold others.
    std::set<std::string> produced{"check.json"}, reproduced{"check.json"};
    for (const auto& x : results) {
      for (const auto& f : x.files) produced.insert(std::filesystem::relative(f, options.output_dir).generic_string());
    }
    for (const auto& x : again) {
      for (const auto& f : x.files) reproduced.insert(std::filesystem::relative(f, rerun).generic_string());
    }
    std::vector<std::string> diff;
    std::set_symmetric_difference(produced.begin(), produced.end(), reproduced.begin(), reproduced.end(),
                                  std::back_inserter(diff));
    for (const auto& f : produced) {
      if (reproduced.count(f) && !same_bytes(options.output_dir / f, rerun / f)) diff.push_back(f);
    }
    const std::size_t files = produced.size();

    CriterionResult r;
    r.id = 12;
    r.title = meta(12).title;
    r.observations["files_compared"] = static_cast<double>(files);
    r.observations["workers_first"] = workers;
    r.observations["workers_second"] = other;
    r.tests.push_back(make_test("differing_files", static_cast<double>(diff.size()), Compare::less_equal, 0.0, files, 0));
    r.seconds = since(t0);
    r.budget_seconds = std::numeric_limits<double>::infinity();
    if (log) {
      for (const auto& f : diff) *log << "  differs: " << f << "\n";
      *log << r.status_line() << std::endl;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace hitspde
