#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hitspde/check_suite.hpp"
#include "hitspde/field_io.hpp"
#include "hitspde/harness.hpp"
#include "hitspde/pinned_string.hpp"
#include "hitspde/random.hpp"
#include "hitspde/spde_solver.hpp"
#include "hitspde/zero_analysis.hpp"

namespace {

using namespace hitspde;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> replicas;
  std::string format = "csv";
  unsigned workers = 0;
  std::vector<int> only;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed override");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--replicas", f.replicas, "replica count override");
  cmd->add_option("--workers", f.workers, "worker threads (default: HITSPDE_THREADS or all cores)");
}

ExperimentConfig default_for(int criterion) {
  for (const auto& e : suite_configs("out")) {
    if (e.criterion == criterion) return e.config;
  }
  throw std::logic_error("no default config");
}

ExperimentConfig resolve(const Flags& f, const ExperimentConfig& fallback) {
  ExperimentConfig c = f.config.empty() ? fallback : load_config(f.config);
  if (f.seed) c.master_seed = *f.seed;
  if (f.out) c.output_dir = *f.out;
  if (f.replicas) c.replicas = *f.replicas;
  c.validate();
  return c;
}

bool is_string_kind(ExperimentKind k) {
  return k == ExperimentKind::string_zeros || k == ExperimentKind::scaling_check;
}

void print_report(const ExperimentReport& r) {
  std::cout << r.config.stem() << " (" << to_string(r.config.kind) << ", " << r.replicas.size() << " replicas, seed "
            << r.config.master_seed << ")\n";
  for (const auto& t : r.tests) {
    std::cout << "  " << (t.pass() ? "PASS " : "FAIL ") << t.name << " = " << format_double(t.value) << " vs "
              << format_double(t.threshold) << "\n";
  }
  for (const auto& [k, v] : r.observations) std::cout << "  " << k << " = " << format_double(v) << "\n";
  for (const auto& p : r.files) std::cout << "  wrote " << p.string() << "\n";
}

int run_kinds(const ExperimentConfig& c, const Flags& f, const std::vector<ExperimentKind>& allowed,
              const char* command) {
  if (std::find(allowed.begin(), allowed.end(), c.kind) == allowed.end()) {
    throw ConfigError(std::string(command) + ": kind " + std::string(to_string(c.kind)) + " is not handled here");
  }
  RunOptions ro;
  ro.workers = f.workers;
  const ExperimentReport r = run_experiment(c, ro);
  print_report(r);
  return r.pass() ? kPass : kFail;
}

int simulate(const Flags& f) {
  ExperimentConfig fallback;
  fallback.replicas = 1;
  fallback.name = "simulate";
  const ExperimentConfig c = resolve(f, fallback);
  const std::uint64_t seed = split_seed(c.master_seed, 0);
  const bool binary = f.format == "bin";
  const auto stem = c.output_dir / c.stem();
  std::vector<std::filesystem::path> files;
  ZeroReport zeros;
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw IoError(c.output_dir.string() + ": cannot create directory: " + ec.message());

  if (is_string_kind(c.kind)) {
    const StringSpec spec = StringSpec::unit(c.dims.front(), c.string_half_width, c.string_horizon, c.string_dx);
    const StringField field = simulate_string(spec, seed);
    ClusterConfig cc;
    cc.threshold = c.threshold.value_or(0.02);
    cc.min_separation = c.min_separation;
    const FieldPath& path = field.path;
    zeros = zeta_sup(path, cc, seed);
    files.push_back(stem.string() + (binary ? ".field.bin" : ".field.csv"));
    if (binary) {
      write_field_binary(files.back(), path, spec.window_meta());
    } else {
      write_field_csv(files.back(), path);
    }
  } else {
    const GridSpec g = solver_grid(c, c.nx);
    const double delta = c.deltas.front();
    Rng init_rng(substream_seed(seed, 0));
    const auto initial = initial_profile(c, g, delta, init_rng);
    const FieldPath path =
        solve(initial, member_config(c, delta, g), g, NoiseRealization::generate(substream_seed(seed, 1), g));
    zeros = zeta_sup(path, cluster_config(c, g, c.min_separation), seed);
    files.push_back(stem.string() + (binary ? ".field.bin" : ".field.csv"));
    if (binary) {
      write_field_binary(files.back(), path);
    } else {
      write_field_csv(files.back(), path);
    }
  }
  files.push_back(stem.string() + ".zeros.csv");
  write_text_file(files.back(), zero_report_csv(zeros));
  files.push_back(stem.string() + ".zeros.json");
  write_text_file(files.back(), zero_report_json(zeros));
  std::cout << "zeta_sup = " << zeros.zeta_sup << " at threshold " << format_double(zeros.threshold) << "\n";
  for (const auto& p : files) std::cout << "wrote " << p.string() << "\n";
  return kPass;
}

int check(const Flags& f) {
  SuiteOptions o;
  if (f.out) o.output_dir = *f.out;
  o.workers = f.workers;
  o.only = f.only;
  if (f.seed) o.seed_offset = *f.seed;
  const auto results = run_check_suite(o, &std::cout);
  bool pass = !results.empty();
  for (const auto& r : results) pass = pass && r.pass();
  std::cout << (pass ? "all criteria pass" : "acceptance failures present") << "\n";
  return pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflected and singular stochastic heat equations: simulation and zero-set experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "simulate one path and write the field and its zero report");
  add_common(sim, f);
  sim->add_option("--format", f.format, "field file format")->check(CLI::IsMember({"csv", "bin"}));
  auto* sweep = app.add_subcommand("sweep", "hitting sweep and other solver experiments");
  add_common(sweep, f);
  auto* inv = app.add_subcommand("invariant", "stationarity test against the bridge marginal");
  add_common(inv, f);
  auto* str = app.add_subcommand("string", "pinned-string experiments");
  add_common(str, f);
  auto* chk = app.add_subcommand("check", "run the acceptance suite");
  chk->add_option("--out", f.out, "output directory (default: check)");
  chk->add_option("--seed", f.seed, "offset added to every suite seed (0 reproduces the registered run)");
  chk->add_option("--workers", f.workers, "worker threads");
  chk->add_option("--only", f.only, "criterion ids to run")->check(CLI::Range(1, 12));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  }

  try {
    if (*sim) return simulate(f);
    if (*sweep) {
      return run_kinds(resolve(f, default_for(6)), f,
                       {ExperimentKind::hitting_sweep, ExperimentKind::zeta_histogram, ExperimentKind::coupling_check,
                        ExperimentKind::holder_check},
                       "sweep");
    }
    if (*inv) return run_kinds(resolve(f, default_for(5)), f, {ExperimentKind::invariant_test}, "invariant");
    if (*str) {
      return run_kinds(resolve(f, default_for(11)), f, {ExperimentKind::string_zeros, ExperimentKind::scaling_check},
                       "string");
    }
    if (*chk) return check(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
