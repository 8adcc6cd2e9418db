#include "hitspde/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "experiments.hpp"
#include "hitspde/field_io.hpp"
#include "hitspde/parallel.hpp"
#include "hitspde/random.hpp"

namespace hitspde {

using json = nlohmann::ordered_json;

unsigned worker_count() {
  if (const char* env = std::getenv("HITSPDE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::invariant_test, "invariant-test"}, {ExperimentKind::hitting_sweep, "hitting-sweep"},
    {ExperimentKind::zeta_histogram, "zeta-histogram"}, {ExperimentKind::string_zeros, "string-zeros"},
    {ExperimentKind::scaling_check, "scaling-check"},   {ExperimentKind::coupling_check, "coupling-check"},
    {ExperimentKind::holder_check, "holder-check"},
};

std::set<std::string> allowed_checks(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::zeta_histogram: return {"reflection-profile"};
    case ExperimentKind::scaling_check: return {"covariance-bounds", "scaling", "translate", "reverse"};
    default: return {};
  }
}

[[noreturn]] void fail(const std::string& origin, const std::string& field, const std::string& why) {
  throw ConfigError(origin + ": " + field + ": " + why);
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string origin, std::string prefix)
      : j_(j), origin_(std::move(origin)), prefix_(std::move(prefix)) {
    if (!j_.is_object()) fail(origin_, prefix_.empty() ? "document" : prefix_, "expected an object");
  }
  ~ObjectReader() = default;

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, key);
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) out = as_number(*v, key);
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) out = static_cast<int>(as_integer(*v, key, -(1LL << 31), (1LL << 31) - 1));
  }
  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = static_cast<std::size_t>(as_integer(*v, key, 0, 1LL << 40));
  }
  void seed(const std::string& key, std::uint64_t& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v->get<std::int64_t>());
    } else {
      fail(origin_, path(key), "expected a non-negative 64-bit integer");
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(origin_, path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(origin_, path(key), "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_number(e, key));
    }
  }
  void integers(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(origin_, path(key), "expected an array of integers");
      out.clear();
      for (const auto& e : *v) out.push_back(static_cast<int>(as_integer(e, key, -(1LL << 31), (1LL << 31) - 1)));
    }
  }
  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(origin_, path(key), "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(origin_, path(key), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(origin_, path(it.key()), "unknown key");
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) fail(origin_, path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(origin_, path(key), "expected a finite number");
    return d;
  }
  long long as_integer(const json& v, const std::string& key, long long lo, long long hi) const {
    long long x = 0;
    if (v.is_number_integer()) {
      x = v.get<long long>();
    } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
               std::abs(v.get<double>()) < 9e15) {
      x = static_cast<long long>(v.get<double>());
    } else {
      fail(origin_, path(key), "expected an integer");
    }
    if (x < lo || x > hi) fail(origin_, path(key), "integer out of range");
    return x;
  }

  const json& j_;
  std::string origin_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <class Fn>
void section(ObjectReader& parent, const std::string& key, Fn&& fn) {
  if (const json* v = parent.find(key)) {
    ObjectReader r(*v, parent.origin(), parent.path(key));
    fn(r);
    r.finish();
  }
}

std::string_view family_name(FamilyMode m) { return m == FamilyMode::projected ? "projected" : "penalized"; }

std::string_view initial_name(InitialProfile p) {
  switch (p) {
    case InitialProfile::mean_bridge: return "mean-bridge";
    case InitialProfile::bridge_draw: return "bridge-draw";
    case InitialProfile::constant: return "constant";
  }
  return "mean-bridge";
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string_view compare_name(TestResult::Compare c) {
  switch (c) {
    case TestResult::Compare::less: return "<";
    case TestResult::Compare::less_equal: return "<=";
    case TestResult::Compare::greater: return ">";
    case TestResult::Compare::greater_equal: return ">=";
  }
  return "?";
}

// NaN and infinities become null.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

std::string ExperimentConfig::stem() const { return name.empty() ? std::string(to_string(kind)) : name; }

void ExperimentConfig::validate() const {
  const std::string o = "config";
  if (schema_version != kSchemaVersion) {
    fail(o, "schema_version", "unsupported version " + std::to_string(schema_version));
  }
  if (!name.empty() && name.find_first_of("/\\ ") != std::string::npos) fail(o, "name", "must be a plain file stem");
  if (replicas > 10'000'000) fail(o, "replicas", "at most 10^7");
  if (nx < 2) fail(o, "grid.nx", "must be >= 2");
  if (!(horizon > 0.0)) fail(o, "grid.horizon", "must be positive");
  if (!(dt_ratio > 0.0)) fail(o, "grid.dt_ratio", "must be positive");
  if (!(interval.lo < interval.hi)) fail(o, "grid.interval", "requires lo < hi");
  for (int n : refinements) {
    if (n < 2) fail(o, "grid.refinements", "entries must be >= 2");
  }
  if (deltas.empty()) fail(o, "model.deltas", "must not be empty");
  for (double d : deltas) {
    if (!(d >= 3.0)) fail(o, "model.deltas", "entries must be >= 3");
  }
  if (!std::is_sorted(deltas.begin(), deltas.end()) ||
      std::adjacent_find(deltas.begin(), deltas.end()) != deltas.end()) {
    fail(o, "model.deltas", "must be strictly increasing");
  }
  if (!(boundary >= 0.0)) fail(o, "model.boundary", "must be >= 0");
  if (epsilon && !(*epsilon > 0.0)) fail(o, "model.epsilon", "must be positive");
  if (lambda && !(*lambda > 0.0)) fail(o, "model.lambda", "must be positive");
  if (family == FamilyMode::penalized && (!epsilon || !lambda)) {
    fail(o, "model.family", "penalized members need epsilon and lambda");
  }
  if (threshold && !(*threshold > 0.0)) fail(o, "zeros.threshold", "must be positive");
  if (!(kappa > 0.0)) fail(o, "zeros.kappa", "must be positive");
  if (!(alpha > 0.0)) fail(o, "zeros.alpha", "must be positive");
  if (min_separation < 1) fail(o, "zeros.min_separation", "must be >= 1");
  if (!(boundary_layer >= 0.0 && boundary_layer < 0.5)) fail(o, "zeros.boundary_layer", "must be in [0, 0.5)");
  for (int s : separations) {
    if (s < 1) fail(o, "zeros.separations", "entries must be >= 1");
  }
  if (!(probe_x > interval.lo && probe_x < interval.hi)) fail(o, "probe.x", "must lie inside the interval");
  if (!(beta > 0.0 && beta < 0.5)) fail(o, "probe.beta", "must be in (0, 1/2)");
  if (dims.empty()) fail(o, "string.dims", "must not be empty");
  for (int d : dims) {
    if (d < 1) fail(o, "string.dims", "entries must be >= 1");
  }
  if (!(string_half_width > 0.0)) fail(o, "string.half_width", "must be positive");
  if (!(string_horizon > 0.0)) fail(o, "string.horizon", "must be positive");
  if (!(string_dx > 0.0)) fail(o, "string.dx", "must be positive");
  for (double dx : string_refinements) {
    if (!(dx > 0.0)) fail(o, "string.refinements", "entries must be positive");
  }
  if (probe_pairs < 1) fail(o, "string.probe_pairs", "must be >= 1");
  if (!(scale > 0.0)) fail(o, "string.scale", "must be positive");

  const auto allowed = allowed_checks(kind);
  for (const auto& c : checks) {
    if (!allowed.count(c)) fail(o, "checks", "'" + c + "' is not a check of " + std::string(to_string(kind)));
  }
  switch (kind) {
    case ExperimentKind::invariant_test:
    case ExperimentKind::zeta_histogram:
    case ExperimentKind::holder_check:
      if (deltas.size() != 1) fail(o, "model.deltas", "this kind takes exactly one delta");
      break;
    case ExperimentKind::scaling_check:
      if (checks.empty()) fail(o, "checks", "scaling-check needs at least one check");
      break;
    default: break;
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  ExperimentConfig c;
  ObjectReader r(j, origin, "");
  const json* version = r.find("schema_version");
  if (!version) fail(origin, "schema_version", "missing");
  r.integer("schema_version", c.schema_version);
  if (c.schema_version != ExperimentConfig::kSchemaVersion) {
    fail(origin, "schema_version", "unsupported version " + std::to_string(c.schema_version));
  }
  std::string kind;
  if (!r.find("kind")) fail(origin, "kind", "missing");
  r.string("kind", kind);
  try {
    c.kind = parse_kind(kind);
  } catch (const ConfigError& e) {
    fail(origin, "kind", e.what());
  }
  r.string("name", c.name);
  r.count("replicas", c.replicas);
  r.seed("master_seed", c.master_seed);
  std::string out = c.output_dir.string();
  r.string("output_dir", out);
  c.output_dir = out;
  r.strings("checks", c.checks);

  section(r, "grid", [&](ObjectReader& g) {
    g.integer("nx", c.nx);
    g.number("horizon", c.horizon);
    g.number("dt_ratio", c.dt_ratio);
    std::vector<double> iv;
    g.numbers("interval", iv);
    if (!iv.empty()) {
      if (iv.size() != 2) fail(origin, g.path("interval"), "expected [lo, hi]");
      c.interval = Interval{iv[0], iv[1]};
    }
    g.integers("refinements", c.refinements);
  });
  section(r, "model", [&](ObjectReader& m) {
    m.numbers("deltas", c.deltas);
    m.number("boundary", c.boundary);
    std::string family = std::string(family_name(c.family));
    m.string("family", family);
    if (family == "projected") {
      c.family = FamilyMode::projected;
    } else if (family == "penalized") {
      c.family = FamilyMode::penalized;
    } else {
      fail(origin, m.path("family"), "expected 'projected' or 'penalized'");
    }
    m.optional_number("epsilon", c.epsilon);
    m.optional_number("lambda", c.lambda);
    std::string drift = c.implicit_drift ? "implicit-split" : "explicit";
    m.string("drift", drift);
    if (drift == "implicit-split") {
      c.implicit_drift = true;
    } else if (drift == "explicit") {
      c.implicit_drift = false;
    } else {
      fail(origin, m.path("drift"), "expected 'implicit-split' or 'explicit'");
    }
    std::string initial = std::string(initial_name(c.initial));
    m.string("initial", initial);
    if (initial == "mean-bridge") {
      c.initial = InitialProfile::mean_bridge;
    } else if (initial == "bridge-draw") {
      c.initial = InitialProfile::bridge_draw;
    } else if (initial == "constant") {
      c.initial = InitialProfile::constant;
    } else {
      fail(origin, m.path("initial"), "expected 'mean-bridge', 'bridge-draw' or 'constant'");
    }
  });
  section(r, "zeros", [&](ObjectReader& z) {
    z.optional_number("threshold", c.threshold);
    z.number("kappa", c.kappa);
    z.number("alpha", c.alpha);
    z.integer("min_separation", c.min_separation);
    z.number("boundary_layer", c.boundary_layer);
    z.integers("separations", c.separations);
  });
  section(r, "probe", [&](ObjectReader& p) {
    p.number("x", c.probe_x);
    p.number("beta", c.beta);
  });
  section(r, "string", [&](ObjectReader& s) {
    s.integers("dims", c.dims);
    s.number("half_width", c.string_half_width);
    s.number("horizon", c.string_horizon);
    s.number("dx", c.string_dx);
    s.numbers("refinements", c.string_refinements);
    s.integer("probe_pairs", c.probe_pairs);
    s.number("scale", c.scale);
  });
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (msg.rfind("config: ", 0) == 0) msg = origin + ": " + msg.substr(8);
    throw ConfigError(msg);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(file.string() + ": cannot open config file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ConfigError(file.string() + ": read error");
  return parse_config(text, file.string());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["kind"] = std::string(to_string(c.kind));
  j["name"] = c.stem();
  j["replicas"] = c.replicas;
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir.generic_string();
  j["checks"] = c.checks;
  j["grid"] = {{"nx", c.nx},
               {"horizon", c.horizon},
               {"dt_ratio", c.dt_ratio},
               {"interval", {c.interval.lo, c.interval.hi}},
               {"refinements", c.refinements}};
  j["model"] = {{"deltas", c.deltas},
                {"boundary", c.boundary},
                {"family", std::string(family_name(c.family))},
                {"epsilon", optional_json(c.epsilon)},
                {"lambda", optional_json(c.lambda)},
                {"drift", c.implicit_drift ? "implicit-split" : "explicit"},
                {"initial", std::string(initial_name(c.initial))}};
  j["zeros"] = {{"threshold", optional_json(c.threshold)},
                {"kappa", c.kappa},
                {"alpha", c.alpha},
                {"min_separation", c.min_separation},
                {"boundary_layer", c.boundary_layer},
                {"separations", c.separations}};
  j["probe"] = {{"x", c.probe_x}, {"beta", c.beta}};
  j["string"] = {{"dims", c.dims},
                 {"half_width", c.string_half_width},
                 {"horizon", c.string_horizon},
                 {"dx", c.string_dx},
                 {"refinements", c.string_refinements},
                 {"probe_pairs", c.probe_pairs},
                 {"scale", c.scale}};
  return j.dump(2) + "\n";
}

bool ExperimentReport::pass() const {
  return std::all_of(tests.begin(), tests.end(), [](const TestResult& t) { return t.pass(); });
}

void write_text_file(const std::filesystem::path& file, std::string_view text) {
  std::error_code ec;
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path(), ec);
    if (ec) throw IoError(file.parent_path().string() + ": cannot create directory: " + ec.message());
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(file.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError(file.string() + ": write failed");
}

std::string replicas_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "replica,seed";
  if (!report.replicas.empty()) {
    for (const auto& [name, _] : report.replicas.front()) os << ',' << name;
  }
  os << '\n';
  for (std::size_t r = 0; r < report.replicas.size(); ++r) {
    os << r << ',' << split_seed(report.config.master_seed, r);
    for (const auto& [_, v] : report.replicas[r]) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::string report_json(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  json j;
  j["schema_version"] = ExperimentConfig::kSchemaVersion;
  j["kind"] = std::string(to_string(c.kind));
  j["name"] = c.stem();
  j["seed"] = c.master_seed;
  j["replicas"] = report.replicas.size();
  for (const char* key : {"grid", "threshold", "zeta_sup"}) {
    auto it = report.sections.find(key);
    j[key] = it == report.sections.end() ? json(nullptr) : json::parse(it->second);
  }
  j["pass"] = report.pass();
  json tests = json::array();
  for (const auto& t : report.tests) {
    tests.push_back({{"name", t.name},
                     {"value", number_json(t.value)},
                     {"compare", std::string(compare_name(t.compare))},
                     {"threshold", number_json(t.threshold)},
                     {"pass", t.pass()},
                     {"sample_size", t.sample_size},
                     {"seed", t.seed}});
  }
  j["tests"] = tests;
  json obs = json::object();
  for (const auto& [k, v] : report.observations) obs[k] = number_json(v);
  j["observations"] = obs;
  json metrics = json::object();
  for (const auto& [k, m] : report.summary.metrics) {
    metrics[k] = {{"mean", number_json(m.mean)},
                  {"stderr", number_json(m.stderr_)},
                  {"min", number_json(m.min)},
                  {"max", number_json(m.max)},
                  {"n", m.n}};
  }
  j["metrics"] = metrics;
  for (const auto& [k, v] : report.sections) {
    if (k == "grid" || k == "threshold" || k == "zeta_sup") continue;
    j[k] = json::parse(v);
  }
  return j.dump(2) + "\n";
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  if (config.replicas > 0) {
    detail::KindResult result = detail::run_kind(config, options.workers);
    report.replicas = std::move(result.replicas);
    report.tests = std::move(result.tests);
    report.observations = std::move(result.observations);
    report.sections = std::move(result.sections);
    report.summary = summarize(report.replicas);
  }
  if (options.write_files) {
    const auto stem = config.stem();
    const auto dir = config.output_dir;
    const std::filesystem::path files[] = {dir / (stem + ".replicas.csv"), dir / (stem + ".summary.csv"),
                                           dir / (stem + ".json")};
    write_text_file(files[0], replicas_csv(report));
    write_text_file(files[1], summary_csv(report.summary));
    write_text_file(files[2], report_json(report));
    report.files.assign(std::begin(files), std::end(files));
  }
  return report;
}

}  // namespace hitspde
