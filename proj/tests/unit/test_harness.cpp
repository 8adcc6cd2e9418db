#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "hitspde/check_suite.hpp"
#include "hitspde/field_io.hpp"
#include "hitspde/harness.hpp"
#include "hitspde/random.hpp"
#include "hitspde/stats.hpp"

using namespace hitspde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hitspde_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig small_sweep(const fs::path& dir) {
  ExperimentConfig c;
  c.kind = ExperimentKind::hitting_sweep;
  c.name = "sweep";
  c.replicas = 4;
  c.master_seed = 77;
  c.output_dir = dir;
  c.nx = 16;
  c.horizon = 0.25;
  c.deltas = {3.0, 5.0, 7.0};
  return c;
}

}  // namespace

TEST(Ks, NullHypothesisHolds) {
  Rng rng(1);
  std::vector<double> u(1000);
  for (auto& v : u) v = open_uniform(rng);
  EXPECT_GT(ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value, 0.01);
}

TEST(Ks, LocationShiftIsRejected) {
  Rng rng(2);
  std::vector<double> v(1000);
  for (auto& x : v) x = 1.0 + standard_normal(rng);
  const boost::math::normal_distribution<double> n01;
  const KsResult r = ks_test(v, [&](double x) { return boost::math::cdf(n01, x); });
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_NEAR(r.statistic, 0.38, 0.05);
}

TEST(Ks, LadderByEnumeration) {
  std::vector<double> v(20);
  for (int i = 0; i < 20; ++i) v[i] = i + 1.0;
  EXPECT_NEAR(ks_test(v, [](double x) { return x / 21.0; }).statistic, 1.0 / 21.0, 1e-15);
}

TEST(Ks, Errors) {
  std::vector<double> few(10, 0.5);
  EXPECT_THROW(ks_test(few, [](double x) { return x; }), std::invalid_argument);
  std::vector<double> flat(30, 0.5);
  EXPECT_THROW(ks_test(flat, [](double x) { return x; }), std::invalid_argument);
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.963945, 1e-6);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.0494, 1e-3);
}

TEST(Summarize, BasicsAndSchema) {
  const std::vector<ReplicaMetrics> one{{{"a", 3.0}}};
  const Summary s1 = summarize(one);
  EXPECT_EQ(s1.metrics.at("a").mean, 3.0);
  EXPECT_EQ(s1.metrics.at("a").stderr_, 0.0);
  const std::vector<ReplicaMetrics> two{{{"a", 0.0}}, {{"a", 2.0}}};
  const Summary s2 = summarize(two);
  EXPECT_EQ(s2.metrics.at("a").mean, 1.0);
  EXPECT_EQ(s2.metrics.at("a").max, 2.0);
  const std::vector<ReplicaMetrics> bad{{{"a", 0.0}}, {{"b", 2.0}}};
  EXPECT_THROW(summarize(bad), std::invalid_argument);
  const std::vector<ReplicaMetrics> z{{{"zeta_sup", 2.0}}, {{"zeta_sup", 5.0}}, {{"zeta_sup", 2.0}}};
  const Summary s3 = summarize(z);
  EXPECT_EQ(s3.zeta_histogram.at(2), 2u);
  ASSERT_EQ(s3.flagged.size(), 1u);
  EXPECT_EQ(s3.flagged[0], (std::pair<std::size_t, int>{1, 5}));
  EXPECT_NE(summary_csv(s3).find("zeta_sup,count\n2,2\n5,1\n"), std::string::npos);
}

TEST(TestResult, PassIsAFunctionOfValueAndThreshold) {
  TestResult t;
  t.value = 1.0;
  t.threshold = 1.0;
  t.compare = TestResult::Compare::less_equal;
  EXPECT_TRUE(t.pass());
  t.compare = TestResult::Compare::less;
  EXPECT_FALSE(t.pass());
  t.value = std::nan("");
  t.compare = TestResult::Compare::greater_equal;
  EXPECT_FALSE(t.pass());
}

TEST(Seeds, SplitIsInjectiveOnAMillionIndices) {
  std::vector<std::uint64_t> s(1000000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = split_seed(12345, i);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  EXPECT_NE(substream_seed(5, 0), substream_seed(5, 1));
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 2.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Config, ParseDefaultsAndRoundTrip) {
  const ExperimentConfig c = parse_config(R"({"schema_version": 1, "kind": "zeta-histogram"})");
  EXPECT_EQ(c.kind, ExperimentKind::zeta_histogram);
  EXPECT_EQ(c.nx, 64);
  EXPECT_EQ(c.stem(), "zeta-histogram");
  for (const auto& e : suite_configs("out")) {
    const std::string text = config_to_json(e.config);
    EXPECT_EQ(config_to_json(parse_config(text)), text);
  }
}

TEST(Config, RejectsBadDocuments) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"kind": "hitting-sweep"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 2, "kind": "hitting-sweep"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "nope"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "extra": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "grid": {"nx": 1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "model": {"deltas": [4, 3]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "model": {"family": "penalized"}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "checks": ["scaling"]})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  try {
    parse_config(R"({"schema_version": 1, "kind": "hitting-sweep", "grid": {"nx": "x"}})", "my.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.nx"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("my.json"), std::string::npos);
  }
}

TEST(Config, ShippedFilesMatchTheSuite) {
  const fs::path dir = HITSPDE_CONFIG_DIR;
  for (const auto& e : suite_configs("check")) {
    const fs::path file = dir / (e.config.stem() + ".json");
    ASSERT_TRUE(fs::exists(file)) << file;
    EXPECT_EQ(config_to_json(load_config(file)), config_to_json(e.config)) << file;
  }
}

TEST(RunExperiment, ZeroReplicasPassVacuously) {
  const fs::path dir = scratch("empty");
  ExperimentConfig c = small_sweep(dir);
  c.replicas = 0;
  const ExperimentReport r = run_experiment(c);
  EXPECT_TRUE(r.pass());
  EXPECT_TRUE(r.replicas.empty());
  EXPECT_EQ(r.files.size(), 3u);
  EXPECT_EQ(slurp(dir / "sweep.replicas.csv"), "replica,seed\n");
}

TEST(RunExperiment, ByteIdenticalReruns) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  ExperimentConfig c = small_sweep(a);
  RunOptions one;
  one.workers = 1;
  run_experiment(c, one);
  c.output_dir = b;
  RunOptions three;
  three.workers = 3;
  run_experiment(c, three);
  EXPECT_TRUE(compare_trees(a, b).empty());
  const std::string json = slurp(a / "sweep.json");
  for (const char* key : {"\"schema_version\"", "\"zeta_sup\"", "\"threshold\"", "\"grid\"", "\"seed\""}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
}

TEST(RunExperiment, SeedsDoNotDependOnReplicaCount) {
  ExperimentConfig c = small_sweep(scratch("prefix"));
  c.replicas = 2;
  RunOptions o;
  o.write_files = false;
  const ExperimentReport small = run_experiment(c, o);
  c.replicas = 4;
  const ExperimentReport large = run_experiment(c, o);
  ASSERT_EQ(large.replicas.size(), 4u);
  EXPECT_EQ(small.replicas[0], large.replicas[0]);
  EXPECT_EQ(small.replicas[1], large.replicas[1]);
  const std::string csv = replicas_csv(large);
  EXPECT_NE(csv.find("\n0," + std::to_string(split_seed(77, 0)) + ","), std::string::npos);
}

TEST(RunExperiment, ShortInvariantRunReportsWithoutKs) {
  ExperimentConfig c = small_sweep(scratch("fail"));
  c.kind = ExperimentKind::invariant_test;
  c.deltas = {3.0};
  c.initial = InitialProfile::constant;
  c.boundary = 0.0;
  c.interval = {0.0, 1.0};
  c.replicas = 25;
  RunOptions o;
  o.write_files = false;
  // KS is not asserted below 500 replicas
  const ExperimentReport r = run_experiment(c, o);
  EXPECT_EQ(r.replicas.size(), 25u);
  EXPECT_TRUE(r.pass());
}

TEST(RunExperiment, IoErrorsCarryThePath) {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  ExperimentConfig c = small_sweep(blocker / "sub");
  c.replicas = 0;
  try {
    run_experiment(c);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("blocker"), std::string::npos);
  }
}

TEST(RunExperiment, MonotoneHitFractionInSmallSweep) {
  ExperimentConfig c = small_sweep(scratch("mono"));
  c.replicas = 8;
  RunOptions o;
  o.write_files = false;
  const ExperimentReport r = run_experiment(c, o);
  const auto t = std::find_if(r.tests.begin(), r.tests.end(),
                              [](const TestResult& x) { return x.name == "hit_fraction_max_increase_in_delta"; });
  ASSERT_NE(t, r.tests.end());
  EXPECT_TRUE(t->pass());
}

TEST(CompareTrees, ReportsDifferences) {
  const fs::path a = scratch("tree_a"), b = scratch("tree_b");
  write_text_file(a / "x.txt", "1");
  write_text_file(b / "x.txt", "2");
  write_text_file(a / "only_a.txt", "");
  write_text_file(a / "same/y.txt", "y");
  write_text_file(b / "same/y.txt", "y");
  EXPECT_EQ(compare_trees(a, b), (std::vector<std::string>{"only_a.txt", "x.txt"}));
}
