#include "hitspde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hitspde/field_io.hpp"

namespace hitspde {

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.0) {
    // Theta-function form of the CDF; converges fast for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * pi2 / (8.0 * x * x));
      cdf += term;
      if (term < 1e-300 || term < 1e-17 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300 || term < 1e-17 * std::abs(sum)) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

void check_sample(std::span<const double> s, const char* what) {
  if (s.size() < 20) throw std::invalid_argument(std::string(what) + ": KS test needs at least 20 samples");
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  if (*lo == *hi) throw std::invalid_argument(std::string(what) + ": degenerate sample (all values equal)");
  for (double v : s) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite sample");
  }
}

}  // namespace

KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
  check_sample(samples, "samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
  }
  return {d, kolmogorov_survival(std::sqrt(n) * d), x.size()};
}

KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
  check_sample(a, "first sample");
  check_sample(b, "second sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = n * m / (n + m);
  return {d, kolmogorov_survival(std::sqrt(ne) * d), x.size() + y.size()};
}

MeanEstimate mean_estimate(std::span<const double> values) {
  MeanEstimate e;
  e.n = values.size();
  if (values.empty()) return e;
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.stderr_ = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

bool TestResult::pass() const {
  switch (compare) {
    case Compare::less: return value < threshold;
    case Compare::less_equal: return value <= threshold;
    case Compare::greater: return value > threshold;
    case Compare::greater_equal: return value >= threshold;
  }
  return false;
}

Summary summarize(std::span<const ReplicaMetrics> replicas, int flag_above) {
  Summary out;
  if (replicas.empty()) return out;
  for (std::size_t r = 1; r < replicas.size(); ++r) {
    if (replicas[r].size() != replicas[0].size() ||
        !std::equal(replicas[r].begin(), replicas[r].end(), replicas[0].begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
      throw std::invalid_argument("replica " + std::to_string(r) + " has a different metric schema");
    }
  }
  for (const auto& [name, _] : replicas[0]) {
    std::vector<double> v;
    v.reserve(replicas.size());
    for (const auto& rep : replicas) v.push_back(rep.at(name));
    const MeanEstimate e = mean_estimate(v);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    out.metrics[name] = MetricSummary{e.mean, e.stderr_, *lo, *hi, e.n};
  }
  if (replicas[0].count("zeta_sup")) {
    for (std::size_t r = 0; r < replicas.size(); ++r) {
      const int z = static_cast<int>(std::lround(replicas[r].at("zeta_sup")));
      ++out.zeta_histogram[z];
      if (z > flag_above) out.flagged.emplace_back(r, z);
    }
  }
  return out;
}

std::string summary_csv(const Summary& summary) {
  std::ostringstream os;
  os << "metric,mean,stderr,min,max,n\n";
  for (const auto& [name, m] : summary.metrics) {
    os << name << ',' << format_double(m.mean) << ',' << format_double(m.stderr_) << ','
       << format_double(m.min) << ',' << format_double(m.max) << ',' << m.n << '\n';
  }
  if (!summary.zeta_histogram.empty()) {
    os << "\nzeta_sup,count\n";
    for (const auto& [z, c] : summary.zeta_histogram) os << z << ',' << c << '\n';
  }
  return os.str();
}

}  // namespace hitspde
