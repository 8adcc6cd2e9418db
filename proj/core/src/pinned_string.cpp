#include "hitspde/pinned_string.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hitspde/quadrature.hpp"

namespace hitspde {
namespace {

int lattice_multiple(double value, double step, const char* what) {
  const double ratio = value / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw std::domain_error(std::string(what) + " must be a multiple of the lattice step");
  }
  return static_cast<int>(rounded);
}

GridSpec window_grid_of(int half_index, double dx, int nt, double dt) {
  if (half_index < 2) throw std::domain_error("transformed window has fewer than three nodes");
  if (nt < 1) throw std::domain_error("transformed field has no time steps");
  return GridSpec(Interval{-half_index * dx, half_index * dx}, 2 * half_index - 1, nt * dt, nt);
}

StringField make_field(const StringField& src, int half_index, double dx, int nt, double dt) {
  StringSpec spec = src.spec;
  spec.half_width = half_index * dx;
  spec.dx = dx;
  spec.dt = dt;
  spec.nt = nt;
  return StringField{spec, FieldPath(window_grid_of(half_index, dx, nt, dt), src.spec.d), src.seed};
}

/// Symmetric taps whose lattice autocorrelation has the given spectrum on
/// [0, pi]. The spectra used here are kinked at pi, so taps decay like 1/j^2.
constexpr int kSpectralNodes = 8192;

/// (1/pi) int_0^pi f(theta) cos(j theta) by the trapezoid rule.
double cosine_coefficient(std::span<const double> f, int j) {
  const int n = static_cast<int>(f.size()) - 1;
  double acc = 0.5 * (f[0] + f[n] * (j % 2 == 0 ? 1.0 : -1.0));
  for (int m = 1; m < n; ++m) acc += f[m] * std::cos(std::numbers::pi * m * j / n);
  return acc / n;
}

template <class F>
std::vector<double> sample_spectrum(F spectrum, bool root) {
  std::vector<double> out(kSpectralNodes + 1);
  for (int m = 0; m <= kSpectralNodes; ++m) {
    const double v = spectrum(std::numbers::pi * m / kSpectralNodes);
    out[m] = root ? std::sqrt(std::max(v, 0.0)) : v;
  }
  return out;
}

template <class F>
std::vector<double> spectral_root(F spectrum, int& half_width) {
  const auto root = sample_spectrum(spectrum, true);
  std::vector<double> half{cosine_coefficient(root, 0)};
  for (int j = 1; j < 256; ++j) {
    const double r = cosine_coefficient(root, j);
    if (std::abs(r) < 5e-5 * std::abs(half[0])) break;
    half.push_back(r);
  }
  half_width = static_cast<int>(half.size()) - 1;
  std::vector<double> taps(2 * half_width + 1);
  for (int j = -half_width; j <= half_width; ++j) taps[j + half_width] = half[std::abs(j)];
  return taps;
}

}  // namespace

int StringSpec::window_index() const { return lattice_multiple(half_width, dx, "window half-width"); }

int StringSpec::lattice_index() const {
  return static_cast<int>(std::ceil((half_width + margin) / dx - 1e-9));
}

void StringSpec::validate() const {
  if (d < 1) throw std::invalid_argument("string dimension must be >= 1");
  if (!(dx > 0.0) || !(dt > 0.0) || nt < 1) throw std::invalid_argument("string grid must be positive");
  if (!(half_width > 0.0)) throw std::invalid_argument("window half-width must be positive");
  (void)window_index();
  if (window_index() < 2) throw std::invalid_argument("window must contain at least five nodes");
  if (dt < dx * dx * (1.0 - 1e-12)) throw std::invalid_argument("string lattice requires dt >= dx^2");
  if (margin < 10.0 * std::sqrt(horizon()) * (1.0 - 1e-12)) {
    throw std::invalid_argument("buffer margin must be >= 10 sqrt(T)");
  }
}

GridSpec StringSpec::window_grid() const {
  const int jw = window_index();
  return GridSpec(Interval{-jw * dx, jw * dx}, 2 * jw - 1, horizon(), nt);
}

StringSpec StringSpec::unit(int d, double half_width, double horizon, double dx, double margin) {
  StringSpec s;
  s.d = d;
  s.half_width = half_width;
  s.dx = dx;
  s.dt = dx * dx;
  s.nt = static_cast<int>(std::llround(horizon / s.dt));
  s.margin = margin > 0.0 ? margin : 10.0 * std::sqrt(s.horizon());
  s.validate();
  return s;
}

std::vector<double> sample_initial_string(const StringSpec& spec, Rng& rng) {
  spec.validate();
  const int J = spec.lattice_index();
  const int d = spec.d;
  const auto nodes = static_cast<std::size_t>(2 * J + 1);
  std::vector<double> out(nodes * d, 0.0);
  const double step = std::sqrt(spec.dx);
  for (int c = 0; c < d; ++c) {
    for (int j = J + 1; j <= 2 * J; ++j) out[j * d + c] = out[(j - 1) * d + c] + step * standard_normal(rng);
    for (int j = J - 1; j >= 0; --j) out[j * d + c] = out[(j + 1) * d + c] + step * standard_normal(rng);
  }
  return out;
}

double string_innovation_covariance(double dt, double h) {
  if (!(dt > 0.0)) throw std::domain_error("innovation covariance requires dt > 0");
  h = std::abs(h);
  const double z = h / (2.0 * std::sqrt(dt));
  if (z <= 2.0) {
    return std::sqrt(dt / std::numbers::pi) * std::exp(-z * z) - 0.5 * h * std::erfc(z);
  }
  // The closed form cancels badly in the tail.
  return integrate(
      [&](double s) { return s > 0.0 ? std::exp(-h * h / (4.0 * s)) / std::sqrt(4.0 * std::numbers::pi * s) : 0.0; },
      0.0, dt, 1e-13);
}

StringSimulator::StringSimulator(const StringSpec& spec) : spec_(spec) {
  spec.validate();
  const double dx = spec.dx;
  const double dt = spec.dt;

  heat_half_ = static_cast<int>(std::ceil(6.0 * std::sqrt(dt) / dx));
  heat_.resize(2 * heat_half_ + 1);
  double mass = 0.0;
  for (int j = -heat_half_; j <= heat_half_; ++j) {
    const double x = j * dx;
    heat_[j + heat_half_] = std::exp(-x * x / (2.0 * dt));
    mass += heat_[j + heat_half_];
  }
  for (auto& w : heat_) w /= mass;

  // Per-step spectra in lattice frequency theta (unit-variance cells):
  // band-limited innovation and stationary sub-lattice field.
  const double ratio = dt / (dx * dx);
  auto innovation = [&](double th) {
    if (th < 1e-4) return dx * ratio * (1.0 - 0.5 * ratio * th * th);
    return -dx * std::expm1(-ratio * th * th) / (th * th);
  };
  auto subgrid = [&](double th) {
    if (th < 1e-2) return dx * (1.0 / 12.0 + th * th / 240.0);
    const double s = std::sin(0.5 * th);
    return dx * (1.0 / (4.0 * s * s) - 1.0 / (th * th));
  };
  rho_ = spectral_root(innovation, rho_half_);
  alias_ = spectral_root(subgrid, alias_half_);

  // Walk increments are white with variance dx, so the regression weights
  // are Cov(Q_j, D_{j-n}) / dx = (c(n-1) - c(n)) / dx, c the autocovariance of Q.
  const auto a = sample_spectrum(subgrid, false);
  std::vector<double> cq;
  for (int n = 0; n <= 257; ++n) cq.push_back(cosine_coefficient(a, n));
  auto weight = [&](int n) { return (cq[std::abs(n - 1)] - cq[std::abs(n)]) / dx; };
  const double w0 = std::abs(weight(0));
  split_half_ = 1;
  for (int n = 2; n < 256; ++n) {
    if (std::abs(weight(n)) < 1e-5 * w0 && std::abs(weight(1 - n)) < 1e-5 * w0) break;
    split_half_ = n;
  }
  split_.resize(2 * split_half_ + 1);
  for (int n = -split_half_; n <= split_half_; ++n) split_[n + split_half_] = weight(n);
  residual_ = spectral_root(
      [&](double th) {
        const double sinc = th < 1e-4 ? 1.0 : std::sin(0.5 * th) / (0.5 * th);
        return subgrid(th) * sinc * sinc;
      },
      residual_half_);
}

void StringSimulator::run(std::span<const double> initial, Rng& noise_rng, bool with_noise,
                          const RowObserver& observer) const {
  const int J = spec_.lattice_index();
  const int jw = spec_.window_index();
  const int d = spec_.d;
  const int nodes = 2 * J + 1;
  if (initial.size() != static_cast<std::size_t>(nodes) * d) {
    throw std::invalid_argument("string initial data does not match the lattice");
  }
  // Component-major working copies.
  std::vector<std::vector<double>> state(d, std::vector<double>(nodes));
  for (int c = 0; c < d; ++c) {
    for (int j = 0; j < nodes; ++j) state[c][j] = initial[static_cast<std::size_t>(j) * d + c];
  }
  const int wn = 2 * jw + 1;
  std::vector<double> window(static_cast<std::size_t>(wn) * d);
  for (int i = 0; i < wn; ++i) {
    for (int c = 0; c < d; ++c) window[static_cast<std::size_t>(i) * d + c] = state[c][J - jw + i];
  }
  observer(0, window);

  std::vector<double> next(nodes);
  std::vector<double> eta(nodes + 2 * residual_half_, 0.0);
  for (int c = 0; c < d; ++c) {
    auto& u = state[c];
    for (int j = 0; j < nodes; ++j) {
      double q = 0.0;
      for (int n = -split_half_; n <= split_half_; ++n) {
        const int l = j - n;
        if (l >= 0 && l + 1 < nodes) q += split_[n + split_half_] * (u[l + 1] - u[l]);
      }
      next[j] = q;
    }
    if (with_noise) {
      for (auto& v : eta) v = standard_normal(noise_rng);
      for (int j = 0; j < nodes; ++j) {
        double acc = 0.0;
        for (int m = 0; m <= 2 * residual_half_; ++m) acc += residual_[m] * eta[j + m];
        next[j] += acc;
      }
    }
    for (int j = 0; j < nodes; ++j) u[j] -= next[j];
  }

  std::vector<double> xi(nodes + 2 * rho_half_, 0.0);
  std::vector<double> zeta(wn + 2 * alias_half_, 0.0);
  for (int k = 0; k < spec_.nt; ++k) {
    for (int c = 0; c < d; ++c) {
      const auto& u = state[c];
      for (int j = 0; j < nodes; ++j) {
        // Values beyond the lattice are taken as 0; the margin keeps this
        // out of the analysis window.
        const int lo = std::max(-heat_half_, -j);
        const int hi = std::min(heat_half_, nodes - 1 - j);
        double acc = 0.0;
        for (int m = lo; m <= hi; ++m) acc += heat_[m + heat_half_] * u[j + m];
        next[j] = acc;
      }
      if (with_noise) {
        for (auto& v : xi) v = standard_normal(noise_rng);
        for (int j = 0; j < nodes; ++j) {
          double acc = 0.0;
          for (int m = 0; m <= 2 * rho_half_; ++m) acc += rho_[m] * xi[j + m];
          next[j] += acc;
        }
      }
      state[c].swap(next);
      for (int i = 0; i < wn; ++i) window[static_cast<std::size_t>(i) * d + c] = state[c][J - jw + i];
      if (with_noise) {
        for (auto& v : zeta) v = standard_normal(noise_rng);
        for (int i = 0; i < wn; ++i) {
          double acc = 0.0;
          for (int m = 0; m <= 2 * alias_half_; ++m) acc += alias_[m] * zeta[i + m];
          window[static_cast<std::size_t>(i) * d + c] += acc;
        }
      }
    }
    observer(k + 1, window);
  }
}

void StringSimulator::run(std::uint64_t seed, const RowObserver& observer) const {
  Rng init_rng(substream_seed(seed, 0));
  Rng noise_rng(substream_seed(seed, 1));
  const auto initial = sample_initial_string(spec_, init_rng);
  run(initial, noise_rng, true, observer);
}

StringField StringSimulator::simulate(std::uint64_t seed) const {
  StringField field{spec_, FieldPath(spec_.window_grid(), spec_.d), seed};
  run(seed, [&](int k, std::span<const double> row) { std::copy(row.begin(), row.end(), field.path.row(k).begin()); });
  return field;
}

StringField simulate_string(const StringSpec& spec, std::uint64_t seed) {
  return StringSimulator(spec).simulate(seed);
}

StringField scaling_transform(const StringField& field, double L) {
  if (!(L > 0.0)) throw std::domain_error("scaling factor must be positive");
  const StringSpec& s = field.spec;
  const int jw = s.window_index();
  const int d = s.d;
  const double l2 = L * L;
  const double p = std::round(l2);
  const double q = std::round(1.0 / l2);
  if (p >= 1.0 && std::abs(l2 - p) <= 1e-9 * p) {
    const int ip = static_cast<int>(p);
    const int half = jw / ip;
    const int nt = s.nt / (ip * ip);
    StringField out = make_field(field, half, s.dx, nt, s.dt);
    for (int k = 0; k <= nt; ++k) {
      auto row = out.path.row(k);
      for (int j = -half; j <= half; ++j) {
        for (int c = 0; c < d; ++c) {
          row[static_cast<std::size_t>(j + half) * d + c] = field.path.at(ip * ip * k, jw + ip * j, c) / L;
        }
      }
    }
    return out;
  }
  if (q >= 1.0 && std::abs(1.0 / l2 - q) <= 1e-9 * q) {
    const double iq = q;
    StringField out = make_field(field, jw, s.dx * iq, s.nt, s.dt * iq * iq);
    const double scale = 1.0 / L;
    for (std::size_t i = 0; i < out.path.values.size(); ++i) out.path.values[i] = field.path.values[i] * scale;
    return out;
  }
  throw std::domain_error("scaling factor must make L^2 or 1/L^2 an integer");
}

StringField translate_and_reverse(const StringField& field, double t0, double x0, StringTransform mode) {
  const StringSpec& s = field.spec;
  const int jw = s.window_index();
  const int d = s.d;
  if (mode == StringTransform::reverse) {
    const int kt = t0 <= 0.0 ? s.nt : lattice_multiple(t0, s.dt, "reversal time");
    if (kt < 1 || kt > s.nt) throw std::domain_error("reversal time outside the simulated horizon");
    StringField out = make_field(field, jw, s.dx, kt, s.dt);
    for (int k = 0; k <= kt; ++k) {
      auto row = out.path.row(k);
      for (int i = 0; i <= 2 * jw; ++i) {
        for (int c = 0; c < d; ++c) {
          row[static_cast<std::size_t>(i) * d + c] = field.path.at(kt - k, i, c) - field.path.at(kt, jw, c);
        }
      }
    }
    return out;
  }
  const int k0 = lattice_multiple(t0, s.dt, "time shift");
  const int j0 = lattice_multiple(x0, s.dx, "space shift");
  if (k0 < 0 || k0 >= s.nt) throw std::domain_error("time shift outside the simulated horizon");
  const int half = jw - std::abs(j0);
  const int nt = s.nt - k0;
  StringField out = make_field(field, half, s.dx, nt, s.dt);
  const int sign = mode == StringTransform::translate ? 1 : -1;
  for (int k = 0; k <= nt; ++k) {
    auto row = out.path.row(k);
    for (int j = -half; j <= half; ++j) {
      for (int c = 0; c < d; ++c) {
        row[static_cast<std::size_t>(j + half) * d + c] =
            field.path.at(k0 + k, jw + j0 + sign * j, c) - field.path.at(k0, jw + j0, c);
      }
    }
  }
  return out;
}

double string_variogram(double tau, double h) {
  // E|h + sqrt(tau) Z|
  tau = std::abs(tau);
  h = std::abs(h);
  if (tau == 0.0) return h;
  const double s = std::sqrt(tau);
  return h * std::erf(h / (std::numbers::sqrt2 * s)) +
         std::sqrt(2.0 / std::numbers::pi) * s * std::exp(-h * h / (2.0 * tau));
}

double string_covariance(double t, double x, double s, double y) {
  return 0.5 * (string_variogram(t, x) + string_variogram(s, y) - string_variogram(t - s, x - y));
}

}  // namespace hitspde
