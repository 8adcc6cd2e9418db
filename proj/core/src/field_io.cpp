#include "hitspde/field_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <istream>

namespace hitspde {
namespace {

static_assert(std::endian::native == std::endian::little, "field files are little-endian");

constexpr std::array<char, 8> kMagic{'S', 'P', 'D', 'E', '1', '\0', '\0', '\0'};
constexpr std::uint32_t kFlagEta = 1u;
constexpr std::uint32_t kFlagWindow = 2u;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated field file header");
  return v;
}

void put_block(std::ostream& out, const std::vector<double>& data) {
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

void get_block(std::istream& in, std::vector<double>& data) {
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw IoError("truncated field file body");
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_field_binary(std::ostream& out, const FieldPath& path, const std::optional<WindowMeta>& window) {
  const GridSpec& g = path.grid;
  out.write(kMagic.data(), kMagic.size());
  put(out, g.space().lo);
  put(out, g.space().hi);
  put(out, g.horizon());
  put<std::int32_t>(out, g.nx());
  put<std::int32_t>(out, g.nt());
  put<std::int32_t>(out, path.dim);
  std::uint32_t flags = 0;
  if (path.eta) flags |= kFlagEta;
  if (window) flags |= kFlagWindow;
  put(out, flags);
  if (window) {
    put(out, window->half_width);
    put(out, window->margin);
  }
  put_block(out, path.values);
  if (path.eta) put_block(out, *path.eta);
  if (!out) throw IoError("failed writing field data");
}

FieldFile read_field_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not an SPDE1 field file");
  const auto b = get<double>(in);
  const auto c = get<double>(in);
  const auto horizon = get<double>(in);
  const auto nx = get<std::int32_t>(in);
  const auto nt = get<std::int32_t>(in);
  const auto dim = get<std::int32_t>(in);
  const auto flags = get<std::uint32_t>(in);
  if ((flags & ~(kFlagEta | kFlagWindow)) != 0) throw IoError("unknown field file flags");
  std::optional<WindowMeta> window;
  if (flags & kFlagWindow) {
    WindowMeta w;
    w.half_width = get<double>(in);
    w.margin = get<double>(in);
    window = w;
  }
  GridSpec grid = [&] {
    try {
      return GridSpec(Interval{b, c}, nx, horizon, nt);
    } catch (const std::invalid_argument& e) {
      throw IoError(std::string("invalid grid in field file: ") + e.what());
    }
  }();
  if (dim < 1) throw IoError("invalid dimension in field file");
  FieldFile file{FieldPath(grid, dim), window};
  get_block(in, file.path.values);
  if (flags & kFlagEta) {
    file.path.eta.emplace(static_cast<std::size_t>(nt) * nx, 0.0);
    get_block(in, *file.path.eta);
  }
  return file;
}

void write_field_csv(std::ostream& out, const FieldPath& path) {
  const GridSpec& g = path.grid;
  out << "t,x";
  if (path.dim == 1) {
    out << ",value";
  } else {
    for (int c = 0; c < path.dim; ++c) out << ",value_" << c;
  }
  if (path.eta) out << ",eta";
  out << '\n';
  for (int k = 0; k <= g.nt(); ++k) {
    const std::string t = format_double(g.t(k));
    for (int i = 0; i < g.nodes(); ++i) {
      out << t << ',' << format_double(g.x(i));
      for (int c = 0; c < path.dim; ++c) out << ',' << format_double(path.at(k, i, c));
      if (path.eta) {
        double e = 0.0;
        if (k > 0 && i > 0 && i <= g.nx()) e = (*path.eta)[static_cast<std::size_t>(k - 1) * g.nx() + (i - 1)];
        out << ',' << format_double(e);
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing field CSV");
}

void write_field_binary(const std::filesystem::path& file, const FieldPath& path,
                        const std::optional<WindowMeta>& window) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  try {
    write_field_binary(out, path, window);
  } catch (const IoError& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

FieldFile read_field_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  try {
    return read_field_binary(in);
  } catch (const IoError& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

void write_field_csv(const std::filesystem::path& file, const FieldPath& path) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  try {
    write_field_csv(out, path);
  } catch (const IoError& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

}  // namespace hitspde
