#pragma once

// Field serialization.
//
// Binary layout, little-endian:
//   char[8]  "SPDE1\0\0\0"
//   f64 b, f64 c, f64 T
//   i32 nx, i32 nt, i32 dim, u32 flags   (bit 0: eta block, bit 1: window block)
//   [window block] f64 half_width, f64 margin
//   f64 values[nt + 1][nx + 2][dim]
//   [eta block]    f64 eta[nt][nx]
//
// CSV: header "t,x,value" (dim 1) or "t,x,value_0,...,value_{d-1}", plus ",eta"
// when a reflection measure is present (0 on boundary nodes and at t = 0).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "hitspde/spde_solver.hpp"

namespace hitspde {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WindowMeta {
  double half_width = 0.0;
  double margin = 0.0;
};

struct FieldFile {
  FieldPath path;
  std::optional<WindowMeta> window;
};

void write_field_binary(std::ostream& out, const FieldPath& path,
                        const std::optional<WindowMeta>& window = std::nullopt);
FieldFile read_field_binary(std::istream& in);

void write_field_csv(std::ostream& out, const FieldPath& path);

void write_field_binary(const std::filesystem::path& file, const FieldPath& path,
                        const std::optional<WindowMeta>& window = std::nullopt);
FieldFile read_field_binary(const std::filesystem::path& file);
void write_field_csv(const std::filesystem::path& file, const FieldPath& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace hitspde
