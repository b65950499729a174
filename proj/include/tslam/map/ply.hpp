#pragma once

#include "tslam/map/thermo_map.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tslam::map {

enum class PlyFormat { ascii, binary_little_endian };

struct PlyOptions {
  PlyFormat format = PlyFormat::ascii;
  /// Adds red/green/blue from a diverging colormap over [t_low, t_high].
  bool colormap = false;
  double t_low = 0.0;
  double t_high = 30.0;
};

/// Row as stored: float32 x y z temperature, uint16 raw, optional rgb.
struct PlyVertex {
  float x = 0, y = 0, z = 0;
  float temperature = 0;
  std::uint16_t raw = 0;
  std::optional<std::array<std::uint8_t, 3>> color;
};

/// Blue-white-red diverging map; values outside the range saturate.
[[nodiscard]] std::array<std::uint8_t, 3> diverging_color(double t, double t_low, double t_high);

/// Voxel-grid reduction: one point per occupied voxel (centroid position,
/// mean temperature and raw), voxels ordered by first occurrence.
/// voxel <= 0 returns the input unchanged.
[[nodiscard]] std::vector<ThermoPoint> voxel_filter(const std::vector<ThermoPoint>& points,
                                                    double voxel);

void write_ply(std::ostream& os, const std::vector<ThermoPoint>& points, const PlyOptions& opts = {});
void write_ply(const std::filesystem::path& path, const std::vector<ThermoPoint>& points,
               const PlyOptions& opts = {});

/// Reads files produced by write_ply (either encoding, with or without
/// color). Throws std::runtime_error on malformed input.
[[nodiscard]] std::vector<PlyVertex> read_ply(std::istream& is);
[[nodiscard]] std::vector<PlyVertex> read_ply(const std::filesystem::path& path);

}  // namespace tslam::map
