#pragma once

#include "tslam/imgproc/image.hpp"

#include <filesystem>
#include <iosfwd>

namespace tslam::imgproc {

/// Binary PGM ("P5"). 16-bit samples are big-endian; maxval up to 65535.
/// Values above 16383 are rejected for thermal images.
[[nodiscard]] ThermalImage read_thermal_pgm(std::istream& is, Timestamp stamp = 0);
[[nodiscard]] ThermalImage read_thermal_pgm(const std::filesystem::path& path);

/// Writes maxval 16383, big-endian samples.
void write_thermal_pgm(std::ostream& os, const ThermalImage& img);
void write_thermal_pgm(const std::filesystem::path& path, const ThermalImage& img);

void write_pgm8(const std::filesystem::path& path, const Image8& img);

/// `<timestamp_ns>.pgm` -> timestamp; throws when the stem is not an integer.
[[nodiscard]] Timestamp stamp_from_filename(const std::filesystem::path& path);

}  // namespace tslam::imgproc
