#pragma once

#include "tslam/geom/se3.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tslam::geom {

using Timestamp = std::int64_t;  // nanoseconds

struct StampedPose {
  Timestamp stamp = 0;
  Pose pose;
  /// Optional validity mask (ninth column, 1/0). Defaults to valid.
  bool valid = true;
};

using Trajectory = std::vector<StampedPose>;

/// "seconds.nnnnnnnnn" from integer nanoseconds, exact.
[[nodiscard]] std::string format_seconds(Timestamp ns);
/// Parses seconds with up to 9 decimals into nanoseconds without rounding loss.
[[nodiscard]] Timestamp parse_seconds(const std::string& text);

/// TUM line: "timestamp tx ty tz qx qy qz qw"; invalid samples get a trailing 0.
void write_tum(std::ostream& os, const Trajectory& traj);
void write_tum(const std::filesystem::path& path, const Trajectory& traj);

/// Reads TUM lines; '#' comments and blank lines skipped. An optional
/// ninth column is read as a validity mask. Throws std::runtime_error with
/// the offending line number.
[[nodiscard]] Trajectory read_tum(std::istream& is);
[[nodiscard]] Trajectory read_tum(const std::filesystem::path& path);

}  // namespace tslam::geom
