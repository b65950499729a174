#pragma once

#include "tslam/geom/se3.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace tslam::calib {

/// Thrown when the input geometry cannot determine the requested quantity.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plane {p : n.p + d = 0} with its supporting points.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::vector<Vec3> inliers;

  [[nodiscard]] double signed_distance(const Vec3& p) const { return normal.dot(p) + d; }

  /// Flips (n, d) so the normal points toward the sensor origin (d > 0).
  void orient_toward_origin() {
    if (d < 0.0) {
      normal = -normal;
      d = -d;
    }
  }
};

/// Total least-squares plane through the points (smallest eigenvector of the
/// centered covariance), oriented toward the origin. Throws
/// DegenerateGeometry for fewer than 3 points or a rank-deficient spread.
[[nodiscard]] PlaneModel fit_plane(std::span<const Vec3> points);

struct RansacOptions {
  double threshold = 0.02;  // m, point-to-plane
  int iterations = 500;
  std::size_t min_inliers = 20;
  std::uint64_t seed = 1;
};

/// RANSAC plane followed by a least-squares refit on the inliers. Returns
/// std::nullopt when no model reaches min_inliers or the inliers are
/// degenerate (e.g. collinear). Ties between trials go to the earliest.
[[nodiscard]] std::optional<PlaneModel> ransac_plane(std::span<const Vec3> points,
                                                     const RansacOptions& opts = {});

}  // namespace tslam::calib
