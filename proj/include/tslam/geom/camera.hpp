#pragma once

#include "tslam/geom/se3.hpp"

#include <optional>

namespace tslam::geom {

/// Pinhole intrinsics, pixel units. Pixel centers at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws std::invalid_argument when fx/fy are not positive or the
  /// principal point lies outside the image.
  void validate() const;

  /// Intrinsics of pyramid level `level` (2x2 box downsampling per level).
  [[nodiscard]] CameraIntrinsics at_level(int level) const;
};

struct ProjectOptions {
  double z_min = 0.1;
  /// Pixels kept away from the image edge.
  double border = 0.0;
};

/// Pinhole projection; std::nullopt when behind z_min or outside the image.
[[nodiscard]] std::optional<Vec2> project(const Vec3& p, const CameraIntrinsics& K,
                                          const ProjectOptions& opts = {});

/// Projection without visibility checks (z must be non-zero).
[[nodiscard]] inline Vec2 project_unchecked(const Vec3& p, const CameraIntrinsics& K) {
  return {p.x() * K.fx / p.z() + K.cx, p.y() * K.fy / p.z() + K.cy};
}

/// Inverse projection. Throws std::invalid_argument for depth <= 0.
[[nodiscard]] Vec3 unproject(const Vec2& u, double depth, const CameraIntrinsics& K);

[[nodiscard]] bool in_image(const Vec2& u, const CameraIntrinsics& K, double border = 0.0);

}  // namespace tslam::geom

namespace tslam {
using geom::CameraIntrinsics;
}
