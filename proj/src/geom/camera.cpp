#include "tslam/geom/camera.hpp"

#include <stdexcept>
#include <string>

namespace tslam::geom {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("intrinsics: image size must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw std::invalid_argument("intrinsics: principal point (" + std::to_string(cx) +
                                ", " + std::to_string(cy) + ") outside image");
  }
}

CameraIntrinsics CameraIntrinsics::at_level(int level) const {
  CameraIntrinsics k = *this;
  for (int l = 0; l < level; ++l) {
    k.fx *= 0.5;
    k.fy *= 0.5;
    k.cx = (k.cx + 0.5) * 0.5 - 0.5;
    k.cy = (k.cy + 0.5) * 0.5 - 0.5;
    k.width /= 2;
    k.height /= 2;
  }
  return k;
}

bool in_image(const Vec2& u, const CameraIntrinsics& K, double border) {
  return u.x() >= border && u.y() >= border && u.x() <= K.width - 1 - border &&
         u.y() <= K.height - 1 - border;
}

std::optional<Vec2> project(const Vec3& p, const CameraIntrinsics& K,
                            const ProjectOptions& opts) {
  if (!(p.z() > opts.z_min)) return std::nullopt;
  const Vec2 u = project_unchecked(p, K);
  if (!in_image(u, K, opts.border)) return std::nullopt;
  return u;
}

Vec3 unproject(const Vec2& u, double depth, const CameraIntrinsics& K) {
  if (!(depth > 0.0)) throw std::invalid_argument("unproject: depth must be positive");
  return {(u.x() - K.cx) / K.fx * depth, (u.y() - K.cy) / K.fy * depth, depth};
}

}  // namespace tslam::geom
