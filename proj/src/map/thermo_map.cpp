#include "tslam/map/thermo_map.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tslam::map {

std::size_t ThermoMap::accumulate(int id, const Pose& pose, const ThermalImage& image,
                                  std::span<const Vec3> camera_points, const CameraIntrinsics& K,
                                  const RawToCelsius& conv, const geom::ProjectOptions& proj) {
  poses_[id] = pose;
  return accumulate_relative(id, Pose(), image, camera_points, K, conv, proj);
}

std::size_t ThermoMap::accumulate_relative(int id, const Pose& anchor_from_camera,
                                           const ThermalImage& image,
                                           std::span<const Vec3> camera_points,
                                           const CameraIntrinsics& K, const RawToCelsius& conv,
                                           const geom::ProjectOptions& proj) {
  if (!poses_.contains(id)) {
    throw std::invalid_argument("accumulate: unknown keyframe " + std::to_string(id));
  }
  const FloatImage img = image.to_float();
  std::size_t added = 0;
  for (const Vec3& p : camera_points) {
    const auto u = geom::project(p, K, proj);
    if (!u) continue;
    const auto v = imgproc::sample_bilinear(img, *u);
    if (!v) continue;
    const auto raw = static_cast<std::uint16_t>(std::lround(*v));
    local_.push_back({anchor_from_camera * p, conv.to_celsius(*v), raw, id});
    ++added;
  }
  return added;
}

void ThermoMap::reanchor(const std::map<int, Pose>& corrected) {
  for (const auto& [id, pose] : poses_) {
    if (!corrected.contains(id)) {
      throw std::invalid_argument("reanchor: missing pose for keyframe " + std::to_string(id));
    }
  }
  for (auto& [id, pose] : poses_) pose = corrected.at(id);
}

std::vector<ThermoPoint> ThermoMap::points() const {
  std::vector<ThermoPoint> out;
  out.reserve(local_.size());
  for (const auto& l : local_) {
    out.push_back({poses_.at(l.keyframe_id) * l.camera, l.temperature, l.raw, l.keyframe_id});
  }
  return out;
}

}  // namespace tslam::map
