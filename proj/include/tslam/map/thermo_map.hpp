#pragma once

#include "tslam/geom/camera.hpp"
#include "tslam/imgproc/image.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace tslam::map {

struct ThermoPoint {
  Vec3 position = Vec3::Zero();  // world, m
  double temperature = 0.0;      // Celsius
  std::uint16_t raw = 0;
  int keyframe_id = 0;
};

/// Temperature-attributed points anchored to keyframes. Positions are kept
/// in the anchor's camera frame; world positions follow the anchor pose.
class ThermoMap {
 public:
  /// Samples `image` at each in-view camera-frame point and anchors the
  /// results to keyframe `id` at `pose`. Returns the number of points added.
  std::size_t accumulate(int id, const Pose& pose, const ThermalImage& image,
                         std::span<const Vec3> camera_points, const CameraIntrinsics& K,
                         const RawToCelsius& conv = {}, const geom::ProjectOptions& proj = {});
  /// Same, for points seen from another camera pose (`anchor_from_camera`)
  /// and stored under the existing anchor `id`. Throws std::invalid_argument
  /// for an unknown id.
  std::size_t accumulate_relative(int id, const Pose& anchor_from_camera, const ThermalImage& image,
                                  std::span<const Vec3> camera_points, const CameraIntrinsics& K,
                                  const RawToCelsius& conv = {},
                                  const geom::ProjectOptions& proj = {});

  /// Replaces anchor poses. Throws std::invalid_argument when an anchor id
  /// present in the map is missing from `corrected`.
  void reanchor(const std::map<int, Pose>& corrected);

  [[nodiscard]] std::vector<ThermoPoint> points() const;
  [[nodiscard]] const std::map<int, Pose>& trajectory() const { return poses_; }
  [[nodiscard]] std::size_t size() const { return local_.size(); }

 private:
  struct Local {
    Vec3 camera;
    double temperature;
    std::uint16_t raw;
    int keyframe_id;
  };
  std::vector<Local> local_;
  std::map<int, Pose> poses_;
};

}  // namespace tslam::map
