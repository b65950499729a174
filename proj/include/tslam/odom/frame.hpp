#pragma once

#include "tslam/geom/camera.hpp"
#include "tslam/imgproc/image.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace tslam::odom {

/// Sparse residual pattern around each projected point.
struct PatchPattern {
  std::vector<Eigen::Vector2i> offsets;

  /// Center plus 7 spread offsets within radius 2.
  [[nodiscard]] static PatchPattern sparse8();
  [[nodiscard]] static PatchPattern single() { return PatchPattern{{Eigen::Vector2i(0, 0)}}; }

  /// Throws std::invalid_argument unless (0,0) is present and every offset
  /// lies within radius 3.
  void validate() const;
  [[nodiscard]] std::size_t size() const { return offsets.size(); }
};

struct FrameOptions {
  int pyramid_levels = 4;
  std::size_t max_points = 1500;
  int bucket_size = 16;     // px, level 0
  double border = 4.0;      // px kept clear at level 0
  double z_min = 0.1;
  PatchPattern pattern = PatchPattern::sparse8();
};

/// Image pyramid plus camera-frame sparse points and their reference samples.
class Frame {
 public:
  Frame() = default;

  /// Keeps only points that project inside the image (with border), then
  /// bucket-samples down to max_points preferring strong gradients.
  Frame(ThermalImage image, std::span<const Vec3> camera_points, const CameraIntrinsics& K,
        const FrameOptions& opts = {});

  [[nodiscard]] const ThermalImage& image() const { return image_; }
  [[nodiscard]] const Pyramid& pyramid() const { return pyramid_; }
  [[nodiscard]] const std::vector<Vec3>& points() const { return points_; }
  [[nodiscard]] const CameraIntrinsics& intrinsics() const { return K_; }
  [[nodiscard]] const PatchPattern& pattern() const { return pattern_; }
  [[nodiscard]] geom::Timestamp stamp() const { return image_.stamp; }

  /// Reference sample of point i, pattern offset k at `level`; NaN when the
  /// sample falls outside that level.
  [[nodiscard]] float reference(std::size_t level, std::size_t point, std::size_t k) const {
    return reference_[level][point * pattern_.size() + k];
  }

  Pose pose;  // world frame

 private:
  ThermalImage image_;
  Pyramid pyramid_;
  CameraIntrinsics K_;
  PatchPattern pattern_;
  std::vector<Vec3> points_;
  std::vector<std::vector<float>> reference_;
};

}  // namespace tslam::odom
