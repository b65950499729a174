#pragma once

#include "tslam/geom/se3.hpp"
#include "tslam/synth/scene.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace tslam::test {

inline Vec6 random_twist(std::mt19937_64& rng, double max_angle, double max_translation) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec3 axis(unit(rng), unit(rng), unit(rng));
  while (axis.norm() < 1e-3) axis = Vec3(unit(rng), unit(rng), unit(rng));
  const double angle = max_angle * 0.5 * (unit(rng) + 1.0);
  Vec6 xi;
  xi << axis.normalized() * angle, Vec3(unit(rng), unit(rng), unit(rng)) * max_translation;
  return xi;
}

inline Pose random_pose(std::mt19937_64& rng, double max_angle = 3.0, double max_translation = 5.0) {
  return geom::exp(random_twist(rng, max_angle, max_translation));
}

inline double max_abs_diff(const Pose& a, const Pose& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tslam_" + name + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Textured wall at z = `distance` in front of the world origin, seen by a
/// camera looking down +z.
struct WallScene {
  synth::ThermoScene scene;
  CameraIntrinsics K{160.0, 160.0, 159.5, 127.5, 320, 256};
  double distance = 3.0;

  explicit WallScene(std::uint64_t seed, double distance_m = 3.0) : distance(distance_m) {
    std::mt19937_64 rng(seed);
    synth::Surface wall;
    wall.origin = Vec3(-6.0, -4.0, distance);
    wall.length_s = 12.0;
    wall.length_t = 8.0;
    wall.field = synth::random_field(rng, 20.0, 3.0);
    synth::add_random_panels(wall.field, rng, wall.length_s, wall.length_t, 1.0);
    scene.surfaces.push_back(wall);
    scene.seed = seed;
  }

  [[nodiscard]] ThermalImage render(const Pose& world_from_camera, geom::Timestamp stamp = 0,
                                    const synth::RenderOptions& opts = {}) const {
    return synth::render_thermal(scene, world_from_camera, K, stamp, opts);
  }

  /// Wall points on a jittered pixel grid (subpixel positions, like LiDAR
  /// returns), expressed in the camera frame.
  [[nodiscard]] std::vector<Vec3> points(const Pose& world_from_camera, int stride = 4) const {
    std::vector<Vec3> out;
    std::mt19937_64 rng(scene.seed + 101);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    const Mat3& R = world_from_camera.rotation();
    const Vec3& c = world_from_camera.translation();
    const Pose camera_from_world = world_from_camera.inverse();
    for (int v = 0; v < K.height; v += stride) {
      for (int u = 0; u < K.width; u += stride) {
        const double x = u + jitter(rng) * stride, y = v + jitter(rng) * stride;
        const Vec3 dir = (R * Vec3((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0)).normalized();
        const auto hit = scene.cast(c, dir);
        if (hit) out.push_back(camera_from_world * (c + hit->range * dir));
      }
    }
    return out;
  }
};

}  // namespace tslam::test
