#pragma once

#include "tslam/geom/camera.hpp"
#include "tslam/geom/trajectory.hpp"
#include "tslam/imgproc/image.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace tslam::synth {

struct Wave {
  Vec2 k = Vec2::Zero();  // rad/m in surface coordinates
  double amplitude = 0.0; // Celsius
  double phase = 0.0;
};

/// Axis-aligned patch with smoothstep edges of half-width `softness`.
struct Panel {
  double s0 = 0, t0 = 0, s1 = 0, t1 = 0;
  double delta = 0.0;  // Celsius
  double softness = 0.02;
};

/// Chessboard squares of side `square`; the inner corner (r, c) sits at
/// surface coordinates ((c + 1) * square, (r + 1) * square).
struct Checker {
  double square = 0.1;
  double hot = 35.0;
  double cold = 20.0;
};

/// Celsius over surface coordinates (s, t) in meters.
struct TemperatureField {
  double base = 20.0;
  Vec2 gradient = Vec2::Zero();  // Celsius per meter
  std::vector<Wave> waves;
  std::vector<Panel> panels;
  std::optional<Checker> checker;

 private:
  double bin_ = 0.0;
  double bin_origin_ = 0.0;
  std::size_t indexed_ = 0;
  std::vector<std::vector<std::uint32_t>> bins_;

 public:
  [[nodiscard]] double eval(double s, double t) const;
  /// Buckets panels along s; eval falls back to a linear scan if panels
  /// changed since.
  void index_panels(double bin = 0.5);
  /// Bound on |T - base| over the whole surface of the given extent.
  [[nodiscard]] double max_deviation(double length_s, double length_t) const;
};

/// Rectangle {origin + s axis_s + t axis_t : s in [0, length_s], t in [0, length_t]}.
struct Surface {
  Vec3 origin = Vec3::Zero();
  Vec3 axis_s = Vec3::UnitX();
  Vec3 axis_t = Vec3::UnitY();
  double length_s = 1.0;
  double length_t = 1.0;
  TemperatureField field;

  [[nodiscard]] Vec3 normal() const { return axis_s.cross(axis_t); }
};

struct Hit {
  double range = 0.0;  // along the unit ray
  std::size_t surface = 0;
  double s = 0.0;
  double t = 0.0;
};

/// Procedural thermographic scene. Deterministic given its contents.
struct ThermoScene {
  std::vector<Surface> surfaces;
  double background = 10.0;  // Celsius seen by rays that hit nothing
  std::uint64_t seed = 0;

  /// Nearest intersection along a unit direction, ranges in (1e-9, max_range].
  [[nodiscard]] std::optional<Hit> cast(const Vec3& origin, const Vec3& dir,
                                        double max_range = 1e3) const;
  [[nodiscard]] double temperature(const Hit& hit) const;
  /// Throws std::invalid_argument when a field can leave [-40, 550] Celsius.
  void validate() const;
};

/// Smooth random field: `waves` sinusoids with wavelengths in
/// [min_wavelength, max_wavelength] and a total amplitude of `amplitude`.
[[nodiscard]] TemperatureField random_field(std::mt19937_64& rng, double base, double amplitude,
                                            int waves = 6, double min_wavelength = 0.4,
                                            double max_wavelength = 2.5);

/// Adds roughly `per_square_meter` random hot/cold panels to a surface.
void add_random_panels(TemperatureField& field, std::mt19937_64& rng, double length_s,
                       double length_t, double per_square_meter, double min_delta = 2.5,
                       double max_delta = 5.0, double softness = 0.02);

struct RenderOptions {
  RawToCelsius conv;
  double noise_counts = 0.0;  // Gaussian sensor noise, std in counts
  std::uint64_t noise_seed = 0;
  int supersample = 1;  // s x s rays per pixel, box-averaged
};

/// Ray-cast 14-bit image for camera pose `world_from_camera` (thermal
/// emission only, pixel footprint averaged, rounded and clamped to 14 bits).
[[nodiscard]] ThermalImage render_thermal(const ThermoScene& scene, const Pose& world_from_camera,
                                          const CameraIntrinsics& K, geom::Timestamp stamp = 0,
                                          const RenderOptions& opts = {});

/// Multi-ring scanner geometry in the LiDAR frame (x forward, z up).
struct LidarPattern {
  int rings = 16;
  double min_elevation_deg = -15.0;
  double max_elevation_deg = 15.0;
  double azimuth_step_deg = 0.25;
  double azimuth_min_deg = -180.0;
  double azimuth_max_deg = 180.0;  // exclusive when the sweep is a full turn
  double max_range = 100.0;
  double noise = 0.0;  // Gaussian range noise std, m

  [[nodiscard]] std::size_t azimuth_steps() const;
  [[nodiscard]] std::size_t max_points() const {
    return static_cast<std::size_t>(rings) * azimuth_steps();
  }
};

/// Returns hits in the LiDAR frame, ring-major then azimuth order.
[[nodiscard]] std::vector<Vec3> render_lidar(const ThermoScene& scene, const Pose& world_from_lidar,
                                             const LidarPattern& pattern, std::uint64_t noise_seed = 0);

/// Timestamped poses with linear translation / slerp rotation in between.
class ScriptedTrajectory {
 public:
  ScriptedTrajectory() = default;
  /// Throws std::invalid_argument unless stamps strictly increase.
  explicit ScriptedTrajectory(geom::Trajectory samples);

  /// Clamped to the first/last sample outside the covered interval.
  [[nodiscard]] Pose at(geom::Timestamp t) const;
  [[nodiscard]] const geom::Trajectory& samples() const { return samples_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }

 private:
  geom::Trajectory samples_;
};

/// Camera orientation looking along `forward` with `up` roughly upward
/// (camera x right, y down, z forward).
[[nodiscard]] Mat3 look_rotation(const Vec3& forward, const Vec3& up = Vec3::UnitZ());

}  // namespace tslam::synth
