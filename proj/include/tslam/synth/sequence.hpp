#pragma once

#include "tslam/calib/chessboard.hpp"
#include "tslam/synth/scene.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace tslam::synth {

enum class Preset { corridor_loop, tunnel, calib_room };

[[nodiscard]] std::string preset_name(Preset p);
/// Throws std::invalid_argument for unknown names.
[[nodiscard]] Preset parse_preset(const std::string& name);

/// Scene description file: flat "key = value" lines, '#' comments.
/// `preset` selects the defaults; every other key overrides one field.
struct SceneConfig {
  Preset preset = Preset::tunnel;
  std::uint64_t seed = 1;
  int frames = 100;
  double rate_hz = 10.0;
  double speed = 0.1;  // m per frame along the path

  CameraIntrinsics intrinsics{160.0, 160.0, 159.5, 127.5, 320, 256};
  LidarPattern lidar{.azimuth_min_deg = -60.0, .azimuth_max_deg = 60.0};
  RawToCelsius conv;
  double image_noise = 0.0;  // counts
  int image_supersample = 2;  // rays per pixel side

  // Texture
  double texture_amplitude = 3.0;   // Celsius
  double panel_density = 0.6;       // panels per square meter of wall
  double panel_softness = 0.05;     // smoothstep half-width, m

  // Geometry
  double corridor_width = 3.0;
  double corridor_height = 3.0;
  double loop_half_side = 4.5;      // corridor-loop centerline half side
  double loop_corner_radius = 1.0;
  double loop_overlap = 6.0;        // m driven past the start
  double tunnel_length = 30.0;
  double bob_amplitude = 0.02;      // vertical sway, m

  // Calibration room
  calib::BoardGeometry board{6, 8, 0.12};
  double board_distance = 2.0;
  double orbit_azimuth_deg = 20.0;
  double orbit_elevation_deg = 15.0;
  double calib_perturb_deg = 2.0;   // initial-guess error written to calib.txt
  double calib_perturb_m = 0.05;

  // Outputs
  bool vocabulary = true;
  int vocabulary_stride = 4;        // every n-th frame feeds training
  int vocabulary_branching = 10;
  int vocabulary_depth = 4;
};

/// Defaults for a preset (frames, path length and geometry).
[[nodiscard]] SceneConfig preset_config(Preset p);

/// Throws std::invalid_argument with the line number on unknown keys or
/// malformed values.
[[nodiscard]] SceneConfig parse_scene_config(std::istream& is);
[[nodiscard]] SceneConfig load_scene_config(const std::filesystem::path& path);
void write_scene_config(std::ostream& os, const SceneConfig& cfg);

/// LiDAR pose relative to the thermal camera used by every preset.
[[nodiscard]] Pose default_lidar_from_camera();

/// Everything needed to render a dataset.
struct SyntheticSequence {
  ThermoScene scene;
  ScriptedTrajectory trajectory;  // world_from_camera at frame stamps
  CameraIntrinsics intrinsics;
  Pose lidar_from_camera;
  LidarPattern lidar;
  RawToCelsius conv;
  std::optional<calib::BoardGeometry> board;
  Pose world_from_board;  // only meaningful with a board

  [[nodiscard]] Pose world_from_lidar(std::size_t frame) const {
    return trajectory.samples()[frame].pose * lidar_from_camera.inverse();
  }
};

[[nodiscard]] SyntheticSequence build_sequence(const SceneConfig& cfg);

/// One rendered time step.
struct SyntheticFrame {
  ThermalImage image;
  std::vector<Vec3> cloud;  // LiDAR frame
  std::vector<Vec2> corners; // board corners, empty without a board
};

[[nodiscard]] SyntheticFrame render_frame(const SyntheticSequence& seq, std::size_t index,
                                          const SceneConfig& cfg);

/// Writes images/, clouds/, calib.txt, groundtruth.txt, scene.cfg and, when
/// enabled, vocabulary.bin. Output is byte-identical for identical configs.
void generate_dataset(const SceneConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace tslam::synth
