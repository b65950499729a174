#pragma once

#include "tslam/calib/extrinsic.hpp"
#include "tslam/loop/alignment.hpp"
#include "tslam/loop/detector.hpp"
#include "tslam/loop/features.hpp"
#include "tslam/loop/pose_graph.hpp"
#include "tslam/map/ply.hpp"
#include "tslam/odom/frame.hpp"
#include "tslam/odom/tracker.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tslam::cli {

/// Every tunable of `run`. Serialized as flat "key = value" lines; see
/// config_keys() for the names.
struct PipelineConfig {
  std::uint64_t seed = 1;
  bool deterministic = false;
  double sync_tolerance_ms = 5.0;
  RawToCelsius conv;

  odom::FrameOptions frame;
  odom::TrackOptions track;
  bool refine = true;
  std::size_t window_size = 5;
  odom::RefineOptions refine_options;
  odom::KeyframePolicy keyframes;
  /// Yaw error added to every keyframe-to-keyframe motion (drift tests).
  double inject_yaw_drift_deg = 0.0;

  bool loop_enabled = true;
  std::string vocabulary;  // empty: <dataset>/vocabulary.bin
  double rescale_low = 0.0;   // Celsius, 8-bit window for features
  double rescale_high = 30.0;
  loop::FeatureOptions features;
  loop::LoopDetectorOptions detector;
  loop::AffineAlignOptions affine;
  double cross_check_eps = 0.05;
  double identity_init_distance = 5.0;  // m
  loop::RansacPoseOptions ransac;
  loop::PoseGraphOptions pose_graph;

  bool map_all_frames = false;
  double map_voxel = 0.05;  // m, export only
  map::PlyFormat map_format = map::PlyFormat::ascii;
  double colormap_low = 0.0;
  double colormap_high = 30.0;

  calib::CalibrationOptions calibration;  // `calibrate` only
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Keys in the order write_pipeline_config emits them.
[[nodiscard]] std::vector<std::string> config_keys();

/// Applies one key. Throws ConfigError for unknown keys or bad values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
[[nodiscard]] std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

/// Defaults overridden by the stream's entries, then validated. Errors
/// carry the line number.
[[nodiscard]] PipelineConfig parse_pipeline_config(std::istream& is);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Full resolved config, one key per line; parses back to the same values.
void write_pipeline_config(std::ostream& os, const PipelineConfig& cfg);

/// Range and consistency checks. Throws ConfigError.
void validate(const PipelineConfig& cfg);

}  // namespace tslam::cli
