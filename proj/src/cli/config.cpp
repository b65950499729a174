#include "tslam/cli/config.hpp"

#include "tslam/cli/keyvalue.hpp"

#include <fstream>
#include <climits>
#include <functional>
#include <istream>
#include <ostream>

namespace tslam::cli {

namespace {

void assign(double& dst, const std::string& v) { dst = parse_double(v); }
void assign(bool& dst, const std::string& v) { dst = parse_bool(v); }
void assign(std::string& dst, const std::string& v) { dst = v; }
void assign(std::uint64_t& dst, const std::string& v) { dst = parse_u64(v); }
static_assert(std::is_same_v<std::size_t, std::uint64_t>);
void assign(int& dst, const std::string& v) {
  const long x = parse_long(v);
  if (x < INT_MIN || x > INT_MAX) throw std::invalid_argument("integer out of range");
  dst = static_cast<int>(x);
}
void assign(map::PlyFormat& dst, const std::string& v) {
  if (v == "ascii") {
    dst = map::PlyFormat::ascii;
  } else if (v == "binary") {
    dst = map::PlyFormat::binary_little_endian;
  } else {
    throw std::invalid_argument("expected ascii or binary, got '" + v + "'");
  }
}

std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(map::PlyFormat v) { return v == map::PlyFormat::ascii ? "ascii" : "binary"; }

struct Field {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Access>
Field field(std::string key, Access access) {
  return {std::move(key),
          [access](PipelineConfig& c, const std::string& v) { assign(access(c), v); },
          [access](const PipelineConfig& c) { return show(access(c)); }};
}

#define TSLAM_FIELD(key, member) field(key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TSLAM_FIELD("seed", seed),
      TSLAM_FIELD("deterministic", deterministic),
      TSLAM_FIELD("sync.tolerance_ms", sync_tolerance_ms),
      TSLAM_FIELD("raw.scale", conv.scale),
      TSLAM_FIELD("raw.offset", conv.offset),

      TSLAM_FIELD("frame.pyramid_levels", frame.pyramid_levels),
      TSLAM_FIELD("frame.max_points", frame.max_points),
      TSLAM_FIELD("frame.bucket_size", frame.bucket_size),
      TSLAM_FIELD("frame.border", frame.border),
      TSLAM_FIELD("frame.z_min", frame.z_min),

      TSLAM_FIELD("track.nu", track.align.nu),
      TSLAM_FIELD("track.max_iterations", track.align.max_iterations),
      TSLAM_FIELD("track.min_update", track.align.min_update),
      TSLAM_FIELD("track.min_valid_ratio", track.min_valid_ratio),
      TSLAM_FIELD("track.max_weighted_rms", track.max_weighted_rms),
      TSLAM_FIELD("track.min_points", track.min_points),

      TSLAM_FIELD("refine.enabled", refine),
      TSLAM_FIELD("refine.window_size", window_size),
      TSLAM_FIELD("refine.max_iterations", refine_options.align.max_iterations),
      TSLAM_FIELD("refine.min_update", refine_options.align.min_update),

      TSLAM_FIELD("keyframe.max_translation", keyframes.max_translation),
      TSLAM_FIELD("keyframe.max_rotation_deg", keyframes.max_rotation_deg),
      TSLAM_FIELD("keyframe.min_valid_ratio", keyframes.min_valid_ratio),
      TSLAM_FIELD("odom.inject_yaw_drift_deg", inject_yaw_drift_deg),

      TSLAM_FIELD("loop.enabled", loop_enabled),
      TSLAM_FIELD("loop.vocabulary", vocabulary),
      TSLAM_FIELD("loop.rescale_low", rescale_low),
      TSLAM_FIELD("loop.rescale_high", rescale_high),
      TSLAM_FIELD("loop.fast_threshold", features.fast_threshold),
      TSLAM_FIELD("loop.max_features", features.max_features),
      TSLAM_FIELD("loop.min_features", features.min_features),
      TSLAM_FIELD("loop.recent_window_s", detector.recent_window_s),
      TSLAM_FIELD("loop.min_eta", detector.min_eta),
      TSLAM_FIELD("loop.min_common_ratio", detector.min_common_ratio),
      TSLAM_FIELD("loop.normalizer_neighbors", detector.normalizer_neighbors),
      TSLAM_FIELD("loop.align_max_iterations", affine.align.max_iterations),
      TSLAM_FIELD("loop.align_min_update", affine.align.min_update),
      TSLAM_FIELD("loop.min_inlier_ratio", affine.min_inlier_ratio),
      TSLAM_FIELD("loop.epsilon", cross_check_eps),
      TSLAM_FIELD("loop.identity_init_distance", identity_init_distance),
      TSLAM_FIELD("loop.ransac_iterations", ransac.iterations),
      TSLAM_FIELD("loop.ransac_threshold", ransac.threshold),
      TSLAM_FIELD("loop.ransac_min_inliers", ransac.min_inliers),
      TSLAM_FIELD("loop.ransac_max_hamming", ransac.max_hamming),
      TSLAM_FIELD("graph.max_iterations", pose_graph.max_iterations),

      TSLAM_FIELD("map.all_frames", map_all_frames),
      TSLAM_FIELD("map.voxel", map_voxel),
      TSLAM_FIELD("map.format", map_format),
      TSLAM_FIELD("map.colormap_low", colormap_low),
      TSLAM_FIELD("map.colormap_high", colormap_high),

      TSLAM_FIELD("calib.max_rms_px", calibration.chessboard.max_rms_px),
      TSLAM_FIELD("calib.ransac_threshold", calibration.ransac.threshold),
      TSLAM_FIELD("calib.ransac_iterations", calibration.ransac.iterations),
      TSLAM_FIELD("calib.ransac_min_inliers", calibration.ransac.min_inliers),
      TSLAM_FIELD("calib.refine_iterations", calibration.refine.max_iterations),
  };
  return table;
}

#undef TSLAM_FIELD

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const Field& f = find_field(key);
  try {
    f.set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) {
  return find_field(key).get(cfg);
}

PipelineConfig parse_pipeline_config(std::istream& is) {
  PipelineConfig cfg;
  std::vector<KeyValue> entries;
  try {
    entries = read_key_values(is, "config");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& e : entries) {
    try {
      set_config_value(cfg, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("config line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  return parse_pipeline_config(is);
}

void write_pipeline_config(std::ostream& os, const PipelineConfig& cfg) {
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << "\n";
}

void validate(const PipelineConfig& c) {
  require(c.sync_tolerance_ms >= 0.0, "sync.tolerance_ms must be >= 0");
  require(c.conv.scale > 0.0, "raw.scale must be > 0");
  require(c.frame.pyramid_levels >= 1 && c.frame.pyramid_levels <= 8,
          "frame.pyramid_levels must be in [1, 8]");
  require(c.frame.max_points >= 1, "frame.max_points must be >= 1");
  require(c.frame.bucket_size >= 1, "frame.bucket_size must be >= 1");
  require(c.frame.z_min > 0.0, "frame.z_min must be > 0");
  require(c.track.align.nu > 0.0, "track.nu must be > 0");
  require(c.track.align.max_iterations >= 1, "track.max_iterations must be >= 1");
  require(c.track.align.min_update > 0.0, "track.min_update must be > 0");
  require(c.track.min_valid_ratio >= 0.0 && c.track.min_valid_ratio <= 1.0,
          "track.min_valid_ratio must be in [0, 1]");
  require(c.track.max_weighted_rms > 0.0, "track.max_weighted_rms must be > 0");
  require(c.track.min_points >= 10, "track.min_points must be >= 10");
  require(c.window_size >= 1, "refine.window_size must be >= 1");
  require(c.refine_options.align.max_iterations >= 1, "refine.max_iterations must be >= 1");
  require(c.refine_options.align.min_update > 0.0, "refine.min_update must be > 0");
  require(c.keyframes.max_translation > 0.0, "keyframe.max_translation must be > 0");
  require(c.keyframes.max_rotation_deg > 0.0, "keyframe.max_rotation_deg must be > 0");
  require(c.keyframes.min_valid_ratio >= 0.0 && c.keyframes.min_valid_ratio <= 1.0,
          "keyframe.min_valid_ratio must be in [0, 1]");
  require(c.rescale_low < c.rescale_high, "loop.rescale_low must be below loop.rescale_high");
  require(c.features.max_features >= 1, "loop.max_features must be >= 1");
  require(c.detector.recent_window_s >= 0.0, "loop.recent_window_s must be >= 0");
  require(c.detector.min_eta > 0.0, "loop.min_eta must be > 0");
  require(c.detector.min_common_ratio >= 0.0 && c.detector.min_common_ratio <= 1.0,
          "loop.min_common_ratio must be in [0, 1]");
  require(c.detector.normalizer_neighbors >= 1, "loop.normalizer_neighbors must be >= 1");
  require(c.affine.align.max_iterations >= 1, "loop.align_max_iterations must be >= 1");
  require(c.affine.min_inlier_ratio >= 0.0 && c.affine.min_inlier_ratio <= 1.0,
          "loop.min_inlier_ratio must be in [0, 1]");
  require(c.cross_check_eps > 0.0, "loop.epsilon must be > 0");
  require(c.identity_init_distance >= 0.0, "loop.identity_init_distance must be >= 0");
  require(c.ransac.iterations >= 1 && c.ransac.threshold > 0.0 && c.ransac.min_inliers >= 3,
          "loop.ransac_* out of range");
  require(c.pose_graph.max_iterations >= 1, "graph.max_iterations must be >= 1");
  require(c.map_voxel >= 0.0, "map.voxel must be >= 0");
  require(c.colormap_low < c.colormap_high, "map.colormap_low must be below map.colormap_high");
}

}  // namespace tslam::cli
