#include "tslam/synth/sequence.hpp"

#include "tslam/calib/extrinsic.hpp"
#include "tslam/cli/dataset.hpp"
#include "tslam/cli/keyvalue.hpp"
#include "tslam/imgproc/pgm.hpp"
#include "tslam/loop/features.hpp"
#include "tslam/loop/vocabulary.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tslam::synth {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr geom::Timestamp kStartStamp = 1'000'000'000;

double to_double(const std::string& v) { return cli::parse_double(v); }
long to_long(const std::string& v) { return cli::parse_long(v); }
bool to_bool(const std::string& v) { return cli::parse_bool(v); }

using Setter = std::function<void(SceneConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](SceneConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_long(v)); }},
      {"frames", [](SceneConfig& c, const std::string& v) { c.frames = static_cast<int>(to_long(v)); }},
      {"rate_hz", [](SceneConfig& c, const std::string& v) { c.rate_hz = to_double(v); }},
      {"speed", [](SceneConfig& c, const std::string& v) { c.speed = to_double(v); }},
      {"width", [](SceneConfig& c, const std::string& v) { c.intrinsics.width = static_cast<int>(to_long(v)); }},
      {"height", [](SceneConfig& c, const std::string& v) { c.intrinsics.height = static_cast<int>(to_long(v)); }},
      {"fx", [](SceneConfig& c, const std::string& v) { c.intrinsics.fx = to_double(v); }},
      {"fy", [](SceneConfig& c, const std::string& v) { c.intrinsics.fy = to_double(v); }},
      {"cx", [](SceneConfig& c, const std::string& v) { c.intrinsics.cx = to_double(v); }},
      {"cy", [](SceneConfig& c, const std::string& v) { c.intrinsics.cy = to_double(v); }},
      {"lidar.rings", [](SceneConfig& c, const std::string& v) { c.lidar.rings = static_cast<int>(to_long(v)); }},
      {"lidar.min_elevation_deg", [](SceneConfig& c, const std::string& v) { c.lidar.min_elevation_deg = to_double(v); }},
      {"lidar.max_elevation_deg", [](SceneConfig& c, const std::string& v) { c.lidar.max_elevation_deg = to_double(v); }},
      {"lidar.azimuth_step_deg", [](SceneConfig& c, const std::string& v) { c.lidar.azimuth_step_deg = to_double(v); }},
      {"lidar.azimuth_min_deg", [](SceneConfig& c, const std::string& v) { c.lidar.azimuth_min_deg = to_double(v); }},
      {"lidar.azimuth_max_deg", [](SceneConfig& c, const std::string& v) { c.lidar.azimuth_max_deg = to_double(v); }},
      {"lidar.max_range", [](SceneConfig& c, const std::string& v) { c.lidar.max_range = to_double(v); }},
      {"lidar.noise", [](SceneConfig& c, const std::string& v) { c.lidar.noise = to_double(v); }},
      {"raw.scale", [](SceneConfig& c, const std::string& v) { c.conv.scale = to_double(v); }},
      {"raw.offset", [](SceneConfig& c, const std::string& v) { c.conv.offset = to_double(v); }},
      {"image.noise", [](SceneConfig& c, const std::string& v) { c.image_noise = to_double(v); }},
      {"image.supersample", [](SceneConfig& c, const std::string& v) { c.image_supersample = static_cast<int>(to_long(v)); }},
      {"texture.amplitude", [](SceneConfig& c, const std::string& v) { c.texture_amplitude = to_double(v); }},
      {"texture.panel_density", [](SceneConfig& c, const std::string& v) { c.panel_density = to_double(v); }},
      {"texture.panel_softness", [](SceneConfig& c, const std::string& v) { c.panel_softness = to_double(v); }},
      {"corridor.width", [](SceneConfig& c, const std::string& v) { c.corridor_width = to_double(v); }},
      {"corridor.height", [](SceneConfig& c, const std::string& v) { c.corridor_height = to_double(v); }},
      {"loop.half_side", [](SceneConfig& c, const std::string& v) { c.loop_half_side = to_double(v); }},
      {"loop.corner_radius", [](SceneConfig& c, const std::string& v) { c.loop_corner_radius = to_double(v); }},
      {"loop.overlap", [](SceneConfig& c, const std::string& v) { c.loop_overlap = to_double(v); }},
      {"tunnel.length", [](SceneConfig& c, const std::string& v) { c.tunnel_length = to_double(v); }},
      {"path.bob", [](SceneConfig& c, const std::string& v) { c.bob_amplitude = to_double(v); }},
      {"board.rows", [](SceneConfig& c, const std::string& v) { c.board.rows = static_cast<int>(to_long(v)); }},
      {"board.cols", [](SceneConfig& c, const std::string& v) { c.board.cols = static_cast<int>(to_long(v)); }},
      {"board.square", [](SceneConfig& c, const std::string& v) { c.board.square = to_double(v); }},
      {"board.distance", [](SceneConfig& c, const std::string& v) { c.board_distance = to_double(v); }},
      {"orbit.azimuth_deg", [](SceneConfig& c, const std::string& v) { c.orbit_azimuth_deg = to_double(v); }},
      {"orbit.elevation_deg", [](SceneConfig& c, const std::string& v) { c.orbit_elevation_deg = to_double(v); }},
      {"calib.perturb_deg", [](SceneConfig& c, const std::string& v) { c.calib_perturb_deg = to_double(v); }},
      {"calib.perturb_m", [](SceneConfig& c, const std::string& v) { c.calib_perturb_m = to_double(v); }},
      {"vocabulary", [](SceneConfig& c, const std::string& v) { c.vocabulary = to_bool(v); }},
      {"vocabulary.stride", [](SceneConfig& c, const std::string& v) { c.vocabulary_stride = static_cast<int>(to_long(v)); }},
      {"vocabulary.branching", [](SceneConfig& c, const std::string& v) { c.vocabulary_branching = static_cast<int>(to_long(v)); }},
      {"vocabulary.depth", [](SceneConfig& c, const std::string& v) { c.vocabulary_depth = static_cast<int>(to_long(v)); }},
  };
  return table;
}

void check_config(const SceneConfig& c) {
  c.intrinsics.validate();
  if (c.frames < 1) throw std::invalid_argument("frames must be >= 1");
  if (!(c.rate_hz > 0.0)) throw std::invalid_argument("rate_hz must be > 0");
  if (c.lidar.rings < 1 || c.lidar.azimuth_steps() == 0) throw std::invalid_argument("empty LiDAR pattern");
  if (!(c.conv.scale > 0.0)) throw std::invalid_argument("raw.scale must be > 0");
  if (!(c.panel_softness > 0.0)) throw std::invalid_argument("texture.panel_softness must be > 0");
  if (c.image_supersample < 1) throw std::invalid_argument("image.supersample must be >= 1");
  if (c.vocabulary_stride < 1) throw std::invalid_argument("vocabulary.stride must be >= 1");
  if (c.board.rows < 2 || c.board.cols < 2 || !(c.board.square > 0.0)) {
    throw std::invalid_argument("board needs rows, cols >= 2 and square > 0");
  }
}

// Rounded-square centerline, counter-clockwise from the middle of the south side.
struct PathSegment {
  bool arc = false;
  Vec2 start;
  double heading = 0.0;
  double length = 0.0;
  double radius = 0.0;
};

std::vector<PathSegment> rounded_square(double c, double rc) {
  std::vector<PathSegment> segs;
  Vec2 pos(0.0, -c);
  double h = 0.0;
  const auto straight = [&](double len) {
    segs.push_back({false, pos, h, len, 0.0});
    pos += len * Vec2(std::cos(h), std::sin(h));
  };
  const auto arc = [&]() {
    segs.push_back({true, pos, h, 0.5 * kPi * rc, rc});
    const Vec2 center = pos + rc * Vec2(-std::sin(h), std::cos(h));
    h += 0.5 * kPi;
    pos = center + rc * Vec2(std::sin(h), -std::cos(h));
  };
  straight(c - rc);
  for (int side = 0; side < 3; ++side) {
    arc();
    straight(2.0 * (c - rc));
  }
  arc();
  straight(c - rc);
  return segs;
}

std::pair<Vec2, double> along(const std::vector<PathSegment>& segs, double s) {
  double perimeter = 0.0;
  for (const auto& g : segs) perimeter += g.length;
  s = std::fmod(s, perimeter);
  if (s < 0.0) s += perimeter;
  for (const auto& g : segs) {
    if (s > g.length) {
      s -= g.length;
      continue;
    }
    if (!g.arc) return {g.start + s * Vec2(std::cos(g.heading), std::sin(g.heading)), g.heading};
    const Vec2 center = g.start + g.radius * Vec2(-std::sin(g.heading), std::cos(g.heading));
    const double h = g.heading + s / g.radius;
    return {center + g.radius * Vec2(std::sin(h), -std::cos(h)), h};
  }
  return {segs.front().start, segs.front().heading};
}

geom::Timestamp frame_stamp(const SceneConfig& cfg, std::size_t i) {
  return kStartStamp + static_cast<geom::Timestamp>(std::llround(static_cast<double>(i) * 1e9 / cfg.rate_hz));
}

Surface wall(const Vec3& origin, const Vec3& s, const Vec3& t, double ls, double lt,
             std::mt19937_64& rng, const SceneConfig& cfg) {
  std::uniform_real_distribution<double> base(14.0, 20.0);
  Surface f;
  f.origin = origin;
  f.axis_s = s;
  f.axis_t = t;
  f.length_s = ls;
  f.length_t = lt;
  f.field = random_field(rng, base(rng), cfg.texture_amplitude);
  add_random_panels(f.field, rng, ls, lt, cfg.panel_density, 2.5, 5.0,
                    cfg.panel_softness);
  return f;
}

// Axis-aligned box interior [x0,x1] x [y0,y1] x [0,h], every face textured.
void add_box(ThermoScene& scene, double x0, double x1, double y0, double y1, double h,
             std::mt19937_64& rng, const SceneConfig& cfg, bool with_caps) {
  const Vec3 X = Vec3::UnitX();
  const Vec3 Y = Vec3::UnitY();
  const Vec3 Z = Vec3::UnitZ();
  scene.surfaces.push_back(wall({x0, y0, 0}, X, Z, x1 - x0, h, rng, cfg));  // south
  scene.surfaces.push_back(wall({x0, y1, 0}, X, Z, x1 - x0, h, rng, cfg));  // north
  scene.surfaces.push_back(wall({x0, y0, 0}, Y, Z, y1 - y0, h, rng, cfg));  // west
  scene.surfaces.push_back(wall({x1, y0, 0}, Y, Z, y1 - y0, h, rng, cfg));  // east
  if (with_caps) {
    scene.surfaces.push_back(wall({x0, y0, 0}, X, Y, x1 - x0, y1 - y0, rng, cfg));  // floor
    scene.surfaces.push_back(wall({x0, y0, h}, X, Y, x1 - x0, y1 - y0, rng, cfg));  // ceiling
  }
}

}  // namespace

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::corridor_loop: return "corridor-loop";
    case Preset::tunnel: return "tunnel";
    case Preset::calib_room: return "calib-room";
  }
  return "tunnel";
}

Preset parse_preset(const std::string& name) {
  if (name == "corridor-loop") return Preset::corridor_loop;
  if (name == "tunnel") return Preset::tunnel;
  if (name == "calib-room") return Preset::calib_room;
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected corridor-loop, tunnel or calib-room)");
}

SceneConfig preset_config(Preset p) {
  SceneConfig c;
  c.preset = p;
  switch (p) {
    case Preset::corridor_loop: {
      const double perimeter =
          8.0 * (c.loop_half_side - c.loop_corner_radius) + 2.0 * kPi * c.loop_corner_radius;
      c.frames = static_cast<int>(std::ceil((perimeter + c.loop_overlap) / c.speed)) + 1;
      break;
    }
    case Preset::tunnel:
      c.frames = 100;
      break;
    case Preset::calib_room:
      c.frames = 60;
      c.vocabulary = false;
      c.panel_density = 0.3;
      break;
  }
  return c;
}

SceneConfig parse_scene_config(std::istream& is) {
  std::vector<cli::KeyValue> entries;
  std::optional<Preset> preset;
  for (auto& e : cli::read_key_values(is, "scene config")) {
    if (e.key == "preset") {
      try {
        preset = parse_preset(e.value);
      } catch (const std::invalid_argument& err) {
        throw std::invalid_argument("scene config line " + std::to_string(e.line) + ": " + err.what());
      }
      continue;
    }
    if (!setters().contains(e.key)) {
      throw std::invalid_argument("scene config line " + std::to_string(e.line) + ": unknown key '" +
                                  e.key + "'");
    }
    entries.push_back(std::move(e));
  }
  SceneConfig cfg = preset_config(preset.value_or(Preset::tunnel));
  for (const auto& e : entries) {
    try {
      setters().at(e.key)(cfg, e.value);
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("scene config line " + std::to_string(e.line) + " (" + e.key +
                                  "): " + err.what());
    }
  }
  check_config(cfg);
  return cfg;
}

SceneConfig load_scene_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open scene config " + path.string());
  return parse_scene_config(is);
}

void write_scene_config(std::ostream& os, const SceneConfig& c) {
  char buf[128];
  const auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
    os << buf;
  };
  os << "preset = " << preset_name(c.preset) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "frames = " << c.frames << "\n";
  kv("rate_hz", c.rate_hz);
  kv("speed", c.speed);
  os << "width = " << c.intrinsics.width << "\nheight = " << c.intrinsics.height << "\n";
  kv("fx", c.intrinsics.fx);
  kv("fy", c.intrinsics.fy);
  kv("cx", c.intrinsics.cx);
  kv("cy", c.intrinsics.cy);
  os << "lidar.rings = " << c.lidar.rings << "\n";
  kv("lidar.min_elevation_deg", c.lidar.min_elevation_deg);
  kv("lidar.max_elevation_deg", c.lidar.max_elevation_deg);
  kv("lidar.azimuth_step_deg", c.lidar.azimuth_step_deg);
  kv("lidar.azimuth_min_deg", c.lidar.azimuth_min_deg);
  kv("lidar.azimuth_max_deg", c.lidar.azimuth_max_deg);
  kv("lidar.max_range", c.lidar.max_range);
  kv("lidar.noise", c.lidar.noise);
  kv("raw.scale", c.conv.scale);
  kv("raw.offset", c.conv.offset);
  kv("image.noise", c.image_noise);
  os << "image.supersample = " << c.image_supersample << "\n";
  kv("texture.amplitude", c.texture_amplitude);
  kv("texture.panel_density", c.panel_density);
  kv("texture.panel_softness", c.panel_softness);
  kv("corridor.width", c.corridor_width);
  kv("corridor.height", c.corridor_height);
  kv("loop.half_side", c.loop_half_side);
  kv("loop.corner_radius", c.loop_corner_radius);
  kv("loop.overlap", c.loop_overlap);
  kv("tunnel.length", c.tunnel_length);
  kv("path.bob", c.bob_amplitude);
  os << "board.rows = " << c.board.rows << "\nboard.cols = " << c.board.cols << "\n";
  kv("board.square", c.board.square);
  kv("board.distance", c.board_distance);
  kv("orbit.azimuth_deg", c.orbit_azimuth_deg);
  kv("orbit.elevation_deg", c.orbit_elevation_deg);
  kv("calib.perturb_deg", c.calib_perturb_deg);
  kv("calib.perturb_m", c.calib_perturb_m);
  os << "vocabulary = " << (c.vocabulary ? "true" : "false") << "\n";
  os << "vocabulary.stride = " << c.vocabulary_stride << "\n";
  os << "vocabulary.branching = " << c.vocabulary_branching << "\n";
  os << "vocabulary.depth = " << c.vocabulary_depth << "\n";
}

Pose default_lidar_from_camera() {
  Mat3 axes;
  axes << 0, 0, 1,  //
      -1, 0, 0,     //
      0, -1, 0;
  const Mat3 R = geom::so3_exp(Vec3(0.01, -0.015, 0.02)) * axes;
  return Pose(R, Vec3(0.05, 0.0, -0.10));
}

SyntheticSequence build_sequence(const SceneConfig& cfg) {
  check_config(cfg);
  SyntheticSequence seq;
  seq.intrinsics = cfg.intrinsics;
  seq.lidar_from_camera = default_lidar_from_camera();
  seq.lidar = cfg.lidar;
  seq.conv = cfg.conv;
  seq.scene.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);

  geom::Trajectory samples;
  const auto n = static_cast<std::size_t>(cfg.frames);
  const double h_mid = 0.5 * cfg.corridor_height;

  switch (cfg.preset) {
    case Preset::corridor_loop: {
      const double c = cfg.loop_half_side;
      const double a = c + 0.5 * cfg.corridor_width;
      const double b = c - 0.5 * cfg.corridor_width;
      if (!(b > 0.1) || !(cfg.loop_corner_radius > 0.0) || cfg.loop_corner_radius > c) {
        throw std::invalid_argument("corridor-loop: inconsistent loop geometry");
      }
      add_box(seq.scene, -a, a, -a, a, cfg.corridor_height, rng, cfg, true);
      add_box(seq.scene, -b, b, -b, b, cfg.corridor_height, rng, cfg, false);
      const auto segs = rounded_square(c, cfg.loop_corner_radius);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = cfg.speed * static_cast<double>(i);
        const auto [xy, heading] = along(segs, s);
        const Vec3 p(xy.x(), xy.y(), h_mid + cfg.bob_amplitude * std::sin(2.0 * kPi * s / 3.7));
        const Vec3 fwd(std::cos(heading), std::sin(heading), 0.0);
        samples.push_back({frame_stamp(cfg, i), Pose(look_rotation(fwd), p), true});
      }
      break;
    }
    case Preset::tunnel: {
      const double half = 0.5 * cfg.corridor_width;
      add_box(seq.scene, -3.0, cfg.tunnel_length, -half, half, cfg.corridor_height, rng, cfg, true);
      if (cfg.speed * static_cast<double>(n) > cfg.tunnel_length - 5.0) {
        throw std::invalid_argument("tunnel: path longer than the tunnel");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double s = cfg.speed * static_cast<double>(i);
        const Vec3 p(s, 0.1 * std::sin(2.0 * kPi * s / 7.0),
                     h_mid + cfg.bob_amplitude * std::sin(2.0 * kPi * s / 3.7));
        samples.push_back({frame_stamp(cfg, i), Pose(look_rotation(Vec3::UnitX()), p), true});
      }
      break;
    }
    case Preset::calib_room: {
      add_box(seq.scene, -4.0, 4.0, -4.0, 4.0, cfg.corridor_height, rng, cfg, true);
      const calib::BoardGeometry& g = cfg.board;
      const double sq = g.square;
      const Vec3 center(0.0, 0.0, h_mid);
      Mat3 Rb;
      Rb.col(0) = -Vec3::UnitY();  // columns run along -y
      Rb.col(1) = -Vec3::UnitZ();  // rows run downward
      Rb.col(2) = Vec3::UnitX();   // faces away from the rig
      const Vec3 origin = center - Rb.col(0) * (0.5 * (g.cols - 1) * sq) -
                          Rb.col(1) * (0.5 * (g.rows - 1) * sq);
      seq.world_from_board = Pose(Rb, origin);
      seq.board = g;
      Surface board;
      board.origin = origin - sq * Rb.col(0) - sq * Rb.col(1);
      board.axis_s = Rb.col(0);
      board.axis_t = Rb.col(1);
      board.length_s = (g.cols + 1) * sq;
      board.length_t = (g.rows + 1) * sq;
      board.field.base = 27.5;
      board.field.checker = Checker{sq, 35.0, 20.0};
      seq.scene.surfaces.push_back(board);
      for (std::size_t i = 0; i < n; ++i) {
        const double phase = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        const double az = cfg.orbit_azimuth_deg * kDeg * std::sin(phase);
        const double el = cfg.orbit_elevation_deg * kDeg * std::sin(2.0 * phase);
        const Vec3 dir(-std::cos(el) * std::cos(az), -std::cos(el) * std::sin(az), std::sin(el));
        const Vec3 p = center + cfg.board_distance * dir;
        samples.push_back({frame_stamp(cfg, i), Pose(look_rotation(center - p), p), true});
      }
      break;
    }
  }
  seq.scene.validate();
  seq.trajectory = ScriptedTrajectory(std::move(samples));
  return seq;
}

SyntheticFrame render_frame(const SyntheticSequence& seq, std::size_t index, const SceneConfig& cfg) {
  const auto& sample = seq.trajectory.samples().at(index);
  SyntheticFrame out;
  RenderOptions ro;
  ro.conv = seq.conv;
  ro.noise_counts = cfg.image_noise;
  ro.supersample = cfg.image_supersample;
  ro.noise_seed = cfg.seed * 0x9E3779B97F4A7C15ull + 2 * index + 1;
  out.image = render_thermal(seq.scene, sample.pose, seq.intrinsics, sample.stamp, ro);
  out.cloud = render_lidar(seq.scene, seq.world_from_lidar(index), seq.lidar,
                           cfg.seed * 0xD1B54A32D192ED03ull + 2 * index + 2);
  if (seq.board) {
    const Pose camera_from_board = sample.pose.inverse() * seq.world_from_board;
    bool all_inside = true;
    for (const Vec3& p : seq.board->corner_points()) {
      const auto u = geom::project(camera_from_board * p, seq.intrinsics);
      if (!u) {
        all_inside = false;
        break;
      }
      out.corners.push_back(*u);
    }
    if (!all_inside) out.corners.clear();
  }
  return out;
}

void generate_dataset(const SceneConfig& cfg, const fs::path& out_dir) {
  const SyntheticSequence seq = build_sequence(cfg);
  fs::create_directories(out_dir / cli::kImagesDir);
  fs::create_directories(out_dir / cli::kCloudsDir);

  std::vector<std::vector<loop::Descriptor>> training;
  for (std::size_t i = 0; i < seq.trajectory.size(); ++i) {
    const SyntheticFrame f = render_frame(seq, i, cfg);
    const geom::Timestamp stamp = f.image.stamp;
    imgproc::write_thermal_pgm(out_dir / cli::kImagesDir / cli::stamp_name(stamp, ".pgm"), f.image);
    cli::write_cloud_csv(out_dir / cli::kCloudsDir / cli::stamp_name(stamp, ".csv"), f.cloud);
    if (!f.corners.empty()) {
      calib::write_corner_sidecar(out_dir / cli::kImagesDir / cli::stamp_name(stamp, ".corners.csv"),
                                  f.corners);
    }
    if (cfg.vocabulary && i % static_cast<std::size_t>(cfg.vocabulary_stride) == 0) {
      const Image8 img8 = imgproc::rescale_to_8bit(f.image, 0.0, 30.0, seq.conv);
      training.push_back(loop::extract_features(img8, nullptr).descriptors);
    }
  }

  calib::CalibrationFile cal;
  cal.intrinsics = seq.intrinsics;
  cal.lidar_from_camera = seq.lidar_from_camera;
  if (seq.board) {
    cal.board = *seq.board;
    const Vec3 axis = Vec3(1.0, 2.0, -1.0).normalized();
    const Vec3 shift = Vec3(1.0, -1.0, 1.0).normalized();
    Vec6 xi;
    xi << cfg.calib_perturb_deg * kDeg * axis, cfg.calib_perturb_m * shift;
    cal.lidar_from_camera = geom::exp(xi) * seq.lidar_from_camera;
  }
  calib::write_calibration(out_dir / cli::kCalibFile, cal);
  geom::write_tum(out_dir / cli::kGroundTruthFile, seq.trajectory.samples());
  {
    std::ofstream os(out_dir / "scene.cfg");
    write_scene_config(os, cfg);
    if (!os) throw std::runtime_error("cannot write " + (out_dir / "scene.cfg").string());
  }

  std::size_t descriptors = 0;
  for (const auto& t : training) descriptors += t.size();
  if (cfg.vocabulary && descriptors >= static_cast<std::size_t>(cfg.vocabulary_branching)) {
    const auto voc = loop::Vocabulary::train(training, cfg.vocabulary_branching,
                                             cfg.vocabulary_depth, cfg.seed);
    voc.save(out_dir / cli::kVocabularyFile);
  }
}

}  // namespace tslam::synth
