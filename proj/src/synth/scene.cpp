#include "tslam/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tslam::synth {

namespace {

double smooth_edge(double x, double w) {
  if (w <= 0.0) return x >= 0.0 ? 1.0 : 0.0;
  const double u = std::clamp((x + w) / (2.0 * w), 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

double TemperatureField::eval(double s, double t) const {
  if (checker) {
    const auto i = static_cast<long>(std::floor(s / checker->square));
    const auto j = static_cast<long>(std::floor(t / checker->square));
    return ((i + j) % 2 == 0) ? checker->hot : checker->cold;
  }
  double v = base + gradient.x() * s + gradient.y() * t;
  for (const auto& w : waves) v += w.amplitude * std::sin(w.k.x() * s + w.k.y() * t + w.phase);
  const auto add = [&](const Panel& p) {
    if (s < p.s0 - p.softness || s > p.s1 + p.softness || t < p.t0 - p.softness ||
        t > p.t1 + p.softness) {
      return;
    }
    const double e = smooth_edge(s - p.s0, p.softness) * smooth_edge(p.s1 - s, p.softness) *
                     smooth_edge(t - p.t0, p.softness) * smooth_edge(p.t1 - t, p.softness);
    v += p.delta * e;
  };
  if (indexed_ == panels.size() && !bins_.empty()) {
    const auto b = static_cast<long>(std::floor((s - bin_origin_) / bin_));
    if (b >= 0 && b < static_cast<long>(bins_.size())) {
      for (const std::uint32_t i : bins_[static_cast<std::size_t>(b)]) add(panels[i]);
    }
  } else {
    for (const auto& p : panels) add(p);
  }
  return v;
}

void TemperatureField::index_panels(double bin) {
  bins_.clear();
  indexed_ = 0;
  if (panels.empty() || !(bin > 0.0)) return;
  double lo = panels[0].s0 - panels[0].softness;
  double hi = panels[0].s1 + panels[0].softness;
  for (const auto& p : panels) {
    lo = std::min(lo, p.s0 - p.softness);
    hi = std::max(hi, p.s1 + p.softness);
  }
  bin_ = bin;
  bin_origin_ = lo;
  bins_.resize(static_cast<std::size_t>(std::floor((hi - lo) / bin)) + 1);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    const auto b0 = static_cast<std::size_t>(std::floor((p.s0 - p.softness - lo) / bin));
    const auto b1 = std::min(bins_.size() - 1,
                             static_cast<std::size_t>(std::floor((p.s1 + p.softness - lo) / bin)));
    for (std::size_t b = b0; b <= b1; ++b) bins_[b].push_back(static_cast<std::uint32_t>(i));
  }
  indexed_ = panels.size();
}

double TemperatureField::max_deviation(double length_s, double length_t) const {
  if (checker) return std::max(std::abs(checker->hot - base), std::abs(checker->cold - base));
  double d = std::abs(gradient.x()) * length_s + std::abs(gradient.y()) * length_t;
  for (const auto& w : waves) d += std::abs(w.amplitude);
  // Any point is covered only by panels overlapping each other.
  double panel_bound = 0.0;
  for (const auto& a : panels) {
    double sum = 0.0;
    for (const auto& b : panels) {
      const double m = a.softness + b.softness;
      if (b.s0 - m < a.s1 && a.s0 - m < b.s1 && b.t0 - m < a.t1 && a.t0 - m < b.t1) {
        sum += std::abs(b.delta);
      }
    }
    panel_bound = std::max(panel_bound, sum);
  }
  return d + panel_bound;
}

std::optional<Hit> ThermoScene::cast(const Vec3& origin, const Vec3& dir, double max_range) const {
  std::optional<Hit> best;
  double best_range = max_range;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const Surface& f = surfaces[i];
    const Vec3 n = f.normal();
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double range = n.dot(f.origin - origin) / denom;
    if (!(range > 1e-9) || range > best_range) continue;
    const Vec3 rel = origin + range * dir - f.origin;
    const double s = rel.dot(f.axis_s);
    const double t = rel.dot(f.axis_t);
    if (s < 0.0 || s > f.length_s || t < 0.0 || t > f.length_t) continue;
    best_range = range;
    best = Hit{range, i, s, t};
  }
  return best;
}

double ThermoScene::temperature(const Hit& hit) const {
  return surfaces[hit.surface].field.eval(hit.s, hit.t);
}

void ThermoScene::validate() const {
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const auto& f = surfaces[i];
    const double dev = f.field.max_deviation(f.length_s, f.length_t);
    const double lo = f.field.checker ? std::min(f.field.checker->hot, f.field.checker->cold)
                                      : f.field.base - dev;
    const double hi = f.field.checker ? std::max(f.field.checker->hot, f.field.checker->cold)
                                      : f.field.base + dev;
    if (lo < -40.0 || hi > 550.0) {
      throw std::invalid_argument("scene: surface " + std::to_string(i) +
                                  " temperature leaves the sensor range");
    }
    if (std::abs(f.axis_s.norm() - 1.0) > 1e-9 || std::abs(f.axis_t.norm() - 1.0) > 1e-9 ||
        std::abs(f.axis_s.dot(f.axis_t)) > 1e-9) {
      throw std::invalid_argument("scene: surface " + std::to_string(i) + " axes not orthonormal");
    }
  }
  if (background < -40.0 || background > 550.0) {
    throw std::invalid_argument("scene: background temperature out of range");
  }
}

TemperatureField random_field(std::mt19937_64& rng, double base, double amplitude, int waves,
                              double min_wavelength, double max_wavelength) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TemperatureField f;
  f.base = base;
  std::vector<double> weights(static_cast<std::size_t>(std::max(waves, 0)));
  double total = 0.0;
  for (auto& w : weights) {
    w = 0.5 + unit(rng);
    total += w;
  }
  for (double w : weights) {
    const double lambda = min_wavelength + (max_wavelength - min_wavelength) * unit(rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const double k = 2.0 * std::numbers::pi / lambda;
    f.waves.push_back({Vec2(k * std::cos(theta), k * std::sin(theta)), amplitude * w / total,
                       2.0 * std::numbers::pi * unit(rng)});
  }
  return f;
}

void add_random_panels(TemperatureField& field, std::mt19937_64& rng, double length_s,
                       double length_t, double per_square_meter, double min_delta,
                       double max_delta, double softness) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto count = static_cast<int>(std::lround(per_square_meter * length_s * length_t));
  for (int i = 0; i < count; ++i) {
    const double ws = 0.15 + 0.45 * unit(rng);
    const double wt = 0.15 + 0.45 * unit(rng);
    const double s0 = unit(rng) * std::max(length_s - ws, 0.0);
    const double t0 = unit(rng) * std::max(length_t - wt, 0.0);
    const double mag = min_delta + (max_delta - min_delta) * unit(rng);
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    field.panels.push_back({s0, t0, s0 + ws, t0 + wt, sign * mag, softness});
  }
  field.index_panels();
}

ThermalImage render_thermal(const ThermoScene& scene, const Pose& world_from_camera,
                            const CameraIntrinsics& K, geom::Timestamp stamp,
                            const RenderOptions& opts) {
  imgproc::Image<std::uint16_t> counts(K.width, K.height);
  const Mat3& R = world_from_camera.rotation();
  const Vec3& c = world_from_camera.translation();
  std::mt19937_64 rng(opts.noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int s = std::max(1, opts.supersample);
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      double celsius = 0.0;
      for (int j = 0; j < s; ++j) {
        for (int i = 0; i < s; ++i) {
          const double du = (i + 0.5) / s - 0.5;
          const double dv = (j + 0.5) / s - 0.5;
          const Vec3 ray_c((u + du - K.cx) / K.fx, (v + dv - K.cy) / K.fy, 1.0);
          const Vec3 dir = (R * ray_c).normalized();
          const auto hit = scene.cast(c, dir);
          celsius += hit ? scene.temperature(*hit) : scene.background;
        }
      }
      celsius /= s * s;
      double raw = opts.conv.to_raw(celsius);
      if (opts.noise_counts > 0.0) raw += opts.noise_counts * noise(rng);
      counts.at(u, v) = static_cast<std::uint16_t>(
          std::clamp<long>(std::lround(raw), 0, imgproc::kMaxRawCount));
    }
  }
  return ThermalImage(std::move(counts), stamp);
}

std::size_t LidarPattern::azimuth_steps() const {
  if (!(azimuth_step_deg > 0.0) || azimuth_max_deg < azimuth_min_deg) return 0;
  const double span = azimuth_max_deg - azimuth_min_deg;
  const bool full_turn = span >= 360.0 - 1e-9;
  const auto n = static_cast<std::size_t>(std::floor(span / azimuth_step_deg + 1e-9));
  return full_turn ? n : n + 1;
}

std::vector<Vec3> render_lidar(const ThermoScene& scene, const Pose& world_from_lidar,
                               const LidarPattern& pattern, std::uint64_t noise_seed) {
  std::vector<Vec3> out;
  out.reserve(pattern.max_points());
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t steps = pattern.azimuth_steps();
  const Mat3& R = world_from_lidar.rotation();
  const Vec3& o = world_from_lidar.translation();
  for (int ring = 0; ring < pattern.rings; ++ring) {
    const double el =
        pattern.rings == 1
            ? pattern.min_elevation_deg
            : pattern.min_elevation_deg +
                  (pattern.max_elevation_deg - pattern.min_elevation_deg) * ring / (pattern.rings - 1);
    for (std::size_t a = 0; a < steps; ++a) {
      const double az = pattern.azimuth_min_deg + pattern.azimuth_step_deg * static_cast<double>(a);
      const Vec3 d(std::cos(el * kDeg) * std::cos(az * kDeg), std::cos(el * kDeg) * std::sin(az * kDeg),
                   std::sin(el * kDeg));
      const auto hit = scene.cast(o, R * d, pattern.max_range);
      if (!hit) continue;
      double range = hit->range;
      if (pattern.noise > 0.0) range += pattern.noise * noise(rng);
      if (!(range > 0.0)) continue;
      out.push_back(range * d);
    }
  }
  return out;
}

ScriptedTrajectory::ScriptedTrajectory(geom::Trajectory samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (samples_[i].stamp <= samples_[i - 1].stamp) {
      throw std::invalid_argument("trajectory: timestamps must strictly increase (sample " +
                                  std::to_string(i) + ")");
    }
  }
}

Pose ScriptedTrajectory::at(geom::Timestamp t) const {
  if (samples_.empty()) throw std::logic_error("trajectory: empty");
  if (t <= samples_.front().stamp) return samples_.front().pose;
  if (t >= samples_.back().stamp) return samples_.back().pose;
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](geom::Timestamp v, const geom::StampedPose& s) { return v < s.stamp; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double alpha = static_cast<double>(t - a.stamp) / static_cast<double>(b.stamp - a.stamp);
  const Eigen::Quaterniond q = a.pose.quaternion().slerp(alpha, b.pose.quaternion());
  const Vec3 p = (1.0 - alpha) * a.pose.translation() + alpha * b.pose.translation();
  return Pose::from_quaternion(q, p);
}

Mat3 look_rotation(const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return R;
}

}  // namespace tslam::synth
