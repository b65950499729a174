#include "tslam/map/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace tslam::map {

std::array<std::uint8_t, 3> diverging_color(double t, double t_low, double t_high) {
  double s = (t - t_low) / (t_high - t_low);
  if (!std::isfinite(s)) s = 0.5;
  s = std::clamp(s, 0.0, 1.0);
  // Blue (59,76,192) -> white (221,221,221) -> red (180,4,38).
  const double lo[3] = {59, 76, 192};
  const double mid[3] = {221, 221, 221};
  const double hi[3] = {180, 4, 38};
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = s < 0.5 ? lo[c] + (mid[c] - lo[c]) * (s / 0.5)
                             : mid[c] + (hi[c] - mid[c]) * ((s - 0.5) / 0.5);
    out[c] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

std::vector<ThermoPoint> voxel_filter(const std::vector<ThermoPoint>& points, double voxel) {
  if (!(voxel > 0.0)) return points;
  struct Acc {
    Vec3 sum = Vec3::Zero();
    double temp = 0.0;
    double raw = 0.0;
    int keyframe_id = 0;
    std::size_t n = 0;
  };
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::size_t h = 1469598103934665603ull;
      for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
      return h;
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> index;
  std::vector<Acc> acc;
  for (const auto& p : points) {
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.position.x() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.position.y() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.position.z() / voxel))};
    auto [it, inserted] = index.try_emplace(key, acc.size());
    if (inserted) acc.push_back(Acc{Vec3::Zero(), 0.0, 0.0, p.keyframe_id, 0});
    Acc& a = acc[it->second];
    a.sum += p.position;
    a.temp += p.temperature;
    a.raw += p.raw;
    ++a.n;
  }
  std::vector<ThermoPoint> out;
  out.reserve(acc.size());
  for (const auto& a : acc) {
    const double n = static_cast<double>(a.n);
    out.push_back({a.sum / n, a.temp / n, static_cast<std::uint16_t>(std::lround(a.raw / n)),
                   a.keyframe_id});
  }
  return out;
}

void write_ply(std::ostream& os, const std::vector<ThermoPoint>& points, const PlyOptions& opts) {
  os << "ply\n";
  os << (opts.format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
  os << "comment tslam thermographic map\n";
  os << "element vertex " << points.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  os << "property float temperature\nproperty ushort raw\n";
  if (opts.colormap) os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "end_header\n";
  char line[160];
  for (const auto& p : points) {
    const float f[4] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                        static_cast<float>(p.position.z()), static_cast<float>(p.temperature)};
    const auto rgb = diverging_color(p.temperature, opts.t_low, opts.t_high);
    if (opts.format == PlyFormat::ascii) {
      int n = std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.9g %u", f[0], f[1], f[2], f[3],
                            static_cast<unsigned>(p.raw));
      if (opts.colormap) {
        n += std::snprintf(line + n, sizeof(line) - static_cast<std::size_t>(n), " %u %u %u",
                           static_cast<unsigned>(rgb[0]), static_cast<unsigned>(rgb[1]),
                           static_cast<unsigned>(rgb[2]));
      }
      os.write(line, n);
      os.put('\n');
    } else {
      char buf[4 * 4 + 2 + 3];
      std::memcpy(buf, f, sizeof(f));  // little-endian host
      std::memcpy(buf + 16, &p.raw, 2);
      std::size_t len = 18;
      if (opts.colormap) {
        std::memcpy(buf + 18, rgb.data(), 3);
        len = 21;
      }
      os.write(buf, static_cast<std::streamsize>(len));
    }
  }
}

void write_ply(const std::filesystem::path& path, const std::vector<ThermoPoint>& points,
               const PlyOptions& opts) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_ply(os, points, opts);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<PlyVertex> read_ply(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "ply") throw std::runtime_error("ply: missing magic");
  bool binary = false;
  std::size_t count = 0;
  std::vector<std::string> props;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw std::runtime_error("ply: unsupported format '" + fmt + "'");
      }
    } else if (key == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw std::runtime_error("ply: unexpected element " + name);
    } else if (key == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (key == "end_header") {
      break;
    } else if (key != "comment" && !key.empty()) {
      throw std::runtime_error("ply: bad header line " + std::to_string(line_no));
    }
  }
  const std::vector<std::string> base = {"x", "y", "z", "temperature", "raw"};
  const std::vector<std::string> colored = {"x", "y", "z", "temperature", "raw", "red", "green", "blue"};
  const bool has_color = props == colored;
  if (!has_color && props != base) throw std::runtime_error("ply: unexpected vertex properties");

  std::vector<PlyVertex> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    PlyVertex& v = out[i];
    if (binary) {
      char buf[21];
      const std::size_t len = has_color ? 21 : 18;
      is.read(buf, static_cast<std::streamsize>(len));
      if (!is) throw std::runtime_error("ply: truncated at vertex " + std::to_string(i));
      float f[4];
      std::memcpy(f, buf, 16);
      v.x = f[0];
      v.y = f[1];
      v.z = f[2];
      v.temperature = f[3];
      std::memcpy(&v.raw, buf + 16, 2);
      if (has_color) {
        v.color = std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(buf[18]),
                                              static_cast<std::uint8_t>(buf[19]),
                                              static_cast<std::uint8_t>(buf[20])};
      }
    } else {
      if (!std::getline(is, line)) throw std::runtime_error("ply: truncated at vertex " + std::to_string(i));
      std::istringstream ls(line);
      unsigned raw = 0;
      ls >> v.x >> v.y >> v.z >> v.temperature >> raw;
      v.raw = static_cast<std::uint16_t>(raw);
      if (has_color) {
        unsigned r = 0, g = 0, b = 0;
        ls >> r >> g >> b;
        v.color = std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                              static_cast<std::uint8_t>(b)};
      }
      if (!ls || raw > 65535) {
        throw std::runtime_error("ply: malformed vertex line " + std::to_string(line_no + 1 + static_cast<int>(i)));
      }
    }
  }
  return out;
}

std::vector<PlyVertex> read_ply(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_ply(is);
}

}  // namespace tslam::map
