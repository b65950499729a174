#include "tslam/geom/trajectory.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tslam::geom {

std::string format_seconds(Timestamp ns) {
  const bool negative = ns < 0;
  const auto mag = static_cast<std::uint64_t>(negative ? -ns : ns);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", negative ? "-" : "",
                static_cast<unsigned long long>(mag / 1'000'000'000ULL),
                static_cast<unsigned long long>(mag % 1'000'000'000ULL));
  return buf;
}

Timestamp parse_seconds(const std::string& text) {
  std::string s = text;
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  const std::string whole = s.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw std::invalid_argument("empty timestamp");
  for (char c : whole + frac) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad timestamp '" + text + "'");
  }
  if (frac.size() > 9) frac.resize(9);
  frac.append(9 - frac.size(), '0');
  const Timestamp ns = (whole.empty() ? 0 : std::stoll(whole)) * 1'000'000'000LL +
                       std::stoll(frac);
  return negative ? -ns : ns;
}

void write_tum(std::ostream& os, const Trajectory& traj) {
  char buf[256];
  for (const auto& sp : traj) {
    const Vec3& t = sp.pose.translation();
    const auto q = sp.pose.quaternion();
    std::snprintf(buf, sizeof(buf), " %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    os << format_seconds(sp.stamp);
    if (sp.valid) {
      os << buf;
    } else {
      buf[std::strlen(buf) - 1] = '\0';
      os << buf << " 0\n";
    }
  }
}

void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_tum(os, traj);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_tum(std::istream& is) {
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string stamp;
    double v[7];
    ls >> stamp;
    for (double& x : v) ls >> x;
    if (!ls) {
      throw std::runtime_error("trajectory line " + std::to_string(lineno) +
                               ": expected 8 columns");
    }
    StampedPose sp;
    try {
      sp.stamp = parse_seconds(stamp);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    sp.pose = Pose::from_quaternion(Eigen::Quaterniond(v[6], v[3], v[4], v[5]),
                                    Vec3(v[0], v[1], v[2]));
    int mask = 1;
    if (ls >> mask) sp.valid = mask != 0;
    traj.push_back(sp);
  }
  return traj;
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_tum(is);
}

}  // namespace tslam::geom
