#include "tslam/cli/dataset.hpp"

#include "tslam/imgproc/pgm.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tslam::cli {

namespace fs = std::filesystem;

namespace {

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::map<geom::Timestamp, fs::path> scan(const fs::path& dir, const std::string& ext,
                                         std::vector<std::string>& warnings) {
  std::map<geom::Timestamp, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ext || p.stem().extension() == ".corners") continue;
    try {
      out.emplace(imgproc::stamp_from_filename(p), p);
    } catch (const std::exception&) {
      warnings.push_back("skipping " + p.string() + ": name is not a timestamp");
    }
  }
  return out;
}

}  // namespace

std::vector<Vec3> read_cloud_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open cloud " + path.string());
  std::vector<Vec3> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    double v[3];
    std::string_view rest(line);
    bool ok = true;
    for (int k = 0; k < 3 && ok; ++k) {
      const auto comma = rest.find(',');
      if ((k < 2) != (comma != std::string_view::npos)) {
        ok = false;
        break;
      }
      ok = parse_double(rest.substr(0, comma), v[k]);
      if (k < 2) rest.remove_prefix(comma + 1);
    }
    if (!ok) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'x,y,z'");
    }
    out.emplace_back(v[0], v[1], v[2]);
  }
  return out;
}

void write_cloud_csv(const fs::path& path, std::span<const Vec3> points) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  char buf[96];
  for (const auto& p : points) {
    const int n = std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.x(), p.y(), p.z());
    os.write(buf, n);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string stamp_name(geom::Timestamp stamp, const std::string& extension) {
  return std::to_string(stamp) + extension;
}

DatasetManifest load_dataset(const fs::path& root, geom::Timestamp tolerance_ns) {
  std::vector<std::string> missing;
  const fs::path images = root / kImagesDir;
  const fs::path clouds = root / kCloudsDir;
  const fs::path calib = root / kCalibFile;
  if (!fs::is_directory(images)) missing.push_back(std::string(kImagesDir) + "/");
  if (!fs::is_directory(clouds)) missing.push_back(std::string(kCloudsDir) + "/");
  if (!fs::is_regular_file(calib)) missing.push_back(kCalibFile);
  if (!missing.empty()) {
    std::string msg = "dataset " + root.string() + " is missing:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }

  DatasetManifest m;
  m.root = root;
  m.calibration = calib;
  if (fs::is_regular_file(root / kGroundTruthFile)) m.groundtruth = root / kGroundTruthFile;
  if (fs::is_regular_file(root / kVocabularyFile)) m.vocabulary = root / kVocabularyFile;

  const auto image_files = scan(images, ".pgm", m.warnings);
  const auto cloud_files = scan(clouds, ".csv", m.warnings);
  if (image_files.empty() || cloud_files.empty()) {
    throw DataError("dataset " + root.string() + ": " + std::to_string(image_files.size()) +
                    " images and " + std::to_string(cloud_files.size()) + " clouds found; need both");
  }

  // Greedy one-to-one pairing in time order.
  std::map<geom::Timestamp, fs::path> free_clouds = cloud_files;
  for (const auto& [stamp, image] : image_files) {
    auto it = free_clouds.lower_bound(stamp);
    auto best = free_clouds.end();
    geom::Timestamp best_gap = tolerance_ns + 1;
    if (it != free_clouds.end() && it->first - stamp < best_gap) {
      best = it;
      best_gap = it->first - stamp;
    }
    if (it != free_clouds.begin()) {
      auto prev = std::prev(it);
      if (stamp - prev->first < best_gap) {
        best = prev;
        best_gap = stamp - prev->first;
      }
    }
    if (best == free_clouds.end() || best_gap > tolerance_ns) {
      ++m.unpaired_images;
      continue;
    }
    DatasetEntry e;
    e.stamp = stamp;
    e.image = image;
    e.cloud = best->second;
    const fs::path corners = images / (std::to_string(stamp) + ".corners.csv");
    if (fs::is_regular_file(corners)) e.corners = corners;
    m.frames.push_back(std::move(e));
    free_clouds.erase(best);
  }
  m.unpaired_clouds = free_clouds.size();
  if (m.frames.empty()) {
    char tol[32];
    std::snprintf(tol, sizeof(tol), "%g", static_cast<double>(tolerance_ns) / 1e6);
    throw DataError("dataset " + root.string() + ": no image/cloud pairs within " + tol +
                    " ms; dropped " +
                    std::to_string(m.unpaired_images) + " images and " +
                    std::to_string(m.unpaired_clouds) + " clouds");
  }
  if (m.unpaired_images > 0) {
    m.warnings.push_back(std::to_string(m.unpaired_images) + " images without a cloud dropped");
  }
  if (m.unpaired_clouds > 0) {
    m.warnings.push_back(std::to_string(m.unpaired_clouds) + " clouds without an image dropped");
  }
  return m;
}

}  // namespace tslam::cli
