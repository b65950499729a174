#pragma once

#include "tslam/geom/trajectory.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslam::cli {

/// Dataset layout under the root directory.
inline constexpr const char* kImagesDir = "images";
inline constexpr const char* kCloudsDir = "clouds";
inline constexpr const char* kCalibFile = "calib.txt";
inline constexpr const char* kGroundTruthFile = "groundtruth.txt";
inline constexpr const char* kVocabularyFile = "vocabulary.bin";

/// Missing, malformed or unpairable dataset content.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "x,y,z" per line, meters, LiDAR frame. Blank lines and '#' comments are
/// skipped. Throws DataError naming the offending line.
[[nodiscard]] std::vector<Vec3> read_cloud_csv(const std::filesystem::path& path);
void write_cloud_csv(const std::filesystem::path& path, std::span<const Vec3> points);

struct DatasetEntry {
  geom::Timestamp stamp = 0;  // image time
  std::filesystem::path image;
  std::filesystem::path cloud;
  std::optional<std::filesystem::path> corners;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<DatasetEntry> frames;  // time ordered
  std::filesystem::path calibration;
  std::optional<std::filesystem::path> groundtruth;
  std::optional<std::filesystem::path> vocabulary;
  std::size_t unpaired_images = 0;
  std::size_t unpaired_clouds = 0;
  std::vector<std::string> warnings;
};

/// Scans images/<ns>.pgm and clouds/<ns>.csv and pairs them one-to-one by
/// nearest timestamp within `tolerance_ns`. Throws DataError when a
/// directory or calib.txt is missing or nothing pairs.
[[nodiscard]] DatasetManifest load_dataset(const std::filesystem::path& root,
                                           geom::Timestamp tolerance_ns = 5'000'000);

/// "<ns>.pgm" style file name.
[[nodiscard]] std::string stamp_name(geom::Timestamp stamp, const std::string& extension);

}  // namespace tslam::cli
