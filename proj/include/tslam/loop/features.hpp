#pragma once

#include "tslam/imgproc/image.hpp"
#include "tslam/loop/bow.hpp"

#include <vector>

namespace tslam::loop {

class Vocabulary;

struct FeatureOptions {
  int fast_threshold = 12;  // 8-bit intensity
  std::size_t max_features = 500;
  int grid_cols = 8;
  int grid_rows = 8;
  std::size_t min_features = 20;
};

/// FAST-9 corners with Harris ranking, 3x3 non-maximum suppression and grid
/// bucketing. Keypoints keep a border wide enough for the descriptor patch.
[[nodiscard]] std::vector<Keypoint> detect_corners(const Image8& img, const FeatureOptions& opts = {});

/// Intensity-centroid orientation over a radius-15 disk.
[[nodiscard]] float intensity_centroid_angle(const Image8& img, int x, int y);

/// Steered 256-bit intensity-comparison descriptors on a smoothed copy.
[[nodiscard]] std::vector<Descriptor> describe(const Image8& img, std::vector<Keypoint>& keypoints);

/// Keypoints + descriptors; the BoW vector is filled when a vocabulary is given.
[[nodiscard]] DescriptorBag extract_features(const Image8& img, const Vocabulary* vocabulary,
                                             const FeatureOptions& opts = {});

/// Index of the nearest descriptor in `set` (first on ties), -1 when empty.
[[nodiscard]] int nearest(const Descriptor& d, const std::vector<Descriptor>& set);

/// Pixel margin kept from the image edge by the detector.
inline constexpr int kPatchBorder = 19;

}  // namespace tslam::loop
