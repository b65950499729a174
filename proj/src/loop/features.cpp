#include "tslam/loop/features.hpp"

#include "tslam/loop/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tslam::loop {

namespace {

constexpr int kCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},
                                {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

bool is_fast9(const Image8& img, int x, int y, int t) {
  const int c = img.at(x, y);
  int brighter = 0;
  int darker = 0;
  for (int i = 0; i < 25; ++i) {
    const int v = img.at(x + kCircle[i % 16][0], y + kCircle[i % 16][1]);
    if (v > c + t) {
      ++brighter;
      darker = 0;
    } else if (v < c - t) {
      ++darker;
      brighter = 0;
    } else {
      brighter = darker = 0;
    }
    if (brighter >= 9 || darker >= 9) return true;
  }
  return false;
}

float harris_score(const Image8& img, int x, int y) {
  double sxx = 0, syy = 0, sxy = 0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const int px = x + dx;
      const int py = y + dy;
      const double gx = (img.at(px + 1, py) - img.at(px - 1, py)) * 0.5;
      const double gy = (img.at(px, py + 1) - img.at(px, py - 1)) * 0.5;
      sxx += gx * gx;
      syy += gy * gy;
      sxy += gx * gy;
    }
  }
  const double trace = sxx + syy;
  return static_cast<float>(sxx * syy - sxy * sxy - 0.04 * trace * trace);
}

// Comparison pairs inside a radius-13 disk, fixed generator for a stable layout.
struct PatternPair {
  int x1, y1, x2, y2;
};

const std::vector<PatternPair>& brief_pattern() {
  static const std::vector<PatternPair> pattern = [] {
    std::mt19937 rng(0x7451a3u);
    const auto coord = [&rng]() {
      while (true) {
        // Roughly Gaussian-concentrated: average of two uniforms on [-15, 15].
        const int a = static_cast<int>(rng() % 31u) - 15;
        const int b = static_cast<int>(rng() % 31u) - 15;
        const int c = static_cast<int>(rng() % 31u) - 15;
        const int d = static_cast<int>(rng() % 31u) - 15;
        const int x = (a + b) / 2;
        const int y = (c + d) / 2;
        if (x * x + y * y <= 13 * 13) return std::pair{x, y};
      }
    };
    std::vector<PatternPair> out;
    out.reserve(256);
    while (out.size() < 256) {
      const auto [x1, y1] = coord();
      const auto [x2, y2] = coord();
      if (x1 == x2 && y1 == y2) continue;
      out.push_back({x1, y1, x2, y2});
    }
    return out;
  }();
  return pattern;
}

Image8 smooth(const Image8& img) {
  // Separable binomial [1 4 6 4 1] / 16.
  constexpr int k[5] = {1, 4, 6, 4, 1};
  const int w = img.width();
  const int h = img.height();
  std::vector<int> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * img.at(std::clamp(x + i, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  Image8 out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int i = -2; i <= 2; ++i) {
        s += k[i + 2] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      }
      out.at(x, y) = static_cast<std::uint8_t>((s + 128) / 256);
    }
  }
  return out;
}

bool keypoint_order(const Keypoint& a, const Keypoint& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

}  // namespace

std::vector<Keypoint> detect_corners(const Image8& img, const FeatureOptions& opts) {
  const int w = img.width();
  const int h = img.height();
  if (w <= 2 * kPatchBorder || h <= 2 * kPatchBorder) return {};

  imgproc::Image<float> score(w, h, 0.0f);
  for (int y = kPatchBorder; y < h - kPatchBorder; ++y) {
    for (int x = kPatchBorder; x < w - kPatchBorder; ++x) {
      if (is_fast9(img, x, y, opts.fast_threshold)) {
        score.at(x, y) = std::max(harris_score(img, x, y), 1e-6f);
      }
    }
  }
  std::vector<Keypoint> corners;
  for (int y = kPatchBorder; y < h - kPatchBorder; ++y) {
    for (int x = kPatchBorder; x < w - kPatchBorder; ++x) {
      const float s = score.at(x, y);
      if (s <= 0.0f) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && score.at(x + dx, y + dy) > s) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) corners.push_back({static_cast<float>(x), static_cast<float>(y), 0.0f, s});
    }
  }

  // Grid bucketing: a per-cell quota first, then the strongest leftovers.
  const int cells = std::max(1, opts.grid_cols * opts.grid_rows);
  const std::size_t quota = (opts.max_features + cells - 1) / static_cast<std::size_t>(cells);
  std::vector<std::vector<Keypoint>> grid(static_cast<std::size_t>(cells));
  for (const auto& kp : corners) {
    const int cx = std::min(opts.grid_cols - 1, static_cast<int>(kp.x) * opts.grid_cols / w);
    const int cy = std::min(opts.grid_rows - 1, static_cast<int>(kp.y) * opts.grid_rows / h);
    grid[static_cast<std::size_t>(cy * opts.grid_cols + cx)].push_back(kp);
  }
  std::vector<Keypoint> selected;
  std::vector<Keypoint> leftover;
  for (auto& cell : grid) {
    std::sort(cell.begin(), cell.end(), keypoint_order);
    for (std::size_t i = 0; i < cell.size(); ++i) {
      (i < quota ? selected : leftover).push_back(cell[i]);
    }
  }
  std::sort(selected.begin(), selected.end(), keypoint_order);
  if (selected.size() > opts.max_features) selected.resize(opts.max_features);
  std::sort(leftover.begin(), leftover.end(), keypoint_order);
  for (const auto& kp : leftover) {
    if (selected.size() >= opts.max_features) break;
    selected.push_back(kp);
  }
  std::sort(selected.begin(), selected.end(), keypoint_order);
  return selected;
}

float intensity_centroid_angle(const Image8& img, int x, int y) {
  constexpr int r = 15;
  double m01 = 0.0;
  double m10 = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const double v = img.at(x + dx, y + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  return static_cast<float>(std::atan2(m01, m10));
}

std::vector<Descriptor> describe(const Image8& img, std::vector<Keypoint>& keypoints) {
  const Image8 blurred = smooth(img);
  const auto& pattern = brief_pattern();
  std::vector<Descriptor> out;
  out.reserve(keypoints.size());
  for (auto& kp : keypoints) {
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    kp.angle = intensity_centroid_angle(img, x, y);
    const double c = std::cos(kp.angle);
    const double s = std::sin(kp.angle);
    const auto at = [&](int px, int py) {
      const int rx = static_cast<int>(std::lround(c * px - s * py));
      const int ry = static_cast<int>(std::lround(s * px + c * py));
      return blurred.at(x + rx, y + ry);
    };
    Descriptor d{};
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      const auto& p = pattern[i];
      if (at(p.x1, p.y1) < at(p.x2, p.y2)) d[i / 64] |= (std::uint64_t{1} << (i % 64));
    }
    out.push_back(d);
  }
  return out;
}

DescriptorBag extract_features(const Image8& img, const Vocabulary* vocabulary,
                               const FeatureOptions& opts) {
  DescriptorBag bag;
  bag.keypoints = detect_corners(img, opts);
  bag.descriptors = describe(img, bag.keypoints);
  if (vocabulary != nullptr && bag.descriptors.size() >= opts.min_features) {
    bag.bow = vocabulary->transform(bag.descriptors);
  }
  return bag;
}

int nearest(const Descriptor& d, const std::vector<Descriptor>& set) {
  int best = -1;
  int best_dist = 257;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int dist = hamming(d, set[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace tslam::loop
