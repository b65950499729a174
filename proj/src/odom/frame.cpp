#include "tslam/odom/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tslam::odom {

PatchPattern PatchPattern::sparse8() {
  return PatchPattern{{Eigen::Vector2i(0, 0), Eigen::Vector2i(0, -2), Eigen::Vector2i(-1, -1),
                       Eigen::Vector2i(1, -1), Eigen::Vector2i(-2, 0), Eigen::Vector2i(2, 0),
                       Eigen::Vector2i(-1, 1), Eigen::Vector2i(0, 2)}};
}

void PatchPattern::validate() const {
  bool center = false;
  for (const auto& o : offsets) {
    if (o.x() == 0 && o.y() == 0) center = true;
    if (o.cast<double>().norm() > 3.0) {
      throw std::invalid_argument("patch pattern: offset outside radius 3");
    }
  }
  if (!center) throw std::invalid_argument("patch pattern: (0,0) missing");
}

Frame::Frame(ThermalImage image, std::span<const Vec3> camera_points, const CameraIntrinsics& K,
             const FrameOptions& opts)
    : image_(std::move(image)), K_(K), pattern_(opts.pattern) {
  pattern_.validate();
  pyramid_ = imgproc::build_pyramid(image_, opts.pyramid_levels);
  const FloatImage& fine = pyramid_.level(0);

  struct Candidate {
    std::size_t index;
    double score;
    int bucket;
  };
  const int bucket = std::max(1, opts.bucket_size);
  const int buckets_x = (K.width + bucket - 1) / bucket;
  std::vector<Candidate> candidates;
  candidates.reserve(camera_points.size());
  const geom::ProjectOptions popts{opts.z_min, opts.border};
  for (std::size_t i = 0; i < camera_points.size(); ++i) {
    const Vec3& p = camera_points[i];
    if (!p.allFinite()) continue;
    const auto u = geom::project(p, K, popts);
    if (!u) continue;
    const auto g = imgproc::sample_gradient(fine, *u);
    if (!g) continue;
    const int bx = static_cast<int>(u->x()) / bucket;
    const int by = static_cast<int>(u->y()) / bucket;
    candidates.push_back({i, g->squaredNorm(), by * buckets_x + bx});
  }

  // Round-robin over buckets, strongest gradient first inside each bucket.
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.bucket != b.bucket) return a.bucket < b.bucket;
    return a.score > b.score;
  });
  std::vector<std::pair<int, std::size_t>> order;  // (rank in bucket, candidate)
  order.reserve(candidates.size());
  for (std::size_t i = 0, rank = 0; i < candidates.size(); ++i) {
    rank = (i > 0 && candidates[i].bucket == candidates[i - 1].bucket) ? rank + 1 : 0;
    order.emplace_back(static_cast<int>(rank), i);
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return candidates[a.second].score > candidates[b.second].score;
  });
  const std::size_t keep = std::min(opts.max_points, order.size());
  std::vector<std::size_t> chosen;
  chosen.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) chosen.push_back(candidates[order[i].second].index);
  std::sort(chosen.begin(), chosen.end());
  points_.reserve(chosen.size());
  for (std::size_t idx : chosen) points_.push_back(camera_points[idx]);

  const std::size_t np = pattern_.size();
  reference_.resize(pyramid_.size());
  for (std::size_t l = 0; l < pyramid_.size(); ++l) {
    const CameraIntrinsics Kl = K_.at_level(static_cast<int>(l));
    auto& ref = reference_[l];
    ref.assign(points_.size() * np, std::numeric_limits<float>::quiet_NaN());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Vec2 u = geom::project_unchecked(points_[i], Kl);
      for (std::size_t k = 0; k < np; ++k) {
        const auto v = imgproc::sample_bilinear(pyramid_.level(l),
                                                u + pattern_.offsets[k].cast<double>());
        if (v) ref[i * np + k] = static_cast<float>(*v);
      }
    }
  }
}

}  // namespace tslam::odom
