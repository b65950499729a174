#include "tslam/calib/plane.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace tslam::calib {

PlaneModel fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw DegenerateGeometry("plane fit: fewer than 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 q = p - mean;
    cov += q * q.transpose();
  }
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  // Rank check: the two in-plane directions must both carry spread.
  if (ev(1) <= 1e-12 * std::max(ev(2), 1e-300) || ev(2) <= 0.0) {
    throw DegenerateGeometry("plane fit: points are collinear or coincident");
  }
  PlaneModel plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.d = -plane.normal.dot(mean);
  plane.orient_toward_origin();
  plane.inliers.assign(points.begin(), points.end());
  return plane;
}

std::optional<PlaneModel> ransac_plane(std::span<const Vec3> points, const RansacOptions& opts) {
  if (points.size() < std::max<std::size_t>(3, opts.min_inliers)) return std::nullopt;
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  std::size_t best_count = 0;
  Vec3 best_n = Vec3::Zero();
  double best_d = 0.0;
  for (int trial = 0; trial < opts.iterations; ++trial) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    const std::size_t k = pick(rng);
    const Vec3 cross = (points[j] - points[i]).cross(points[k] - points[i]);
    const double len = cross.norm();
    const double span_scale = (points[j] - points[i]).norm() * (points[k] - points[i]).norm();
    if (!(len > 1e-9 * span_scale) || len == 0.0) continue;  // collinear sample
    const Vec3 n = cross / len;
    const double d = -n.dot(points[i]);
    std::size_t count = 0;
    for (const auto& p : points) {
      if (std::abs(n.dot(p) + d) <= opts.threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_n = n;
      best_d = d;
    }
  }
  if (best_count < opts.min_inliers) return std::nullopt;

  std::vector<Vec3> inliers;
  inliers.reserve(best_count);
  for (const auto& p : points) {
    if (std::abs(best_n.dot(p) + best_d) <= opts.threshold) inliers.push_back(p);
  }
  PlaneModel refit;
  try {
    refit = fit_plane(inliers);
  } catch (const DegenerateGeometry&) {
    return std::nullopt;
  }
  // Keep only refit inliers so the model invariant holds.
  std::vector<Vec3> kept;
  kept.reserve(inliers.size());
  for (const auto& p : points) {
    if (std::abs(refit.signed_distance(p)) <= opts.threshold) kept.push_back(p);
  }
  if (kept.size() < opts.min_inliers) return std::nullopt;
  refit.inliers = std::move(kept);
  return refit;
}

}  // namespace tslam::calib
