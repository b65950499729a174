#include "tslam/loop/alignment.hpp"

#include "tslam/loop/features.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace tslam::loop {

AffineAlignment align_affine(const odom::Frame& reference, const Pyramid& target,
                             const CameraIntrinsics& K, const Pose& T_init,
                             const AffineAlignOptions& opts) {
  const std::vector<odom::AlignmentTarget> targets{{&reference, Pose::identity()}};
  AffineAlignment out;
  out.alignment = odom::align(targets, target, K, T_init, opts.align);
  out.relative = out.alignment.X;
  // The solver fits reference ~= g * target + h; report the forward model.
  const double g = out.alignment.gain;
  const double h = out.alignment.bias;
  out.model = AffineModel{1.0 / g, -h / g};
  out.ok = g > 0.0 && std::isfinite(h) && !out.alignment.rank_deficient &&
           out.alignment.inlier_ratio() >= opts.min_inlier_ratio;
  return out;
}

double cross_validation_error(const Pose& T_c_to_kf, const Pose& T_kf_to_c) {
  try {
    return geom::log(T_kf_to_c * T_c_to_kf).norm();
  } catch (const geom::BranchAmbiguity&) {
    return INFINITY;
  }
}

bool cross_validate(const Pose& T_c_to_kf, const Pose& T_kf_to_c, double eps) {
  return cross_validation_error(T_c_to_kf, T_kf_to_c) < eps;
}

std::vector<std::optional<Vec3>> keypoint_positions(const std::vector<Keypoint>& keypoints,
                                                    const std::vector<Vec3>& camera_points,
                                                    const CameraIntrinsics& K, double radius_px) {
  std::vector<Vec2> px;
  std::vector<double> depth;
  for (const auto& p : camera_points) {
    if (auto u = geom::project(p, K)) {
      px.push_back(*u);
      depth.push_back(p.z());
    }
  }
  std::vector<std::optional<Vec3>> out(keypoints.size());
  const double r2 = radius_px * radius_px;
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    const Vec2 u(keypoints[k].x, keypoints[k].y);
    double best = r2;
    int idx = -1;
    for (std::size_t i = 0; i < px.size(); ++i) {
      const double d2 = (px[i] - u).squaredNorm();
      if (d2 <= best) {
        best = d2;
        idx = static_cast<int>(i);
      }
    }
    if (idx >= 0) out[k] = geom::unproject(u, depth[static_cast<std::size_t>(idx)], K);
  }
  return out;
}

std::optional<Pose> rigid_fit(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.size() < 3) return std::nullopt;
  Vec3 ms = Vec3::Zero();
  Vec3 md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= static_cast<double>(src.size());
  md /= static_cast<double>(src.size());
  Mat3 C = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) C += (dst[i] - md) * (src[i] - ms).transpose();
  Eigen::JacobiSVD<Mat3> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(1) > 1e-9 * std::max(sv(0), 1e-300))) return std::nullopt;
  Mat3 S = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) S(2, 2) = -1.0;
  const Mat3 R = svd.matrixU() * S * svd.matrixV().transpose();
  return Pose(R, md - R * ms);
}

std::optional<RansacPose> ransac_pose_from_matches(
    const std::vector<Descriptor>& ref_desc, const std::vector<std::optional<Vec3>>& ref_pts,
    const std::vector<Descriptor>& tgt_desc, const std::vector<std::optional<Vec3>>& tgt_pts,
    const RansacPoseOptions& opts) {
  // Mutual nearest neighbours with positions on both sides.
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (std::size_t i = 0; i < ref_desc.size(); ++i) {
    if (!ref_pts[i]) continue;
    const int j = nearest(ref_desc[i], tgt_desc);
    if (j < 0 || !tgt_pts[static_cast<std::size_t>(j)]) continue;
    if (hamming(ref_desc[i], tgt_desc[static_cast<std::size_t>(j)]) > opts.max_hamming) continue;
    if (nearest(tgt_desc[static_cast<std::size_t>(j)], ref_desc) != static_cast<int>(i)) continue;
    src.push_back(*ref_pts[i]);
    dst.push_back(*tgt_pts[static_cast<std::size_t>(j)]);
  }
  if (src.size() < std::max<std::size_t>(opts.min_inliers, 3)) return std::nullopt;

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);
  const double th2 = opts.threshold * opts.threshold;
  std::vector<std::size_t> best_inliers;
  for (int it = 0; it < opts.iterations; ++it) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const auto T = rigid_fit({src[a], src[b], src[c]}, {dst[a], dst[b], dst[c]});
    if (!T) continue;
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if ((*T * src[i] - dst[i]).squaredNorm() <= th2) inliers.push_back(i);
    }
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }
  if (best_inliers.size() < opts.min_inliers) return std::nullopt;
  std::vector<Vec3> s;
  std::vector<Vec3> d;
  for (std::size_t i : best_inliers) {
    s.push_back(src[i]);
    d.push_back(dst[i]);
  }
  const auto T = rigid_fit(s, d);
  if (!T) return std::nullopt;
  return RansacPose{*T, best_inliers.size()};
}

}  // namespace tslam::loop
