#pragma once

#include "tslam/loop/bow.hpp"
#include "tslam/odom/direct.hpp"
#include "tslam/odom/frame.hpp"

#include <optional>
#include <vector>

namespace tslam::loop {

/// Temperature drift between two captures: target ~= a * reference + b.
struct AffineModel {
  double a = 1.0;
  double b = 0.0;  // raw counts
};

struct AffineAlignOptions {
  odom::AlignOptions align{.max_iterations = 50, .estimate_affine = true};
  double min_inlier_ratio = 0.3;
};

struct AffineAlignment {
  Pose relative;  // maps reference-frame points into the target frame
  AffineModel model;
  odom::AlignResult alignment;
  bool ok = false;
};

/// Pose and gain/bias between a reference frame and a target image,
/// alternating pose steps with a closed-form (a, b) fit. With
/// align.estimate_affine = false this is the plain thermographic alignment.
[[nodiscard]] AffineAlignment align_affine(const odom::Frame& reference, const Pyramid& target,
                                           const CameraIntrinsics& K, const Pose& T_init,
                                           const AffineAlignOptions& opts = {});

/// Consistency of the two loop estimates: |log(T_kf_to_c * T_c_to_kf)| < eps.
/// False when the composition sits on the log branch cut.
[[nodiscard]] bool cross_validate(const Pose& T_c_to_kf, const Pose& T_kf_to_c, double eps = 0.05);
[[nodiscard]] double cross_validation_error(const Pose& T_c_to_kf, const Pose& T_kf_to_c);

/// Camera-frame position of each keypoint from nearby sparse depth: the
/// depth of the closest frame point projecting within `radius_px`.
[[nodiscard]] std::vector<std::optional<Vec3>> keypoint_positions(
    const std::vector<Keypoint>& keypoints, const std::vector<Vec3>& camera_points,
    const CameraIntrinsics& K, double radius_px = 3.0);

struct RansacPoseOptions {
  int max_hamming = 64;
  int iterations = 300;
  double threshold = 0.15;  // m
  std::size_t min_inliers = 12;
  std::uint64_t seed = 1;
};

struct RansacPose {
  Pose relative;  // maps reference-frame points into the target frame
  std::size_t inliers = 0;
};

/// Rigid alignment of mutually-nearest descriptor matches with known 3-D
/// positions (three-point Kabsch hypotheses, least-squares refit).
[[nodiscard]] std::optional<RansacPose> ransac_pose_from_matches(
    const std::vector<Descriptor>& ref_desc, const std::vector<std::optional<Vec3>>& ref_pts,
    const std::vector<Descriptor>& tgt_desc, const std::vector<std::optional<Vec3>>& tgt_pts,
    const RansacPoseOptions& opts = {});

/// Least-squares rigid transform mapping src onto dst (Kabsch/Umeyama
/// without scale). Requires at least three non-collinear pairs.
[[nodiscard]] std::optional<Pose> rigid_fit(const std::vector<Vec3>& src,
                                            const std::vector<Vec3>& dst);

}  // namespace tslam::loop
