#pragma once

#include "tslam/geom/camera.hpp"
#include "tslam/imgproc/image.hpp"
#include "tslam/odom/frame.hpp"
#include "tslam/odom/robust.hpp"

#include <optional>
#include <vector>

namespace tslam::odom {

/// Bilinear value + half-pixel central-difference gradient on a float image.
struct BilinearSampler {
  const FloatImage* image;

  [[nodiscard]] std::optional<imgproc::SampleWithGradient> sample(const Vec2& u) const {
    return imgproc::sample_with_gradient(*image, u);
  }
  [[nodiscard]] std::optional<double> value(const Vec2& u) const {
    return imgproc::sample_bilinear(*image, u);
  }
};

struct ResidualJacobian {
  double residual = 0.0;
  Vec6 jacobian = Vec6::Zero();  // d r / d xi, xi = [angular, linear], left update
  double sample = 0.0;           // raw I_cur value before gain/bias
};

/// r = gain * I_cur(pi(T_rel p) + offset) + bias - ref_value, with its
/// derivative w.r.t. a left twist on T_rel. `Sampler` provides
/// sample(Vec2) -> optional<{value, gradient}>.
template <class Sampler>
[[nodiscard]] std::optional<ResidualJacobian> residual_jacobian(
    const Sampler& cur, const CameraIntrinsics& K, const Vec3& p_ref, const Pose& T_rel,
    const Vec2& offset, double ref_value, double gain = 1.0, double bias = 0.0,
    double z_min = 0.1) {
  const Vec3 q = T_rel * p_ref;
  if (!(q.z() > z_min)) return std::nullopt;
  const Vec2 u = geom::project_unchecked(q, K) + offset;
  const auto s = cur.sample(u);
  if (!s) return std::nullopt;
  const double iz = 1.0 / q.z();
  const double gx = s->gradient.x() * K.fx * iz;
  const double gy = s->gradient.y() * K.fy * iz;
  const Vec3 a(gx, gy, -(gx * q.x() + gy * q.y()) * iz);  // grad^T du/dq
  ResidualJacobian out;
  out.sample = s->value;
  out.residual = gain * s->value + bias - ref_value;
  out.jacobian << gain * q.cross(a), gain * a;
  return out;
}

/// Thermographic residual I_cur(pi(T_rel p) + offset) - temp_ref; nullopt
/// when the projection leaves the image.
[[nodiscard]] std::optional<double> residual(const Vec3& p_ref, const Pose& T_rel,
                                             const FloatImage& I_cur, const CameraIntrinsics& K,
                                             double temp_ref, const Vec2& offset = Vec2::Zero());

/// Reference points contributing residuals, T_rel = X * anchor.
struct AlignmentTarget {
  const Frame* frame = nullptr;
  Pose anchor;
};

struct AlignOptions {
  double nu = 5.0;
  int max_iterations = 30;
  double min_update = 1e-6;
  /// Levels visited run from `coarsest_level` (clamped to the pyramid) down
  /// to `finest_level`; -1 means the coarsest available.
  int coarsest_level = -1;
  int finest_level = 0;
  /// Alternate a closed-form gain/bias fit with the pose steps.
  bool estimate_affine = false;
  double z_min = 0.1;
};

struct StepRecord {
  int level = 0;
  double cost_before = 0.0;  // mean weighted cost at the iteration's sigma
  double cost_after = 0.0;
};

struct AlignResult {
  Pose X;
  double gain = 1.0;
  double bias = 0.0;
  std::vector<int> iterations;  // per visited level, coarse to fine
  double sigma = 0.0;
  double cost = 0.0;          // weighted sum of squares at the final pose, finest level
  double weighted_rms = 0.0;  // sqrt(cost / weight sum)
  std::size_t valid = 0;
  std::size_t total = 0;
  std::size_t inliers = 0;    // |r| <= 3 sigma
  bool rank_deficient = false;
  std::vector<StepRecord> steps;

  [[nodiscard]] double valid_ratio() const {
    return total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
  }
  [[nodiscard]] double inlier_ratio() const {
    return total ? static_cast<double>(inliers) / static_cast<double>(total) : 0.0;
  }
};

/// Iteratively reweighted Gauss-Newton (Levenberg fallback) over a left
/// twist on X, coarse to fine. Residuals of all targets are pooled.
[[nodiscard]] AlignResult align(const std::vector<AlignmentTarget>& targets, const Pyramid& cur,
                                const CameraIntrinsics& K, const Pose& X_init,
                                const AlignOptions& opts, double gain = 1.0, double bias = 0.0);

/// Weighted cost and validity at a fixed pose, level and sigma.
struct CostEvaluation {
  double cost = 0.0;
  double weight_sum = 0.0;
  std::size_t valid = 0;
  std::size_t total = 0;
};
[[nodiscard]] CostEvaluation evaluate_cost(const std::vector<AlignmentTarget>& targets,
                                           const FloatImage& cur, const CameraIntrinsics& K,
                                           std::size_t level, const Pose& X, double sigma,
                                           double nu, double gain = 1.0, double bias = 0.0,
                                           double z_min = 0.1);

}  // namespace tslam::odom
