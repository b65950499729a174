#include "tslam/odom/tracker.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tslam::odom {

TrackResult track(const Frame& prev, const Pyramid& cur, const CameraIntrinsics& K,
                  const Pose& T_init, const TrackOptions& opts) {
  if (prev.points().size() < opts.min_points) {
    throw std::invalid_argument("track: reference frame has " +
                                std::to_string(prev.points().size()) + " points, need " +
                                std::to_string(opts.min_points));
  }
  const std::vector<AlignmentTarget> targets{{&prev, Pose::identity()}};
  const AlignResult a = align(targets, cur, K, T_init, opts.align);

  TrackResult out;
  out.relative = a.X;
  auto& d = out.diagnostics;
  d.cost = a.cost;
  d.weighted_rms = a.weighted_rms;
  d.sigma = a.sigma;
  d.valid_ratio = a.valid_ratio();
  d.inlier_ratio = a.inlier_ratio();
  d.iterations = a.iterations;
  d.rank_deficient = a.rank_deficient;
  d.lost = d.valid_ratio < opts.min_valid_ratio || d.weighted_rms > opts.max_weighted_rms ||
           a.rank_deficient;
  return out;
}

RefineResult refine_local(const Pyramid& cur, const CameraIntrinsics& K, const Pose& pose_init,
                          const std::vector<const Keyframe*>& window, const RefineOptions& opts) {
  if (window.empty()) throw std::invalid_argument("refine_local: empty keyframe window");
  // r = I_f(pi(T_f^-1 T_kf p)) - I_kf(pi(p)); optimize X = T_f^-1.
  std::vector<AlignmentTarget> targets;
  targets.reserve(window.size());
  for (const Keyframe* kf : window) targets.push_back({kf->frame.get(), kf->pose});

  const Pose X_init = pose_init.inverse();
  const AlignResult a = align(targets, cur, K, X_init, opts.align);

  RefineResult out;
  out.alignment = a;
  const int level = std::max(opts.align.finest_level, 0);
  const auto lvl = static_cast<std::size_t>(level);
  const CameraIntrinsics Kl = K.at_level(level);
  // Compare both poses under one robust scale.
  const double sigma = a.sigma > 0.0 ? a.sigma : 1.0;
  const CostEvaluation before = evaluate_cost(targets, cur.level(lvl), Kl, lvl, X_init, sigma,
                                              opts.align.nu, 1.0, 0.0, opts.align.z_min);
  const CostEvaluation after = evaluate_cost(targets, cur.level(lvl), Kl, lvl, a.X, sigma,
                                             opts.align.nu, 1.0, 0.0, opts.align.z_min);
  out.initial_cost = before.weight_sum > 0 ? before.cost / before.weight_sum : INFINITY;
  out.final_cost = after.weight_sum > 0 ? after.cost / after.weight_sum : INFINITY;
  if (out.final_cost <= out.initial_cost) {
    out.pose = a.X.inverse();
  } else {
    out.pose = pose_init;
    out.fell_back = true;
    out.final_cost = out.initial_cost;
  }
  return out;
}

bool should_create_keyframe(const Pose& relative_to_last, double valid_ratio,
                            const KeyframePolicy& policy) {
  const double angle_deg =
      geom::rotation_angle(relative_to_last.rotation()) * 180.0 / std::numbers::pi;
  return relative_to_last.translation().norm() > policy.max_translation ||
         angle_deg > policy.max_rotation_deg || valid_ratio < policy.min_valid_ratio;
}

}  // namespace tslam::odom
