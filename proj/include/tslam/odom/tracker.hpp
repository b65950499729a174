#pragma once

#include "tslam/loop/bow.hpp"
#include "tslam/odom/direct.hpp"
#include "tslam/odom/frame.hpp"

#include <deque>
#include <memory>
#include <vector>

namespace tslam::odom {

struct TrackOptions {
  AlignOptions align;
  double min_valid_ratio = 0.3;
  double max_weighted_rms = 500.0;  // raw counts
  std::size_t min_points = 50;
};

struct TrackDiagnostics {
  double cost = 0.0;
  double weighted_rms = 0.0;
  double sigma = 0.0;
  double valid_ratio = 0.0;
  double inlier_ratio = 0.0;
  std::vector<int> iterations;  // coarse to fine
  bool rank_deficient = false;
  bool lost = false;
};

struct TrackResult {
  Pose relative;  // T_prev^cur: maps previous-frame points into the current frame
  TrackDiagnostics diagnostics;
};

/// Frame-to-frame direct tracking of `cur` against `prev`'s sparse points.
/// Throws std::invalid_argument when prev has fewer than min_points points.
[[nodiscard]] TrackResult track(const Frame& prev, const Pyramid& cur, const CameraIntrinsics& K,
                                const Pose& T_init, const TrackOptions& opts = {});

struct Keyframe {
  int id = 0;
  std::shared_ptr<const Frame> frame;
  Pose pose;  // world
  loop::DescriptorBag bag;
  bool in_loop_database = false;

  [[nodiscard]] geom::Timestamp stamp() const { return frame->stamp(); }
};

struct RefineOptions {
  AlignOptions align{.coarsest_level = 0};
};

struct RefineResult {
  Pose pose;  // world
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool fell_back = false;
  AlignResult alignment;
};

/// Multi-keyframe refinement of the current frame's world pose with the
/// keyframe poses held fixed. Falls back to `pose_init` when the weighted
/// cost would increase. Throws std::invalid_argument for an empty window.
[[nodiscard]] RefineResult refine_local(const Pyramid& cur, const CameraIntrinsics& K,
                                        const Pose& pose_init,
                                        const std::vector<const Keyframe*>& window,
                                        const RefineOptions& opts = {});

struct KeyframePolicy {
  double max_translation = 0.5;  // m
  double max_rotation_deg = 10.0;
  double min_valid_ratio = 0.6;
};

/// `relative_to_last` is the motion since the last keyframe.
[[nodiscard]] bool should_create_keyframe(const Pose& relative_to_last, double valid_ratio,
                                          const KeyframePolicy& policy = {});

}  // namespace tslam::odom
