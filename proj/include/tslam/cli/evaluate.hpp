#pragma once

#include "tslam/geom/trajectory.hpp"

#include <vector>

namespace tslam::cli {

/// Least-squares similarity dst ~= s * R * src + t (Umeyama). With
/// `with_scale` false, s = 1.
struct Similarity {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  double scale = 1.0;

  [[nodiscard]] Vec3 operator*(const Vec3& p) const { return scale * (R * p) + t; }
};

/// Throws std::invalid_argument for mismatched sizes, fewer than 2 pairs or,
/// with scale, coincident source points. Collinear input yields some valid
/// rotation.
[[nodiscard]] Similarity umeyama(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                                 bool with_scale);

struct AteResult {
  double rmse = 0.0;
  double mean = 0.0;
  double max = 0.0;
  std::size_t matched = 0;  // estimate samples with a valid ground-truth position
  Similarity alignment;
};

/// Position RMSE of `est` against `gt` linearly interpolated at the estimate
/// timestamps. Samples outside the ground-truth span or next to a sample
/// flagged invalid are skipped. `scale` implies `align`. Throws
/// std::invalid_argument when fewer than 2 samples overlap.
[[nodiscard]] AteResult evaluate_ate(const geom::Trajectory& est, const geom::Trajectory& gt,
                                     bool align, bool scale);

}  // namespace tslam::cli
