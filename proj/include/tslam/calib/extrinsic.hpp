#pragma once

#include "tslam/calib/chessboard.hpp"
#include "tslam/calib/plane.hpp"
#include "tslam/geom/camera.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace tslam::calib {

// Extrinsic convention: `lidar_from_camera` maps camera-frame points into
// the LiDAR frame, p_v = R p_c + t.

/// One board seen by both sensors.
struct PlanePair {
  PlaneModel cam_plane;
  PlaneModel lidar_plane;
  std::vector<Vec3> cam_points;
};

/// Points of `cloud` (LiDAR frame) whose projection through the initial
/// extrinsic lands inside `board_polygon`, then RANSAC. std::nullopt when the
/// observation is rejected.
[[nodiscard]] std::optional<PlaneModel> segment_lidar_plane(std::span<const Vec3> cloud,
                                                            const std::vector<Vec2>& board_polygon,
                                                            const Pose& lidar_from_camera_init,
                                                            const CameraIntrinsics& K,
                                                            const RansacOptions& opts = {});

/// Score exp(-(na.nb + nb.nc + na.nc)) up to the normalizer; higher is better.
[[nodiscard]] double triplet_log_score(const Vec3& na, const Vec3& nb, const Vec3& nc);

/// Index triple (i < j < k) of camera-frame normals maximizing the
/// dissimilarity score. Throws std::invalid_argument for < 3 pairs and
/// DegenerateGeometry when every normal is within 5 deg of every other.
[[nodiscard]] std::array<std::size_t, 3> select_plane_triplet(std::span<const PlanePair> pairs);

/// R maximizing sum n_v^T R n_c via SVD with reflection correction.
/// Throws DegenerateGeometry when the normal covariance has rank < 2.
[[nodiscard]] Mat3 solve_rotation(std::span<const PlanePair> triplet);

/// Closed-form least-squares translation for fixed R. Throws
/// DegenerateGeometry when the normal matrix condition number exceeds 1e8.
[[nodiscard]] Vec3 solve_translation(std::span<const PlanePair> triplet, const Mat3& R);

/// sum over pairs and camera points of (n_v^T (R p + t) + d_v)^2
[[nodiscard]] double point_to_plane_cost(std::span<const PlanePair> pairs, const Pose& T);

struct RefineOptions {
  int max_iterations = 200;
  double min_decrease = 1e-10;
  int max_backtracks = 10;
};

struct RefineResult {
  Pose lidar_from_camera;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;  // accepted steps
  bool diverged = false;
  std::vector<double> cost_history;  // one entry per accepted iterate, incl. start
};

/// First-order refinement of the point-to-plane cost over SE(3)
/// (preconditioned Polak-Ribiere conjugate gradient on the twist with
/// backtracking line search). Final cost never exceeds the initial cost.
[[nodiscard]] RefineResult refine_extrinsic(std::span<const PlanePair> pairs, const Pose& init,
                                            const RefineOptions& opts = {});

/// Camera plane from the board, LiDAR plane from segmentation.
struct CalibrationFrame {
  std::vector<Vec2> corners;
  std::vector<Vec3> cloud;  // LiDAR frame
};

struct CalibrationOptions {
  ChessboardOptions chessboard;
  RansacOptions ransac;
  RefineOptions refine;
};

struct CalibrationResult {
  Pose lidar_from_camera;
  Pose closed_form;
  std::array<std::size_t, 3> triplet{};
  std::vector<PlanePair> pairs;
  std::size_t rejected = 0;
  RefineResult refine;
};

/// Full plane-based calibration from a temporal stream of board observations.
[[nodiscard]] CalibrationResult calibrate(std::span<const CalibrationFrame> frames,
                                          const BoardGeometry& board, const CameraIntrinsics& K,
                                          const Pose& lidar_from_camera_init,
                                          const CalibrationOptions& opts = {});

/// Text calibration file (see README for the layout).
struct CalibrationFile {
  Pose lidar_from_camera;
  CameraIntrinsics intrinsics;
  std::optional<BoardGeometry> board;
};

void write_calibration(const std::filesystem::path& path, const CalibrationFile& calib);
[[nodiscard]] CalibrationFile read_calibration(const std::filesystem::path& path);

}  // namespace tslam::calib
