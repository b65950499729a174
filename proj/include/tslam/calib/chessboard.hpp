#pragma once

#include "tslam/calib/plane.hpp"
#include "tslam/geom/camera.hpp"

#include <filesystem>
#include <vector>

namespace tslam::calib {

/// Inner-corner grid of a chessboard. Corner (r, c) sits at
/// (c * square, r * square, 0) in the board frame.
struct BoardGeometry {
  int rows = 0;
  int cols = 0;
  double square = 0.0;  // m

  [[nodiscard]] std::vector<Vec3> corner_points() const;
};

struct BoardObservation {
  Pose camera_from_board;
  PlaneModel plane;               // camera frame, normal toward the camera
  std::vector<Vec3> cam_points;   // inner corners in the camera frame
  std::vector<Vec2> corners;      // pixels, row-major
  double rms_reprojection = 0.0;  // px
};

struct ChessboardOptions {
  /// Observations whose refined reprojection RMS exceeds this are rejected.
  double max_rms_px = 1.0;
  int refine_iterations = 20;
};

/// Planar pose from row-major corner pixels: normalized DLT homography,
/// decomposition with K, then Gauss-Newton on reprojection error.
/// Throws std::invalid_argument for < 4 corners or a count mismatch and
/// DegenerateGeometry for collinear layouts or reprojection failure.
[[nodiscard]] BoardObservation detect_chessboard_pose(const std::vector<Vec2>& corners,
                                                      const BoardGeometry& board,
                                                      const CameraIntrinsics& K,
                                                      const ChessboardOptions& opts = {});

/// Outer quadrilateral of the inner-corner grid, in pixels.
[[nodiscard]] std::vector<Vec2> board_region(const std::vector<Vec2>& corners,
                                             const BoardGeometry& board);

[[nodiscard]] bool inside_convex_polygon(const Vec2& u, const std::vector<Vec2>& polygon);

/// Corner sidecar: one "u,v" line per corner, row-major.
[[nodiscard]] std::vector<Vec2> read_corner_sidecar(const std::filesystem::path& path);
void write_corner_sidecar(const std::filesystem::path& path, const std::vector<Vec2>& corners);

}  // namespace tslam::calib
