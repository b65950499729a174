#include "tslam/calib/chessboard.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace tslam::calib {

std::vector<Vec3> BoardGeometry::corner_points() const {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) pts.emplace_back(c * square, r * square, 0.0);
  }
  return pts;
}

namespace {

// Similarity normalizing a point set to zero mean and mean distance sqrt(2).
Eigen::Matrix3d normalizer(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d T;
  T << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return T;
}

bool collinear(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  return eig.eigenvalues()(0) <= 1e-10 * std::max(eig.eigenvalues()(1), 1e-300);
}

// Homography mapping board (X, Y) to pixels.
Eigen::Matrix3d homography_dlt(const std::vector<Vec2>& board, const std::vector<Vec2>& image) {
  const Eigen::Matrix3d Tb = normalizer(board);
  const Eigen::Matrix3d Ti = normalizer(image);
  const auto n = board.size();
  Eigen::MatrixXd A(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d b = Tb * board[i].homogeneous();
    const Eigen::Vector3d m = Ti * image[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << -b.x(), -b.y(), -1, 0, 0, 0, m.x() * b.x(), m.x() * b.y(), m.x();
    A.row(r + 1) << 0, 0, 0, -b.x(), -b.y(), -1, m.y() * b.x(), m.y() * b.y(), m.y();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Ti.inverse() * Hn * Tb;
}

double reprojection_rms(const Pose& T, const std::vector<Vec3>& pts, const std::vector<Vec2>& px,
                        const CameraIntrinsics& K) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 q = T * pts[i];
    if (q.z() <= 0.0) return std::numeric_limits<double>::infinity();
    sum += (geom::project_unchecked(q, K) - px[i]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(pts.size()));
}

Pose refine_reprojection(Pose T, const std::vector<Vec3>& pts, const std::vector<Vec2>& px,
                         const CameraIntrinsics& K, int iterations) {
  double cost = reprojection_rms(T, pts, px, K);
  double lambda = 1e-6;
  for (int it = 0; it < iterations; ++it) {
    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec3 q = T * pts[i];
      const double iz = 1.0 / q.z();
      Eigen::Matrix<double, 2, 3> du_dq;
      du_dq << K.fx * iz, 0, -K.fx * q.x() * iz * iz, 0, K.fy * iz, -K.fy * q.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dq;
      dq << -geom::skew(q), Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> J = du_dq * dq;
      const Vec2 r = geom::project_unchecked(q, K) - px[i];
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    bool accepted = false;
    Vec6 step = Vec6::Zero();
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      Mat6 Hd = H;
      Hd.diagonal() *= 1.0 + lambda;
      step = -Hd.ldlt().solve(g);
      const Pose candidate = geom::left_update(step, T);
      const double c = reprojection_rms(candidate, pts, px, K);
      if (c < cost) {
        T = candidate;
        cost = c;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || step.norm() < 1e-12) break;
  }
  return T;
}

}  // namespace

BoardObservation detect_chessboard_pose(const std::vector<Vec2>& corners,
                                        const BoardGeometry& board, const CameraIntrinsics& K,
                                        const ChessboardOptions& opts) {
  if (corners.size() < 4) throw std::invalid_argument("chessboard: fewer than 4 corners");
  if (corners.size() != static_cast<std::size_t>(board.rows * board.cols)) {
    throw std::invalid_argument("chessboard: expected " + std::to_string(board.rows * board.cols) +
                                " corners, got " + std::to_string(corners.size()));
  }
  if (collinear(corners)) throw DegenerateGeometry("chessboard: collinear corner layout");
  const std::vector<Vec3> obj = board.corner_points();
  std::vector<Vec2> obj2;
  obj2.reserve(obj.size());
  for (const auto& p : obj) obj2.push_back(p.head<2>());
  if (collinear(obj2)) throw DegenerateGeometry("chessboard: board grid is a single line");

  const Eigen::Matrix3d H = homography_dlt(obj2, corners);
  Eigen::Matrix3d Kmat;
  Kmat << K.fx, 0, K.cx, 0, K.fy, K.cy, 0, 0, 1;
  const Eigen::Matrix3d M = Kmat.inverse() * H;
  double lambda = 2.0 / (M.col(0).norm() + M.col(1).norm());
  Vec3 t = lambda * M.col(2);
  if (t.z() < 0.0) {
    lambda = -lambda;
    t = -t;
  }
  Mat3 R0;
  R0.col(0) = lambda * M.col(0);
  R0.col(1) = lambda * M.col(1);
  R0.col(2) = R0.col(0).cross(R0.col(1));
  Pose T(geom::nearest_rotation(R0), t);
  T = refine_reprojection(T, obj, corners, K, opts.refine_iterations);

  BoardObservation out;
  out.camera_from_board = T;
  out.corners = corners;
  out.rms_reprojection = reprojection_rms(T, obj, corners, K);
  if (!(out.rms_reprojection <= opts.max_rms_px)) {
    throw DegenerateGeometry("chessboard: reprojection RMS " +
                             std::to_string(out.rms_reprojection) + " px above threshold");
  }
  out.cam_points.reserve(obj.size());
  for (const auto& p : obj) out.cam_points.push_back(T * p);
  out.plane.normal = T.rotation().col(2);
  out.plane.d = -out.plane.normal.dot(T.translation());
  out.plane.orient_toward_origin();
  out.plane.inliers = out.cam_points;
  return out;
}

std::vector<Vec2> board_region(const std::vector<Vec2>& corners, const BoardGeometry& board) {
  const auto idx = [&](int r, int c) { return static_cast<std::size_t>(r * board.cols + c); };
  return {corners.at(idx(0, 0)), corners.at(idx(0, board.cols - 1)),
          corners.at(idx(board.rows - 1, board.cols - 1)), corners.at(idx(board.rows - 1, 0))};
}

bool inside_convex_polygon(const Vec2& u, const std::vector<Vec2>& polygon) {
  if (polygon.size() < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    const double cross = (b - a).x() * (u - a).y() - (b - a).y() * (u - a).x();
    const int s = cross > 0.0 ? 1 : (cross < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

std::vector<Vec2> read_corner_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<Vec2> corners;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double u = 0, v = 0;
    char comma = 0;
    if (!(ls >> u >> comma >> v) || comma != ',') {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 'u,v'");
    }
    corners.emplace_back(u, v);
  }
  return corners;
}

void write_corner_sidecar(const std::filesystem::path& path, const std::vector<Vec2>& corners) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  char buf[96];
  for (const auto& c : corners) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", c.x(), c.y());
    os << buf;
  }
}

}  // namespace tslam::calib
