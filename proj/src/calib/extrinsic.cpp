#include "tslam/calib/extrinsic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tslam::calib {

std::optional<PlaneModel> segment_lidar_plane(std::span<const Vec3> cloud,
                                              const std::vector<Vec2>& board_polygon,
                                              const Pose& lidar_from_camera_init,
                                              const CameraIntrinsics& K,
                                              const RansacOptions& opts) {
  const Pose camera_from_lidar = lidar_from_camera_init.inverse();
  std::vector<Vec3> candidates;
  for (const auto& p : cloud) {
    const auto u = geom::project(camera_from_lidar * p, K);
    if (u && inside_convex_polygon(*u, board_polygon)) candidates.push_back(p);
  }
  return ransac_plane(candidates, opts);
}

double triplet_log_score(const Vec3& na, const Vec3& nb, const Vec3& nc) {
  return -(na.dot(nb) + nb.dot(nc) + na.dot(nc));
}

std::array<std::size_t, 3> select_plane_triplet(std::span<const PlanePair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 3) throw std::invalid_argument("plane triplet: need at least 3 plane pairs");

  const double parallel_cos = std::cos(5.0 * std::numbers::pi / 180.0);
  bool any_spread = false;
  for (std::size_t i = 0; i < n && !any_spread; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pairs[i].cam_plane.normal.dot(pairs[j].cam_plane.normal) < parallel_cos) {
        any_spread = true;
        break;
      }
    }
  }
  if (!any_spread) {
    throw DegenerateGeometry("plane triplet: all board normals within 5 deg of parallel");
  }

  std::array<std::size_t, 3> best{0, 1, 2};
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        const double s = triplet_log_score(pairs[a].cam_plane.normal, pairs[b].cam_plane.normal,
                                           pairs[c].cam_plane.normal);
        if (s > best_score) {
          best_score = s;
          best = {a, b, c};
        }
      }
    }
  }
  return best;
}

Mat3 solve_rotation(std::span<const PlanePair> triplet) {
  Mat3 H = Mat3::Zero();
  for (const auto& pair : triplet) {
    H += pair.cam_plane.normal * pair.lidar_plane.normal.transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(1) > 1e-9 * std::max(sv(0), 1e-300))) {
    throw DegenerateGeometry("rotation: plane normals span fewer than two directions");
  }
  const Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  if ((V * U.transpose()).determinant() < 0.0) V.col(2) *= -1.0;
  return V * U.transpose();
}

Vec3 solve_translation(std::span<const PlanePair> triplet, const Mat3& R) {
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const auto& pair : triplet) {
    const Vec3& n = pair.lidar_plane.normal;
    for (const auto& p : pair.cam_points) {
      A += n * n.transpose();
      b -= n * (n.dot(R * p) + pair.lidar_plane.d);
    }
  }
  Eigen::JacobiSVD<Mat3> svd(A);
  const Vec3 sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > 1e8) {
    throw DegenerateGeometry("translation: LiDAR plane normals do not span 3-space");
  }
  return A.ldlt().solve(b);
}

double point_to_plane_cost(std::span<const PlanePair> pairs, const Pose& T) {
  double cost = 0.0;
  for (const auto& pair : pairs) {
    for (const auto& p : pair.cam_points) {
      const double r = pair.lidar_plane.signed_distance(T * p);
      cost += r * r;
    }
  }
  return cost;
}

namespace {

struct Linearization {
  double cost = 0.0;
  Vec6 gradient = Vec6::Zero();  // d cost / d xi (left twist), factor 2 dropped
  Mat6 hessian = Mat6::Zero();   // J^T J
};

Linearization linearize(std::span<const PlanePair> pairs, const Pose& T) {
  Linearization lin;
  for (const auto& pair : pairs) {
    const Vec3& n = pair.lidar_plane.normal;
    for (const auto& p : pair.cam_points) {
      const Vec3 q = T * p;
      const double r = n.dot(q) + pair.lidar_plane.d;
      Vec6 J;
      J << q.cross(n), n;
      lin.cost += r * r;
      lin.gradient += r * J;
      lin.hessian += J * J.transpose();
    }
  }
  return lin;
}

}  // namespace

RefineResult refine_extrinsic(std::span<const PlanePair> pairs, const Pose& init,
                              const RefineOptions& opts) {
  if (pairs.size() < 3) throw std::invalid_argument("refine: need at least 3 plane pairs");
  RefineResult res;
  Pose T = init;
  Linearization lin = linearize(pairs, T);
  res.initial_cost = lin.cost;
  res.cost_history.push_back(lin.cost);

  Vec6 precond = lin.hessian.diagonal().cwiseMax(1e-12).cwiseInverse();
  Vec6 direction = -precond.cwiseProduct(lin.gradient);
  Vec6 prev_gradient = lin.gradient;
  const double initial_gradient = lin.gradient.norm();

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (lin.gradient.norm() < 1e-14) break;
    if (lin.gradient.dot(direction) >= 0.0) direction = -precond.cwiseProduct(lin.gradient);
    // Step length from the Gauss-Newton curvature along the search line.
    const double curvature = direction.dot(lin.hessian * direction);
    double alpha = curvature > 0.0 ? -lin.gradient.dot(direction) / curvature : 1.0;

    bool accepted = false;
    Pose candidate;
    double candidate_cost = 0.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
      candidate = geom::left_update(alpha * direction, T);
      candidate_cost = point_to_plane_cost(pairs, candidate);
      if (candidate_cost < lin.cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.diverged = res.iterations == 0 && initial_gradient > 1e-9;
      break;
    }
    const double decrease = lin.cost - candidate_cost;
    T = candidate;
    ++res.iterations;
    lin = linearize(pairs, T);
    res.cost_history.push_back(lin.cost);
    if (decrease < opts.min_decrease) break;

    precond = lin.hessian.diagonal().cwiseMax(1e-12).cwiseInverse();
    const Vec6 z = precond.cwiseProduct(lin.gradient);
    const double denom = prev_gradient.dot(precond.cwiseProduct(prev_gradient));
    const double beta =
        denom > 0.0 ? std::max(0.0, z.dot(lin.gradient - prev_gradient) / denom) : 0.0;
    direction = -z + beta * direction;
    prev_gradient = lin.gradient;
  }
  res.lidar_from_camera = T;
  res.final_cost = point_to_plane_cost(pairs, T);
  return res;
}

CalibrationResult calibrate(std::span<const CalibrationFrame> frames, const BoardGeometry& board,
                            const CameraIntrinsics& K, const Pose& lidar_from_camera_init,
                            const CalibrationOptions& opts) {
  CalibrationResult out;
  std::uint64_t index = 0;
  for (const auto& frame : frames) {
    ++index;
    BoardObservation obs;
    try {
      obs = detect_chessboard_pose(frame.corners, board, K, opts.chessboard);
    } catch (const std::exception&) {
      ++out.rejected;
      continue;
    }
    RansacOptions ransac = opts.ransac;
    ransac.seed = opts.ransac.seed + index;
    auto lidar_plane = segment_lidar_plane(frame.cloud, board_region(frame.corners, board),
                                           lidar_from_camera_init, K, ransac);
    if (!lidar_plane) {
      ++out.rejected;
      continue;
    }
    out.pairs.push_back(PlanePair{std::move(obs.plane), std::move(*lidar_plane),
                                  std::move(obs.cam_points)});
  }
  out.triplet = select_plane_triplet(out.pairs);
  const std::array<PlanePair, 3> chosen{out.pairs[out.triplet[0]], out.pairs[out.triplet[1]],
                                        out.pairs[out.triplet[2]]};
  const Mat3 R = solve_rotation(chosen);
  const Vec3 t = solve_translation(chosen, R);
  out.closed_form = Pose(R, t);
  out.refine = refine_extrinsic(out.pairs, out.closed_form, opts.refine);
  out.lidar_from_camera = out.refine.lidar_from_camera;
  return out;
}

void write_calibration(const std::filesystem::path& path, const CalibrationFile& calib) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  char buf[256];
  os << "# tslam calibration v1\n";
  os << "# lidar_from_camera: p_lidar = T * p_camera, 4x4 row-major\n";
  os << "lidar_from_camera\n";
  const Mat4 M = calib.lidar_from_camera.matrix();
  for (int r = 0; r < 4; ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", M(r, 0), M(r, 1), M(r, 2),
                  M(r, 3));
    os << buf;
  }
  const auto& K = calib.intrinsics;
  std::snprintf(buf, sizeof(buf), "intrinsics %.17g %.17g %.17g %.17g %d %d\n", K.fx, K.fy, K.cx,
                K.cy, K.width, K.height);
  os << buf;
  if (calib.board) {
    std::snprintf(buf, sizeof(buf), "board %d %d %.17g\n", calib.board->rows, calib.board->cols,
                  calib.board->square);
    os << buf;
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

CalibrationFile read_calibration(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  CalibrationFile out;
  bool have_T = false;
  bool have_K = false;
  std::string line;
  int lineno = 0;
  const auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    if (key == "lidar_from_camera") {
      Mat4 M;
      for (int r = 0; r < 4; ++r) {
        if (!std::getline(is, line)) fail("truncated matrix");
        ++lineno;
        std::istringstream rs(line);
        for (int c = 0; c < 4; ++c) {
          if (!(rs >> M(r, c))) fail("expected 4 numbers");
        }
      }
      out.lidar_from_camera = Pose::from_matrix(M);
      have_T = true;
    } else if (key == "intrinsics") {
      auto& K = out.intrinsics;
      if (!(ls >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height)) {
        fail("expected 'intrinsics fx fy cx cy width height'");
      }
      have_K = true;
    } else if (key == "board") {
      BoardGeometry b;
      if (!(ls >> b.rows >> b.cols >> b.square)) fail("expected 'board rows cols square'");
      out.board = b;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!have_T || !have_K) {
    throw std::runtime_error(path.string() + ": missing lidar_from_camera or intrinsics");
  }
  out.intrinsics.validate();
  return out;
}

}  // namespace tslam::calib
