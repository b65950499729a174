#include "tslam/loop/pose_graph.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tslam::loop {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

// ad(e) in [angular, linear] ordering.
Mat6 small_adjoint(const Vec6& e) {
  Mat6 ad = Mat6::Zero();
  const Mat3 W = geom::skew(e.head<3>());
  ad.topLeftCorner<3, 3>() = W;
  ad.bottomRightCorner<3, 3>() = W;
  ad.bottomLeftCorner<3, 3>() = geom::skew(e.tail<3>());
  return ad;
}

// Second-order inverse left Jacobian of SE(3).
Mat6 inverse_left_jacobian(const Vec6& e) {
  const Mat6 ad = small_adjoint(e);
  return Mat6::Identity() - 0.5 * ad + (1.0 / 12.0) * ad * ad;
}

void check(const PoseGraph& graph) {
  if (graph.nodes.empty()) throw std::invalid_argument("pose graph: no nodes");
  for (const auto& e : graph.edges) {
    if (e.i >= graph.nodes.size() || e.j >= graph.nodes.size() || e.i == e.j) {
      throw std::invalid_argument("pose graph: bad edge index");
    }
    if (!e.Z.matrix().allFinite() || !(e.information > 0.0)) {
      throw std::invalid_argument("pose graph: non-finite edge");
    }
  }
  if (!graph.connected()) throw std::invalid_argument("pose graph: odometry chain is disconnected");
}

}  // namespace

bool PoseGraph::connected() const {
  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const auto& e : edges) {
    if (e.kind != EdgeKind::odometry || e.i >= nodes.size() || e.j >= nodes.size()) continue;
    parent[find_root(parent, e.i)] = find_root(parent, e.j);
  }
  for (std::size_t n = 1; n < nodes.size(); ++n) {
    if (find_root(parent, n) != find_root(parent, 0)) return false;
  }
  return true;
}

Vec6 edge_residual(const PoseGraphEdge& e, const std::vector<Pose>& poses) {
  return geom::log(e.Z.inverse() * poses[e.i].inverse() * poses[e.j]).vector();
}

double total_residual(const PoseGraph& graph, const std::vector<Pose>& poses) {
  double sum = 0.0;
  for (const auto& e : graph.edges) sum += e.information * edge_residual(e, poses).squaredNorm();
  return sum;
}

PoseGraphResult optimize_pose_graph(const PoseGraph& graph, const PoseGraphOptions& opts) {
  check(graph);
  PoseGraphResult res;
  res.poses = graph.nodes;
  res.initial_residual = total_residual(graph, res.poses);
  res.final_residual = res.initial_residual;
  const std::size_t n = graph.nodes.size();
  if (n == 1 || res.initial_residual < 1e-20) {
    res.converged = true;
    return res;
  }
  const auto dim = static_cast<Eigen::Index>(6 * (n - 1));

  double lambda = 1e-6;
  for (int it = 0; it < opts.max_iterations; ++it) {
    // Normal equations over nodes 1..n-1; e(delta) ~ e + Jinv Ad(Z^-1 T_i^-1) (dj - di).
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const auto& e : graph.edges) {
      const Vec6 r = edge_residual(e, res.poses);
      const Mat6 J = inverse_left_jacobian(r) *
                     geom::adjoint(e.Z.inverse() * res.poses[e.i].inverse());
      const Mat6 H = e.information * J.transpose() * J;
      const Vec6 b = e.information * J.transpose() * r;
      const std::size_t idx[2] = {e.j, e.i};
      const double sign[2] = {1.0, -1.0};
      for (int a = 0; a < 2; ++a) {
        if (idx[a] == 0) continue;
        const auto ra = static_cast<Eigen::Index>(6 * (idx[a] - 1));
        g.segment<6>(ra) += sign[a] * b;
        for (int c = 0; c < 2; ++c) {
          if (idx[c] == 0) continue;
          const auto rc = static_cast<Eigen::Index>(6 * (idx[c] - 1));
          const Mat6 block = sign[a] * sign[c] * H;
          for (int u = 0; u < 6; ++u) {
            for (int v = 0; v < 6; ++v) trip.emplace_back(ra + u, rc + v, block(u, v));
          }
        }
      }
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd diag = H.diagonal();

    bool accepted = false;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::SparseMatrix<double> A = H;
      for (Eigen::Index k = 0; k < dim; ++k) A.coeffRef(k, k) += lambda * std::max(diag(k), 1e-9);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-g);
      std::vector<Pose> candidate = res.poses;
      for (std::size_t k = 1; k < n; ++k) {
        candidate[k] = geom::left_update(delta.segment<6>(static_cast<Eigen::Index>(6 * (k - 1))),
                                         candidate[k]);
      }
      double cost = INFINITY;
      try {
        cost = total_residual(graph, candidate);
      } catch (const geom::BranchAmbiguity&) {
      }
      if (cost < res.final_residual) {
        const double decrease = res.final_residual - cost;
        res.poses = std::move(candidate);
        res.final_residual = cost;
        step_norm = delta.norm();
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (decrease <= opts.min_relative_decrease * res.initial_residual) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    res.iterations = it + 1;
    if (!accepted || step_norm < opts.min_step || res.final_residual < 1e-20) {
      res.converged = true;
    }
    if (res.converged) break;
  }
  return res;
}

}  // namespace tslam::loop
