#pragma once

#include "tslam/geom/se3.hpp"

#include <vector>

namespace tslam::loop {

enum class EdgeKind { odometry, loop };

/// Measurement Z ~= T_i^-1 T_j, weighted by `information` * I.
struct PoseGraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  Pose Z;
  EdgeKind kind = EdgeKind::odometry;
  double information = 1.0;
};

struct PoseGraph {
  std::vector<Pose> nodes;
  std::vector<PoseGraphEdge> edges;

  std::size_t add_node(const Pose& pose) {
    nodes.push_back(pose);
    return nodes.size() - 1;
  }
  void add_edge(const PoseGraphEdge& e) { edges.push_back(e); }

  /// True when the odometry edges alone connect every node.
  [[nodiscard]] bool connected() const;
};

/// Residual of one edge at the given poses: log(Z^-1 T_i^-1 T_j).
[[nodiscard]] Vec6 edge_residual(const PoseGraphEdge& e, const std::vector<Pose>& poses);

/// sum over edges of information * |residual|^2
[[nodiscard]] double total_residual(const PoseGraph& graph, const std::vector<Pose>& poses);

struct PoseGraphOptions {
  int max_iterations = 100;
  double min_relative_decrease = 1e-12;
  double min_step = 1e-10;
};

struct PoseGraphResult {
  std::vector<Pose> poses;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-damped Gauss-Newton over left twists on every node except the
/// first, which stays fixed. Throws std::invalid_argument for an empty or
/// disconnected graph or out-of-range edge indices. Only cost-decreasing
/// steps are taken, so the result is never worse than the input.
[[nodiscard]] PoseGraphResult optimize_pose_graph(const PoseGraph& graph,
                                                  const PoseGraphOptions& opts = {});

}  // namespace tslam::loop
