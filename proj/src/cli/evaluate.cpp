#include "tslam/cli/evaluate.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace tslam::cli {

namespace {

std::optional<Vec3> interpolate(const geom::Trajectory& gt, geom::Timestamp t) {
  if (gt.empty() || t < gt.front().stamp || t > gt.back().stamp) return std::nullopt;
  auto it = std::lower_bound(gt.begin(), gt.end(), t,
                             [](const geom::StampedPose& s, geom::Timestamp v) { return s.stamp < v; });
  if (it->stamp == t) {
    if (!it->valid) return std::nullopt;
    return it->pose.translation();
  }
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (!a.valid || !b.valid) return std::nullopt;
  const double alpha = static_cast<double>(t - a.stamp) / static_cast<double>(b.stamp - a.stamp);
  return (1.0 - alpha) * a.pose.translation() + alpha * b.pose.translation();
}

}  // namespace

Similarity umeyama(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale) {
  if (src.size() != dst.size()) throw std::invalid_argument("umeyama: size mismatch");
  if (src.size() < 2) throw std::invalid_argument("umeyama: need at least 2 pairs");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_s;
    cov += (dst[i] - mu_d) * a.transpose();
    var_s += a.squaredNorm();
  }
  cov /= n;
  var_s /= n;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
  Similarity out;
  out.R = svd.matrixU() * S * svd.matrixV().transpose();
  if (with_scale) {
    if (!(var_s > 0.0)) throw std::invalid_argument("umeyama: source points coincide");
    out.scale = (svd.singularValues().asDiagonal() * S).trace() / var_s;
  }
  out.t = mu_d - out.scale * (out.R * mu_s);
  return out;
}

AteResult evaluate_ate(const geom::Trajectory& est, const geom::Trajectory& gt, bool align,
                       bool scale) {
  std::vector<Vec3> e;
  std::vector<Vec3> g;
  for (const auto& s : est) {
    if (!s.valid) continue;
    const auto p = interpolate(gt, s.stamp);
    if (!p) continue;
    e.push_back(s.pose.translation());
    g.push_back(*p);
  }
  if (e.size() < 2) {
    throw std::invalid_argument("evaluate_ate: " + std::to_string(e.size()) +
                                " overlapping samples; need at least 2");
  }
  AteResult out;
  if (align || scale) out.alignment = umeyama(e, g, scale);
  out.matched = e.size();
  double sum2 = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double d = (out.alignment * e[i] - g[i]).norm();
    sum2 += d * d;
    sum += d;
    out.max = std::max(out.max, d);
  }
  out.rmse = std::sqrt(sum2 / static_cast<double>(e.size()));
  out.mean = sum / static_cast<double>(e.size());
  return out;
}

}  // namespace tslam::cli
