#include "tslam/odom/direct.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace tslam::odom {

std::optional<double> residual(const Vec3& p_ref, const Pose& T_rel, const FloatImage& I_cur,
                               const CameraIntrinsics& K, double temp_ref, const Vec2& offset) {
  const auto u = geom::project(T_rel * p_ref, K);
  if (!u) return std::nullopt;
  const auto v = imgproc::sample_bilinear(I_cur, *u + offset);
  if (!v) return std::nullopt;
  return *v - temp_ref;
}

namespace {

struct Linearized {
  std::vector<double> residuals;
  std::vector<Vec6> jacobians;
  std::vector<double> samples;  // raw current-image samples
  std::vector<double> refs;
  std::size_t total = 0;
};

void linearize(const std::vector<AlignmentTarget>& targets, const FloatImage& img,
               const CameraIntrinsics& Kl, std::size_t level, const Pose& X, double gain,
               double bias, double z_min, Linearized& lin) {
  lin.residuals.clear();
  lin.jacobians.clear();
  lin.samples.clear();
  lin.refs.clear();
  lin.total = 0;
  std::size_t capacity = 0;
  for (const auto& target : targets) {
    capacity += target.frame->points().size() * target.frame->pattern().size();
  }
  lin.residuals.reserve(capacity);
  lin.jacobians.reserve(capacity);
  lin.samples.reserve(capacity);
  lin.refs.reserve(capacity);
  for (const auto& target : targets) {
    const Frame& f = *target.frame;
    const Pose T_rel = X * target.anchor;
    const auto& pattern = f.pattern().offsets;
    for (std::size_t i = 0; i < f.points().size(); ++i) {
      // residual_jacobian with one projection per point.
      const Vec3 q = T_rel * f.points()[i];
      const bool front = q.z() > z_min;
      const Vec2 u0 = front ? geom::project_unchecked(q, Kl) : Vec2::Zero();
      const double iz = 1.0 / q.z();
      for (std::size_t k = 0; k < pattern.size(); ++k) {
        const float ref = f.reference(level, i, k);
        if (std::isnan(ref)) continue;
        ++lin.total;
        if (!front) continue;
        const auto s = imgproc::sample_with_gradient(img, u0 + pattern[k].cast<double>());
        if (!s) continue;
        const double gx = s->gradient.x() * Kl.fx * iz;
        const double gy = s->gradient.y() * Kl.fy * iz;
        const Vec3 a(gx, gy, -(gx * q.x() + gy * q.y()) * iz);
        Vec6 J;
        J << gain * q.cross(a), gain * a;
        lin.residuals.push_back(gain * s->value + bias - ref);
        lin.jacobians.push_back(J);
        lin.samples.push_back(s->value);
        lin.refs.push_back(ref);
      }
    }
  }
}

struct NormalEquations {
  Mat6 H;
  Vec6 g;
  double cost = 0.0;
  double weight_sum = 0.0;
};

NormalEquations normal_equations(const Linearized& lin, const RobustWeight& w) {
  const auto n = static_cast<Eigen::Index>(lin.residuals.size());
  const Eigen::Map<const Eigen::ArrayXd> r(lin.residuals.data(), n);
  const Eigen::Map<const Eigen::Matrix<double, 6, Eigen::Dynamic>> J(lin.jacobians.data()->data(), 6, n);
  const double inv = 1.0 / w.sigma;
  const Eigen::ArrayXd wt = (w.nu + 1.0) / (w.nu + (r * inv).square());
  NormalEquations ne;
  ne.H.setZero();
  ne.g.setZero();
  constexpr Eigen::Index kBlock = 256;
  Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, kBlock> Jw;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, n - start);
    Jw = J.middleCols(start, len) * wt.segment(start, len).matrix().asDiagonal();
    ne.H.noalias() += Jw * J.middleCols(start, len).transpose();
    ne.g.noalias() += Jw * r.segment(start, len).matrix();
  }
  ne.cost = (wt * r.square()).sum();
  ne.weight_sum = wt.sum();
  return ne;
}

// Solve (H + lambda diag(H)) x = -g, projecting out directions with no
// information.
Vec6 solve_damped(const Mat6& H, const Vec6& g, double lambda) {
  Mat6 A = H;
  A.diagonal() += lambda * H.diagonal();
  Eigen::SelfAdjointEigenSolver<Mat6> eig(A);
  const Vec6 ev = eig.eigenvalues();
  const double cutoff = std::max(ev.maxCoeff(), 0.0) * 1e-12;
  Vec6 out = Vec6::Zero();
  const Vec6 proj = eig.eigenvectors().transpose() * g;
  for (int i = 0; i < 6; ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) out += eig.eigenvectors().col(i) * (-proj(i) / ev(i));
  }
  return out;
}

bool is_rank_deficient(const Mat6& H) {
  Eigen::SelfAdjointEigenSolver<Mat6> eig(H);
  const double hi = eig.eigenvalues().maxCoeff();
  return !(hi > 0.0) || eig.eigenvalues().minCoeff() <= hi * 1e-12;
}

// Weighted least-squares gain/bias at a fixed pose: minimize
// sum w (a x + b - y)^2 with x the current sample and y the reference.
// Weights come from the residuals under the present (gain, bias).
// Returns the change in (a, b), or 0 when the fit is not usable.
double fit_affine(const std::vector<AlignmentTarget>& targets, const FloatImage& img,
                  const CameraIntrinsics& Kl, std::size_t level, const Pose& X, double nu,
                  double z_min, double& gain, double& bias) {
  thread_local Linearized at;
  linearize(targets, img, Kl, level, X, 1.0, 0.0, z_min, at);
  if (at.samples.size() < 10) return 0.0;
  std::vector<double> r(at.samples.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = gain * at.samples[i] + bias - at.refs[i];
  const RobustWeight w{nu, estimate_sigma(r, nu)};
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < at.samples.size(); ++i) {
    const double x = at.samples[i];
    const double y = at.refs[i];
    const double wi = w(r[i]);
    sw += wi;
    sx += wi * x;
    sy += wi * y;
    sxx += wi * x * x;
    sxy += wi * x * y;
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  const double vxx = sxx / sw - mx * mx;
  const double vxy = sxy / sw - mx * my;
  if (!(vxx > 1e-9)) return 0.0;
  const double a = vxy / vxx;
  const double b = my - a * mx;
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return 0.0;
  const double change = std::hypot(a - gain, (b - bias) / std::max(1.0, std::abs(my)));
  gain = a;
  bias = b;
  return change;
}

}  // namespace

CostEvaluation evaluate_cost(const std::vector<AlignmentTarget>& targets, const FloatImage& cur,
                             const CameraIntrinsics& K, std::size_t level, const Pose& X,
                             double sigma, double nu, double gain, double bias, double z_min) {
  CostEvaluation ev;
  const RobustWeight w{nu, sigma};
  for (const auto& target : targets) {
    const Frame& f = *target.frame;
    const Pose T_rel = X * target.anchor;
    const auto& pattern = f.pattern().offsets;
    for (std::size_t i = 0; i < f.points().size(); ++i) {
      const Vec3 q = T_rel * f.points()[i];
      const bool front = q.z() > z_min;
      const Vec2 u = front ? geom::project_unchecked(q, K) : Vec2::Zero();
      for (std::size_t k = 0; k < pattern.size(); ++k) {
        const float ref = f.reference(level, i, k);
        if (std::isnan(ref)) continue;
        ++ev.total;
        if (!front) continue;
        const auto v = imgproc::sample_bilinear(cur, u + pattern[k].cast<double>());
        if (!v) continue;
        const double r = gain * *v + bias - ref;
        const double wr = w(r);
        ev.cost += wr * r * r;
        ev.weight_sum += wr;
        ++ev.valid;
      }
    }
  }
  return ev;
}

AlignResult align(const std::vector<AlignmentTarget>& targets, const Pyramid& cur,
                  const CameraIntrinsics& K, const Pose& X_init, const AlignOptions& opts,
                  double gain, double bias) {
  AlignResult res;
  res.X = X_init;
  res.gain = gain;
  res.bias = bias;
  const int available = static_cast<int>(cur.size()) - 1;
  int coarsest = opts.coarsest_level < 0 ? available : std::min(opts.coarsest_level, available);
  for (const auto& t : targets) {
    coarsest = std::min(coarsest, static_cast<int>(t.frame->pyramid().size()) - 1);
  }
  const int finest = std::clamp(opts.finest_level, 0, coarsest);

  double sigma = 1.0;
  thread_local Linearized lin;
  for (int level = coarsest; level >= finest; --level) {
    const auto lvl = static_cast<std::size_t>(level);
    const CameraIntrinsics Kl = K.at_level(level);
    const FloatImage& img = cur.level(lvl);
    double lambda = 0.0;
    int iterations = 0;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const double affine_change =
          opts.estimate_affine
              ? fit_affine(targets, img, Kl, lvl, res.X, opts.nu, opts.z_min, res.gain, res.bias)
              : 0.0;
      linearize(targets, img, Kl, lvl, res.X, res.gain, res.bias, opts.z_min, lin);
      if (lin.residuals.size() < 10) break;
      sigma = estimate_sigma(lin.residuals, opts.nu);
      const RobustWeight w{opts.nu, sigma};

      const NormalEquations ne = normal_equations(lin, w);
      const Mat6& H = ne.H;
      const Vec6& g = ne.g;
      const double cost = ne.cost;
      const double wsum = ne.weight_sum;
      const double mean_cost = cost / wsum;
      if (level == finest) res.rank_deficient = is_rank_deficient(H);

      bool accepted = false;
      Vec6 delta = Vec6::Zero();
      for (int attempt = 0; attempt < 10; ++attempt) {
        delta = solve_damped(H, g, lambda);
        if (delta.norm() < opts.min_update * 1e-3) {
          accepted = true;  // already at the optimum
          break;
        }
        const Pose candidate = geom::left_update(delta, res.X);
        const CostEvaluation ev = evaluate_cost(targets, img, Kl, lvl, candidate, sigma, opts.nu,
                                                res.gain, res.bias, opts.z_min);
        const double cand_cost = ev.weight_sum > 0.0 ? ev.cost / ev.weight_sum : INFINITY;
        if (ev.valid >= 10 && cand_cost <= mean_cost) {
          res.steps.push_back({level, mean_cost, cand_cost});
          res.X = candidate;
          lambda = lambda < 1e-6 ? 0.0 : lambda * 0.1;
          accepted = true;
          break;
        }
        lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
      }
      ++iterations;
      if (!accepted) break;

      if (delta.norm() < opts.min_update && affine_change < opts.min_update) break;
    }
    res.iterations.push_back(iterations);
  }

  // Final diagnostics at the finest visited level.
  const auto lvl = static_cast<std::size_t>(finest);
  const CameraIntrinsics Kl = K.at_level(finest);
  linearize(targets, cur.level(lvl), Kl, lvl, res.X, res.gain, res.bias, opts.z_min, lin);
  res.total = lin.total;
  res.valid = lin.residuals.size();
  if (lin.residuals.size() >= 10) {
    res.sigma = estimate_sigma(lin.residuals, opts.nu);
    const NormalEquations ne = normal_equations(lin, RobustWeight{opts.nu, res.sigma});
    res.cost = ne.cost;
    for (double r : lin.residuals) {
      if (std::abs(r) <= 3.0 * res.sigma) ++res.inliers;
    }
    res.weighted_rms = ne.weight_sum > 0.0 ? std::sqrt(ne.cost / ne.weight_sum) : 0.0;
    const Mat6& H = ne.H;
    res.rank_deficient = is_rank_deficient(H);
  } else {
    res.rank_deficient = true;
  }
  return res;
}

}  // namespace tslam::odom
