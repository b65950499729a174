#include "support.hpp"

#include "tslam/odom/direct.hpp"
#include "tslam/odom/frame.hpp"
#include "tslam/odom/robust.hpp"
#include "tslam/odom/tracker.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace tslam;
using namespace tslam::odom;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Smooth image with exact derivatives.
struct AnalyticSampler {
  [[nodiscard]] std::optional<imgproc::SampleWithGradient> sample(const Vec2& u) const {
    const double a = 0.05 * u.x(), b = 0.07 * u.y();
    imgproc::SampleWithGradient s;
    s.value = 6000.0 + 300.0 * std::sin(a) * std::cos(b) + 2.0 * u.x() - u.y();
    s.gradient = Vec2(15.0 * std::cos(a) * std::cos(b) + 2.0, -21.0 * std::sin(a) * std::sin(b) - 1.0);
    return s;
  }
};

ThermalImage offset_image(const ThermalImage& img, int delta) {
  auto counts = img.counts;
  for (auto& c : counts.data()) c = static_cast<std::uint16_t>(c + delta);
  return ThermalImage(counts, img.stamp);
}

Pose forward(double meters) { return Pose(Mat3::Identity(), Vec3(0, 0, meters)); }

}  // namespace

TEST(RobustWeight, FixedPoints) {
  const RobustWeight w{5.0, 37.5};
  EXPECT_EQ(w(0.0), 1.2);
  EXPECT_EQ(w(37.5), 1.0);
  EXPECT_EQ(w(-37.5), 1.0);
}

TEST(RobustWeight, MonotoneOnGrid) {
  const RobustWeight w{5.0, 2.0};
  double prev = w(0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double cur = w(i * 1e-2);
    ASSERT_LE(cur, prev) << i;
    EXPECT_EQ(cur, w(-i * 1e-2));
    prev = cur;
  }
}

TEST(EstimateSigma, AllZeroHitsFloor) {
  const std::vector<double> zeros(50, 0.0);
  EXPECT_EQ(estimate_sigma(zeros), kSigmaFloor);
}

TEST(EstimateSigma, TooFewResiduals) {
  const std::vector<double> few(9, 1.0);
  EXPECT_THROW((void)estimate_sigma(few), std::invalid_argument);
}

TEST(EstimateSigma, RecoversStudentScale) {
  std::mt19937_64 rng(1);
  std::student_t_distribution<double> t(5.0);
  std::vector<double> r(100000);
  for (auto& x : r) x = 10.0 * t(rng);
  const double sigma = estimate_sigma(r, 5.0);
  EXPECT_GE(sigma, 9.5);
  EXPECT_LE(sigma, 10.5);
}

TEST(EstimateSigma, RobustToOutlier) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> r(100);
  for (auto& x : r) x = g(rng);
  const double clean = estimate_sigma(r);
  r.push_back(1e6);
  const double dirty = estimate_sigma(r);
  EXPECT_LT(dirty, 2.0 * clean);
  EXPECT_GT(dirty, 0.5 * clean);
}

TEST(EstimateSigma, IsFixedPoint) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 5.0);
  std::vector<double> r(1000);
  for (auto& x : r) x = g(rng);
  const double s = estimate_sigma(r, 5.0);
  double sum = 0.0;
  for (double x : r) sum += x * x * 6.0 / (5.0 + x * x / (s * s));
  EXPECT_NEAR(std::sqrt(sum / r.size()), s, 1e-5 * s);
}

TEST(PatchPattern, Sparse8) {
  const auto p = PatchPattern::sparse8();
  EXPECT_EQ(p.size(), 8u);
  EXPECT_NO_THROW(p.validate());
  bool center = false;
  for (const auto& o : p.offsets) {
    center |= o.isZero();
    EXPECT_LE(o.cast<double>().norm(), 2.0);
  }
  EXPECT_TRUE(center);
  EXPECT_THROW((PatchPattern{{Eigen::Vector2i(1, 0)}}.validate()), std::invalid_argument);
  EXPECT_THROW((PatchPattern{{Eigen::Vector2i(0, 0), Eigen::Vector2i(3, 1)}}.validate()),
               std::invalid_argument);
}

TEST(Frame, PointsStayInView) {
  const test::WallScene wall(1);
  const Pose pose;
  std::vector<Vec3> pts = wall.points(pose, 2);
  pts.emplace_back(0, 0, -1);
  pts.emplace_back(100, 0, 1);
  const FrameOptions opts;
  const Frame f(wall.render(pose), pts, wall.K, opts);
  EXPECT_LE(f.points().size(), opts.max_points);
  EXPECT_GT(f.points().size(), 1000u);
  for (const Vec3& p : f.points()) {
    EXPECT_TRUE(geom::project(p, wall.K, {opts.z_min, opts.border})) << p.transpose();
  }
  EXPECT_EQ(f.pyramid().size(), 4u);
}

TEST(Residual, IdenticalImagesAreZero) {
  const test::WallScene wall(2);
  const Frame f(wall.render(Pose()), wall.points(Pose()), wall.K);
  const FloatImage& img = f.pyramid().level(0);
  for (std::size_t i = 0; i < f.points().size(); ++i) {
    const auto r = residual(f.points()[i], Pose(), img, wall.K, f.reference(0, i, 0));
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, 0.0, 1e-3);  // reference samples are stored as float
  }
}

TEST(Residual, ConstantOffset) {
  const test::WallScene wall(3);
  const ThermalImage ref = wall.render(Pose());
  const Frame f(ref, wall.points(Pose()), wall.K);
  const FloatImage cur = offset_image(ref, 100).to_float();
  for (std::size_t i = 0; i < f.points().size(); i += 7) {
    const auto r = residual(f.points()[i], Pose(), cur, wall.K, f.reference(0, i, 0));
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, 100.0, 1e-3);
  }
  EXPECT_FALSE(residual(Vec3(0, 0, -2), Pose(), cur, wall.K, 0.0));
}

TEST(Residual, KnownMotionOnLinearScene) {
  // Temperature linear on the wall, images rendered without quantization.
  synth::Surface wall;
  wall.origin = Vec3(-6, -4, 3);
  wall.length_s = 12;
  wall.length_t = 8;
  wall.field.gradient = Vec2(1.5, -0.8);
  const CameraIntrinsics K{160.0, 160.0, 159.5, 127.5, 320, 256};
  const auto render = [&](const Pose& world_from_camera) {
    FloatImage img(K.width, K.height);
    for (int v = 0; v < K.height; ++v) {
      for (int u = 0; u < K.width; ++u) {
        const Vec3 dir = world_from_camera.rotation() * Vec3((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
        const double s = (wall.origin.z() - world_from_camera.translation().z()) / dir.z();
        const Vec3 p = world_from_camera.translation() + s * dir - wall.origin;
        img.at(u, v) = static_cast<float>(RawToCelsius{}.to_raw(wall.field.eval(p.x(), p.y())));
      }
    }
    return img;
  };
  const Pose ref_pose;
  const Pose cur_pose(geom::so3_exp(Vec3(0.01, -0.02, 0.005)), Vec3(0.05, -0.02, 0.1));
  const FloatImage cur = render(cur_pose);
  const FloatImage ref = render(ref_pose);
  const Pose T_rel = cur_pose.inverse() * ref_pose;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pu(20, 300), pv(20, 236);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const Vec2 u(pu(rng), pv(rng));
    const Vec3 dir((u.x() - K.cx) / K.fx, (u.y() - K.cy) / K.fy, 1.0);
    const Vec3 p = dir * 3.0;
    const auto r = residual(p, T_rel, cur, K, *imgproc::sample_bilinear(ref, u));
    ASSERT_TRUE(r);
    worst = std::max(worst, std::abs(*r));
  }
  EXPECT_LT(worst, 1.0);
}

TEST(ResidualJacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraIntrinsics K{400.0, 410.0, 319.5, 255.5, 640, 512};
  const AnalyticSampler sampler;
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    const Pose T = geom::exp(test::random_twist(rng, 0.2, 0.3));
    const Vec3 p(u(rng) * 1.5, u(rng) * 1.2, 2.0 + 2.0 * (u(rng) + 1.0));
    const Vec2 offset(std::round(2 * u(rng)), std::round(2 * u(rng)));
    const double gain = 1.0 + 0.2 * u(rng), bias = 300.0 * u(rng);
    const auto rj = residual_jacobian(sampler, K, p, T, offset, 5000.0, gain, bias);
    if (!rj) continue;
    Vec6 fd;
    for (int k = 0; k < 6; ++k) {
      Vec6 e = Vec6::Zero();
      e(k) = h;
      const auto plus = residual_jacobian(sampler, K, p, geom::left_update(e, T), offset, 5000.0, gain, bias);
      const auto minus = residual_jacobian(sampler, K, p, geom::left_update(-e, T), offset, 5000.0, gain, bias);
      ASSERT_TRUE(plus && minus);
      fd(k) = (plus->residual - minus->residual) / (2 * h);
    }
    EXPECT_LT((rj->jacobian - fd).norm() / fd.norm(), 1e-4) << checked;
    ++checked;
  }
}

TEST(Track, IdenticalImagesGiveIdentity) {
  const test::WallScene wall(6);
  const ThermalImage img = wall.render(Pose());
  const Frame prev(img, wall.points(Pose()), wall.K);
  const auto res = track(prev, imgproc::build_pyramid(img, 4), wall.K, Pose());
  EXPECT_LT(test::max_abs_diff(res.relative, Pose()), 1e-6);
  EXPECT_FALSE(res.diagnostics.lost);
  EXPECT_EQ(res.diagnostics.iterations.size(), 4u);
  for (int it : res.diagnostics.iterations) EXPECT_LE(it, 1);
}

TEST(Track, RecoversForwardStep) {
  const test::WallScene wall(7);
  const Pose p0, p1 = forward(0.1) * Pose(geom::so3_exp(Vec3(0, 0.3 * kDeg, 0)), Vec3::Zero());
  const Frame prev(wall.render(p0), wall.points(p0), wall.K);
  const auto res = track(prev, imgproc::build_pyramid(wall.render(p1), 4), wall.K, Pose());
  const Pose truth = p1.inverse() * p0;
  const auto d = geom::pose_delta(res.relative, truth);
  EXPECT_LT(d.translation, 5e-3);
  EXPECT_LT(d.rotation_rad, 0.1 * kDeg);
  EXPECT_FALSE(res.diagnostics.lost);
  EXPECT_GT(res.diagnostics.inlier_ratio, 0.7);
}

TEST(Track, CostNeverIncreasesAcrossAcceptedSteps) {
  const test::WallScene wall(8);
  const Pose p1 = forward(0.15);
  const Frame prev(wall.render(Pose()), wall.points(Pose()), wall.K);
  const AlignResult a = align({{&prev, Pose()}}, imgproc::build_pyramid(wall.render(p1), 4),
                              wall.K, Pose(), AlignOptions{});
  ASSERT_FALSE(a.steps.empty());
  for (const auto& s : a.steps) EXPECT_LE(s.cost_after, s.cost_before);
}

TEST(Track, GlobalOffsetInvariance) {
  const test::WallScene wall(9);
  const Pose p1 = forward(0.1);
  const ThermalImage a0 = wall.render(Pose()), a1 = wall.render(p1);
  const Frame prev(a0, wall.points(Pose()), wall.K);
  const Frame prev_hot(offset_image(a0, 250), wall.points(Pose()), wall.K);
  const auto r = track(prev, imgproc::build_pyramid(a1, 4), wall.K, Pose());
  const auto r_hot = track(prev_hot, imgproc::build_pyramid(offset_image(a1, 250), 4), wall.K, Pose());
  EXPECT_LT(test::max_abs_diff(r.relative, r_hot.relative), 1e-6);
}

TEST(Track, TexturelessIsFlagged) {
  const test::WallScene wall(10);
  const ThermalImage flat(imgproc::Image<std::uint16_t>(320, 256, 7300), 0);
  const Frame prev(flat, wall.points(Pose()), wall.K);
  const auto res = track(prev, imgproc::build_pyramid(flat, 4), wall.K, Pose());
  EXPECT_TRUE(res.diagnostics.rank_deficient);
  EXPECT_TRUE(res.diagnostics.lost);
}

TEST(Track, RejectsSparseReference) {
  const test::WallScene wall(11);
  const ThermalImage img = wall.render(Pose());
  auto pts = wall.points(Pose());
  pts.resize(20);
  const Frame prev(img, pts, wall.K);
  EXPECT_THROW((void)track(prev, imgproc::build_pyramid(img, 4), wall.K, Pose()), std::invalid_argument);
}

TEST(Track, Deterministic) {
  const test::WallScene wall(12);
  const Frame prev(wall.render(Pose()), wall.points(Pose()), wall.K);
  const Pyramid cur = imgproc::build_pyramid(wall.render(forward(0.1)), 4);
  const auto a = track(prev, cur, wall.K, Pose());
  const auto b = track(prev, cur, wall.K, Pose());
  EXPECT_EQ(a.relative.matrix(), b.relative.matrix());
}

TEST(RefineLocal, SingleKeyframeMatchesTrack) {
  const test::WallScene wall(13);
  const Pose p1 = forward(0.1) * Pose(geom::so3_exp(Vec3(0.2 * kDeg, 0, 0)), Vec3::Zero());
  auto frame = std::make_shared<const Frame>(wall.render(Pose()), wall.points(Pose()), wall.K);
  const Pyramid cur = imgproc::build_pyramid(wall.render(p1), 4);
  TrackOptions tight;
  tight.align.min_update = 1e-10;
  tight.align.max_iterations = 100;
  const auto tracked = track(*frame, cur, wall.K, Pose(), tight);
  const Pose tracked_world = tracked.relative.inverse();
  Keyframe kf;
  kf.frame = frame;
  const Pose init = Pose(geom::so3_exp(Vec3(0, 0.1 * kDeg, 0)), Vec3(0.004, -0.003, 0.005)) * tracked_world;
  RefineOptions tight_refine;
  tight_refine.align.min_update = 1e-10;
  tight_refine.align.max_iterations = 100;
  const auto refined = refine_local(cur, wall.K, init, {&kf}, tight_refine);
  EXPECT_FALSE(refined.fell_back);
  EXPECT_LT(test::max_abs_diff(refined.pose, tracked_world), 1e-6);
  EXPECT_LE(refined.final_cost, refined.initial_cost);
}

TEST(RefineLocal, IdenticalToKeyframe) {
  const test::WallScene wall(14);
  const Pose kf_pose(geom::so3_exp(Vec3(0, 0.05, 0)), Vec3(0.3, 0.1, 0.5));
  Keyframe kf;
  kf.frame = std::make_shared<const Frame>(wall.render(kf_pose), wall.points(kf_pose), wall.K);
  kf.pose = kf_pose;
  const Pyramid cur = imgproc::build_pyramid(wall.render(kf_pose), 4);
  const Pose init = forward(0.01) * kf_pose;
  const auto refined = refine_local(cur, wall.K, init, {&kf});
  EXPECT_LT(test::max_abs_diff(refined.pose, kf_pose), 1e-6);
}

TEST(RefineLocal, WindowNotWorseThanTracking) {
  const test::WallScene wall(15);
  std::vector<Pose> truth;
  for (int i = 0; i < 20; ++i) {
    truth.push_back(Pose(geom::so3_exp(Vec3(0, 0.1 * kDeg * i, 0)), Vec3(0.02 * i, 0, 0.1 * i)));
  }
  synth::RenderOptions noisy;
  noisy.noise_counts = 15.0;
  std::vector<std::shared_ptr<const Frame>> frames;
  for (int i = 0; i < 20; ++i) {
    noisy.noise_seed = static_cast<std::uint64_t>(i);
    frames.push_back(std::make_shared<const Frame>(wall.render(truth[i], i, noisy),
                                                   wall.points(truth[i]), wall.K));
  }
  std::vector<Pose> tracked{Pose()}, refined{Pose()};
  std::vector<Keyframe> window;
  window.push_back({0, frames[0], Pose(), {}, false});
  for (int i = 1; i < 20; ++i) {
    const auto& cur = frames[i]->pyramid();
    const auto t = track(*frames[i - 1], cur, wall.K, Pose());
    tracked.push_back(tracked.back() * t.relative.inverse());
    std::vector<const Keyframe*> w;
    for (std::size_t k = window.size() > 5 ? window.size() - 5 : 0; k < window.size(); ++k) w.push_back(&window[k]);
    const auto r = refine_local(cur, wall.K, refined.back() * t.relative.inverse(), w);
    refined.push_back(r.pose);
    if (i % 4 == 0) window.push_back({i, frames[i], r.pose, {}, false});
  }
  const auto ate = [&](const std::vector<Pose>& est) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += (est[i].translation() - truth[i].translation()).squaredNorm();
    return std::sqrt(s / 20);
  };
  EXPECT_LE(ate(refined), ate(tracked));
  EXPECT_LT(ate(tracked), 0.05);
}

TEST(RefineLocal, EmptyWindowThrows) {
  const Pyramid cur = imgproc::build_pyramid(FloatImage(64, 64, 1.0f), 2);
  EXPECT_THROW((void)refine_local(cur, CameraIntrinsics{50, 50, 31.5, 31.5, 64, 64}, Pose(), {}),
               std::invalid_argument);
}

TEST(KeyframePolicy, Examples) {
  EXPECT_FALSE(should_create_keyframe(Pose(), 1.0));
  EXPECT_TRUE(should_create_keyframe(forward(1.0), 1.0));
  EXPECT_TRUE(should_create_keyframe(Pose(geom::so3_exp(Vec3(0, 11 * kDeg, 0)), Vec3::Zero()), 1.0));
  EXPECT_TRUE(should_create_keyframe(Pose(), 0.5));
  EXPECT_FALSE(should_create_keyframe(forward(0.49), 0.61));
}

TEST(KeyframePolicy, CountMonotoneInDistance) {
  // square loop with rounded corners, 0.1 m per frame
  std::vector<Pose> path;
  double yaw = 0.0;
  Vec3 pos = Vec3::Zero();
  for (int side = 0; side < 4; ++side) {
    for (int i = 0; i < 60; ++i) {
      pos += geom::so3_exp(Vec3(0, yaw, 0)) * Vec3(0, 0, 0.1);
      path.emplace_back(geom::so3_exp(Vec3(0, yaw, 0)), pos);
    }
    for (int i = 0; i < 15; ++i) {
      yaw += (std::numbers::pi / 2) / 15;
      pos += geom::so3_exp(Vec3(0, yaw, 0)) * Vec3(0, 0, 0.1);
      path.emplace_back(geom::so3_exp(Vec3(0, yaw, 0)), pos);
    }
  }
  std::size_t prev_count = path.size() + 1;
  for (double d : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    std::size_t count = 1;
    Pose last = path.front();
    for (const Pose& p : path) {
      if (should_create_keyframe(last.inverse() * p, 1.0, {.max_translation = d})) {
        ++count;
        last = p;
      }
    }
    EXPECT_LE(count, prev_count) << d;
    prev_count = count;
  }
}
