#include "support.hpp"

#include "tslam/imgproc/image.hpp"
#include "tslam/loop/alignment.hpp"
#include "tslam/loop/bow.hpp"
#include "tslam/loop/detector.hpp"
#include "tslam/loop/features.hpp"
#include "tslam/loop/pose_graph.hpp"
#include "tslam/loop/vocabulary.hpp"
#include "tslam/odom/frame.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace tslam;
using namespace tslam::loop;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr geom::Timestamp kSecond = 1'000'000'000;

Image8 rotate90(const Image8& img) {
  Image8 out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(img.height() - 1 - y, x) = img.at(x, y);
  }
  return out;
}

Descriptor random_descriptor(std::mt19937_64& rng) { return {rng(), rng(), rng(), rng()}; }

Descriptor flip_bits(Descriptor d, int bits, std::mt19937_64& rng) {
  for (int i = 0; i < bits; ++i) {
    const auto b = rng() % 256;
    d[b / 64] ^= std::uint64_t{1} << (b % 64);
  }
  return d;
}

ThermalImage affine_image(const ThermalImage& img, double a, double b) {
  auto counts = img.counts;
  for (auto& c : counts.data()) {
    c = static_cast<std::uint16_t>(std::clamp<long>(std::lround(a * c + b), 0, imgproc::kMaxRawCount));
  }
  return ThermalImage(counts, img.stamp);
}

}  // namespace

TEST(Similarity, Examples) {
  const BowVector a{{1, 0.5}, {2, 0.5}};
  const BowVector b{{2, 0.5}, {3, 0.5}};
  const BowVector c{{7, 1.0}};
  EXPECT_DOUBLE_EQ(similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(similarity(a, c), 0.0);
  EXPECT_DOUBLE_EQ(similarity(a, b), 0.5);
  EXPECT_EQ(similarity(a, BowVector{}), 0.0);
  EXPECT_EQ(similarity(BowVector{}, BowVector{}), 0.0);
}

TEST(Similarity, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    BowVector a, b;
    for (int k = 0; k < 20; ++k) {
      a[static_cast<std::uint32_t>(rng() % 40)] = w(rng);
      b[static_cast<std::uint32_t>(rng() % 40)] = w(rng);
    }
    l1_normalize(a);
    l1_normalize(b);
    EXPECT_NEAR(similarity(a, b), similarity(b, a), 1e-12);
    EXPECT_GE(similarity(a, b), 0.0);
    EXPECT_LE(similarity(a, b), 1.0 + 1e-12);
  }
}

TEST(Bow, NormalizeAndCommonWords) {
  BowVector v{{1, 2.0}, {4, 6.0}};
  l1_normalize(v);
  EXPECT_DOUBLE_EQ(v[1], 0.25);
  EXPECT_DOUBLE_EQ(v[4], 0.75);
  BowVector empty;
  l1_normalize(empty);
  EXPECT_TRUE(empty.empty());
  const BowVector q{{1, 0.5}, {9, 0.5}};
  EXPECT_DOUBLE_EQ(common_word_ratio(v, q), 0.5);
  EXPECT_EQ(hamming(Descriptor{0, 0, 0, 0}, Descriptor{3, 0, 0, 1ull << 63}), 3);
}

TEST(Vocabulary, TrainQuantizeRoundTrip) {
  std::mt19937_64 rng(2);
  std::vector<std::vector<Descriptor>> images(6);
  std::vector<Descriptor> centers;
  for (int c = 0; c < 16; ++c) centers.push_back(random_descriptor(rng));
  for (auto& img : images) {
    for (int i = 0; i < 80; ++i) img.push_back(flip_bits(centers[rng() % 16], 10, rng));
  }
  const Vocabulary voc = Vocabulary::train(images, 4, 2, 7);
  EXPECT_EQ(voc.branching(), 4);
  EXPECT_LE(voc.word_count(), 16u);
  for (const auto& img : images) {
    for (const auto& d : img) EXPECT_LT(voc.quantize(d), voc.word_count());
  }
  const BowVector v = voc.transform(images[0]);
  double sum = 0.0;
  for (const auto& [w, x] : v) {
    EXPECT_GE(x, 0.0);
    sum += x;
  }
  if (!v.empty()) {
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }

  std::stringstream ss;
  voc.save(ss);
  const Vocabulary back = Vocabulary::load(ss);
  EXPECT_TRUE(back == voc);
  for (const auto& d : images[3]) EXPECT_EQ(back.quantize(d), voc.quantize(d));

  // same seed, same tree
  EXPECT_TRUE(Vocabulary::train(images, 4, 2, 7) == voc);
}

TEST(Vocabulary, RejectsBadInput) {
  EXPECT_THROW((void)Vocabulary::train({}, 4, 2, 1), std::invalid_argument);
  std::mt19937_64 rng(3);
  EXPECT_THROW((void)Vocabulary::train({{random_descriptor(rng)}}, 1, 2, 1), std::invalid_argument);
  std::istringstream junk("NOTAVOCAB");
  EXPECT_THROW((void)Vocabulary::load(junk), std::exception);
}

TEST(Features, ConstantImageHasNone) {
  const Image8 flat(200, 150, 128);
  const auto bag = extract_features(flat, nullptr);
  EXPECT_TRUE(bag.keypoints.empty());
  EXPECT_TRUE(bag.bow.empty());
}

TEST(Features, RotationCompensated) {
  const test::WallScene wall(4);
  const Image8 img = imgproc::rescale_to_8bit(wall.render(Pose()), 0.0, 30.0);
  const Image8 rot = rotate90(img);
  const auto a = extract_features(img, nullptr);
  const auto b = extract_features(rot, nullptr);
  ASSERT_GE(a.keypoints.size(), 50u);
  ASSERT_GE(b.keypoints.size(), 50u);
  int mutual = 0, correct = 0;
  for (std::size_t i = 0; i < a.descriptors.size(); ++i) {
    const int j = nearest(a.descriptors[i], b.descriptors);
    if (j < 0 || nearest(b.descriptors[j], a.descriptors) != static_cast<int>(i)) continue;
    ++mutual;
    const auto& ka = a.keypoints[i];
    const auto& kb = b.keypoints[j];
    const Vec2 expected(img.height() - 1 - ka.y, ka.x);
    if ((Vec2(kb.x, kb.y) - expected).norm() < 2.0) ++correct;
  }
  const double denom = static_cast<double>(std::min(a.keypoints.size(), b.keypoints.size()));
  EXPECT_GE(correct / denom, 0.6) << mutual;
}

TEST(Features, SameImageSameBow) {
  const test::WallScene wall(5);
  const Image8 img = imgproc::rescale_to_8bit(wall.render(Pose()), 0.0, 30.0);
  const test::WallScene other(50);
  const Image8 img2 = imgproc::rescale_to_8bit(other.render(Pose()), 0.0, 30.0);
  const Vocabulary voc = Vocabulary::train(
      {extract_features(img, nullptr).descriptors, extract_features(img2, nullptr).descriptors}, 4, 3, 1);
  const auto a = extract_features(img, &voc);
  const auto b = extract_features(img, &voc);
  ASSERT_FALSE(a.bow.empty());
  EXPECT_EQ(a.bow, b.bow);
  EXPECT_DOUBLE_EQ(similarity(a.bow, b.bow), 1.0);
}

TEST(Features, RespectLimitsAndBorder) {
  const test::WallScene wall(6);
  const Image8 img = imgproc::rescale_to_8bit(wall.render(Pose()), 0.0, 30.0);
  const auto kps = detect_corners(img, {.max_features = 40});
  EXPECT_LE(kps.size(), 40u);
  for (const auto& k : kps) {
    EXPECT_GE(k.x, kPatchBorder);
    EXPECT_LE(k.x, img.width() - 1 - kPatchBorder);
    EXPECT_GE(k.y, kPatchBorder);
  }
}

TEST(DetectLoop, EmptyDatabase) {
  const DatabaseEntry q{5, 100 * kSecond, {{1, 1.0}}};
  EXPECT_FALSE(detect_loop(q, std::span<const DatabaseEntry>{}));
}

TEST(DetectLoop, ExactCopyOutsideRecentWindow) {
  const BowVector v{{1, 0.4}, {2, 0.3}, {3, 0.3}};
  const BowVector other{{5, 0.5}, {6, 0.5}};
  const std::vector<DatabaseEntry> db{{0, 0, v}, {1, 10 * kSecond, other}, {2, 90 * kSecond, other},
                                      {3, 95 * kSecond, BowVector{{1, 0.2}, {5, 0.8}}}};
  const DatabaseEntry q{4, 100 * kSecond, v};
  const auto c = detect_loop(q, db);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->keyframe_id, 0);
  EXPECT_GE(c->eta, 1.0);
  EXPECT_DOUBLE_EQ(c->common_ratio, 1.0);
}

TEST(DetectLoop, RecentKeyframesExcluded) {
  const BowVector v{{1, 0.5}, {2, 0.5}};
  const std::vector<DatabaseEntry> db{{0, 80 * kSecond, v}};
  EXPECT_FALSE(detect_loop({1, 100 * kSecond, v}, db));
  EXPECT_TRUE(detect_loop({1, 100 * kSecond, v}, db, {.recent_window_s = 10.0}));
}

TEST(DetectLoop, ThresholdsApplied) {
  const BowVector q{{1, 0.25}, {2, 0.25}, {3, 0.25}, {4, 0.25}};
  const BowVector half{{1, 0.5}, {9, 0.5}};
  const BowVector recent{{1, 0.5}, {2, 0.5}};
  const std::vector<DatabaseEntry> db{{0, 0, half}, {1, 99 * kSecond, recent}};
  // s = 0.25 against a normalizer of 0.5 from the recent neighbor; 1 of 4 query words shared
  const DatabaseEntry query{2, 100 * kSecond, q};
  EXPECT_DOUBLE_EQ(score_normalizer(query, db), 0.5);
  EXPECT_FALSE(detect_loop(query, db));
  const auto hit = detect_loop(query, db, {.min_eta = 0.5, .min_common_ratio = 0.25});
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->keyframe_id, 0);
  EXPECT_DOUBLE_EQ(hit->eta, 0.5);
  EXPECT_FALSE(detect_loop(query, db, {.min_eta = 0.6, .min_common_ratio = 0.25}));
  EXPECT_FALSE(detect_loop(query, db, {.min_eta = 0.5, .min_common_ratio = 0.3}));
}

TEST(ScoreNormalizer, UsesBestRecentNeighbor) {
  const BowVector q{{1, 0.5}, {2, 0.5}};
  const std::vector<DatabaseEntry> db{{0, 10, BowVector{{1, 1.0}}},
                                      {1, 20, BowVector{{1, 0.5}, {3, 0.5}}},
                                      {2, 30, BowVector{{7, 1.0}}}};
  const DatabaseEntry query{3, 40, q};
  EXPECT_DOUBLE_EQ(score_normalizer(query, db), 0.5);
  EXPECT_DOUBLE_EQ(score_normalizer(query, db, {.normalizer_neighbors = 1}), 1.0);
}

class AffineAlignTest : public ::testing::Test {
 protected:
  test::WallScene wall{7};
  Pose motion = Pose(geom::so3_exp(Vec3(0.2 * kDeg, 1.0 * kDeg, 0)), Vec3(0.08, -0.03, 0.15));
};

TEST_F(AffineAlignTest, IdenticalImages) {
  const ThermalImage img = wall.render(Pose());
  const odom::Frame ref(img, wall.points(Pose()), wall.K);
  const auto r = align_affine(ref, ref.pyramid(), wall.K, Pose());
  EXPECT_TRUE(r.ok);
  EXPECT_LT(test::max_abs_diff(r.relative, Pose()), 1e-6);
  EXPECT_NEAR(r.model.a, 1.0, 1e-6);
  EXPECT_NEAR(r.model.b, 0.0, 1e-3);
}

TEST_F(AffineAlignTest, GlobalBias) {
  const ThermalImage img = wall.render(Pose());
  const odom::Frame ref(img, wall.points(Pose()), wall.K);
  const Pyramid target = imgproc::build_pyramid(affine_image(img, 1.0, 300.0), 4);
  const auto r = align_affine(ref, target, wall.K, Pose());
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.model.a, 1.0, 0.01);
  EXPECT_NEAR(r.model.b, 300.0, 10.0);
  EXPECT_LT(geom::pose_delta(r.relative, Pose()).translation, 1e-3);
}

TEST_F(AffineAlignTest, MotionWithGainAndBias) {
  const odom::Frame ref(wall.render(Pose()), wall.points(Pose()), wall.K);
  const Pyramid target = imgproc::build_pyramid(affine_image(wall.render(motion), 1.1, -200.0), 4);
  const auto r = align_affine(ref, target, wall.K, Pose());
  const auto d = geom::pose_delta(r.relative, motion.inverse());
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.model.a, 1.1, 0.02);
  EXPECT_NEAR(r.model.b, -200.0, 10.0);
  EXPECT_LT(d.translation, 0.01);
  EXPECT_LT(d.rotation_rad, 0.2 * kDeg);
}

TEST_F(AffineAlignTest, PlainModeMatchesDirectAlignment) {
  const odom::Frame ref(wall.render(Pose()), wall.points(Pose()), wall.K);
  const Pyramid target = imgproc::build_pyramid(wall.render(motion), 4);
  AffineAlignOptions opts;
  opts.align.estimate_affine = false;
  const auto r = align_affine(ref, target, wall.K, Pose(), opts);
  const auto plain = odom::align({{&ref, Pose()}}, target, wall.K, Pose(), opts.align);
  EXPECT_EQ(r.model.a, 1.0);
  EXPECT_EQ(r.model.b, 0.0);
  EXPECT_NEAR(r.alignment.cost, plain.cost, 1e-9 * std::max(1.0, plain.cost));
}

TEST(CrossValidate, Examples) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Pose T = test::random_pose(rng);
    EXPECT_TRUE(cross_validate(T, T.inverse(), 0.05));
    EXPECT_TRUE(cross_validate(T, T.inverse(), 1e-9));
  }
  const Pose T = test::random_pose(rng);
  const Pose off = Pose(Mat3::Identity(), Vec3(1, 0, 0)) * T.inverse();
  EXPECT_FALSE(cross_validate(T, off, 0.05));
}

TEST(CrossValidate, BoundaryAtEpsilon) {
  std::mt19937_64 rng(9);
  const Pose T = test::random_pose(rng);
  Vec6 dir;
  dir << 0.3, -0.2, 0.5, 0.4, 0.1, -0.6;
  dir.normalize();
  for (double m = 0.0; m <= 0.1; m += 0.0025) {
    const Pose reverse = geom::exp(m * dir) * T.inverse();
    const double err = cross_validation_error(T, reverse);
    EXPECT_NEAR(err, m, 1e-9);
    if (std::abs(m - 0.05) > 1e-6) {
      EXPECT_EQ(cross_validate(T, reverse, 0.05), m < 0.05) << m;
    }
  }
}

TEST(RigidFit, RecoversTransform) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3, 3);
  const Pose T = test::random_pose(rng);
  std::vector<Vec3> src, dst;
  for (int i = 0; i < 10; ++i) {
    src.emplace_back(u(rng), u(rng), u(rng));
    dst.push_back(T * src.back());
  }
  const auto fit = rigid_fit(src, dst);
  ASSERT_TRUE(fit);
  EXPECT_LT(test::max_abs_diff(*fit, T), 1e-9);
  EXPECT_FALSE(rigid_fit({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)},
                         {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)}));
}

TEST(RansacPose, MatchesWithOutliers) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4, 4);
  const Pose T(geom::so3_exp(Vec3(0.1, -0.4, 0.05)), Vec3(0.5, 0.1, -1.0));
  std::vector<Descriptor> rd, td;
  std::vector<std::optional<Vec3>> rp, tp;
  for (int i = 0; i < 80; ++i) {
    const Descriptor d = random_descriptor(rng);
    const Vec3 p(u(rng), u(rng), 5.0 + u(rng));
    rd.push_back(d);
    rp.push_back(p);
    td.push_back(flip_bits(d, 8, rng));
    // a quarter of the matches sit at the wrong place, a few have no depth
    tp.push_back(i % 4 == 0 ? std::optional<Vec3>(Vec3(u(rng), u(rng), u(rng)))
                            : std::optional<Vec3>(T * p));
    if (i % 13 == 0) tp.back().reset();
  }
  const auto r = ransac_pose_from_matches(rd, rp, td, tp, {.seed = 3});
  ASSERT_TRUE(r);
  EXPECT_LT(test::max_abs_diff(r->relative, T), 1e-6);
  EXPECT_GE(r->inliers, 50u);
  EXPECT_LE(r->inliers, 60u);
}

TEST(RansacPose, TooFewMatches) {
  std::mt19937_64 rng(12);
  std::vector<Descriptor> d{random_descriptor(rng), random_descriptor(rng)};
  std::vector<std::optional<Vec3>> p{Vec3(0, 0, 1), Vec3(1, 0, 1)};
  EXPECT_FALSE(ransac_pose_from_matches(d, p, d, p));
}

TEST(KeypointPositions, NearestProjectedDepth) {
  const CameraIntrinsics K{100, 100, 50, 50, 101, 101};
  const std::vector<Vec3> pts{Vec3(0, 0, 2), Vec3(0.2, 0, 1), Vec3(-1, -1, 4)};
  std::vector<Keypoint> kps(3);
  kps[0].x = 51;
  kps[0].y = 50;  // near (50, 50)
  kps[1].x = 70;
  kps[1].y = 50.5f;  // near (70, 50)
  kps[2].x = 90;
  kps[2].y = 90;  // nothing near
  const auto pos = keypoint_positions(kps, pts, K);
  ASSERT_EQ(pos.size(), 3u);
  ASSERT_TRUE(pos[0]);
  EXPECT_NEAR(pos[0]->z(), 2.0, 1e-12);
  ASSERT_TRUE(pos[1]);
  EXPECT_NEAR(pos[1]->z(), 1.0, 1e-12);
  EXPECT_FALSE(pos[2]);
}

namespace {

/// Four corners of a 4 m square, heading turning 90 degrees at each.
std::vector<Pose> square_truth() {
  std::vector<Pose> poses;
  for (int i = 0; i < 4; ++i) {
    const Mat3 R = geom::so3_exp(Vec3(0, 0, i * std::numbers::pi / 2));
    poses.emplace_back(R, R * Vec3(0, -2, 0) + Vec3(0, 0, 0) + Vec3(2, 2, 0) - Vec3(2, 2, 0));
  }
  return poses;
}

PoseGraph chain(const std::vector<Pose>& truth, const Pose& drift_on_edge_1) {
  PoseGraph g;
  g.add_node(truth[0]);
  for (std::size_t i = 1; i < truth.size(); ++i) {
    Pose Z = truth[i - 1].inverse() * truth[i];
    if (i == 2) Z = Z * drift_on_edge_1;
    g.add_edge({i - 1, i, Z, EdgeKind::odometry, 1.0});
    g.add_node(g.nodes.back() * Z);
  }
  return g;
}

}  // namespace

TEST(PoseGraph, ConsistentChainUnchanged) {
  const auto truth = square_truth();
  const PoseGraph g = chain(truth, Pose());
  EXPECT_TRUE(g.connected());
  const auto r = optimize_pose_graph(g);
  EXPECT_LT(r.initial_residual, 1e-20);
  EXPECT_LT(r.final_residual, 1e-20);
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_LT(test::max_abs_diff(r.poses[i], g.nodes[i]), 1e-12);
}

TEST(PoseGraph, LoopEdgeRemovesDrift) {
  const auto truth = square_truth();
  PoseGraph g = chain(truth, Pose(geom::so3_exp(Vec3(0, 0, 5 * kDeg)), Vec3(0.3, 0.2, 0.0)));
  g.add_edge({0, 3, truth[0].inverse() * truth[3], EdgeKind::loop, 200.0});
  const double gap_before = (g.nodes[3].translation() - truth[3].translation()).norm();
  const auto r = optimize_pose_graph(g);
  const double gap_after = (r.poses[3].translation() - truth[3].translation()).norm();
  EXPECT_GT(gap_before, 0.1);
  EXPECT_LT(gap_after, 0.1 * gap_before);
  EXPECT_LE(r.final_residual, r.initial_residual);
  EXPECT_EQ(test::max_abs_diff(r.poses[0], g.nodes[0]), 0.0);
}

TEST(PoseGraph, DuplicateLoopEdgeSameOptimum) {
  const auto truth = square_truth();
  PoseGraph g = chain(truth, Pose(geom::so3_exp(Vec3(0, 0, 3 * kDeg)), Vec3(0.1, 0.0, 0.0)));
  const PoseGraphEdge loop{0, 3, truth[0].inverse() * truth[3], EdgeKind::loop, 1.0};
  g.add_edge(loop);
  PoseGraph doubled = g;
  doubled.edges.back().information = 2.0;
  PoseGraph duplicate = g;
  duplicate.add_edge(loop);
  const auto a = optimize_pose_graph(doubled);
  const auto b = optimize_pose_graph(duplicate);
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_LT(test::max_abs_diff(a.poses[i], b.poses[i]), 1e-8);
}

TEST(PoseGraph, NeverWorsens) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    PoseGraph g;
    g.add_node(Pose());
    for (std::size_t i = 1; i < 8; ++i) {
      const Pose Z = geom::exp(test::random_twist(rng, 0.5, 1.0));
      g.add_edge({i - 1, i, Z, EdgeKind::odometry, 1.0});
      g.add_node(g.nodes.back() * Z);
    }
    g.add_edge({0, 7, geom::exp(test::random_twist(rng, 1.0, 2.0)), EdgeKind::loop, 5.0});
    g.add_edge({2, 6, geom::exp(test::random_twist(rng, 1.0, 2.0)), EdgeKind::loop, 3.0});
    const auto r = optimize_pose_graph(g);
    EXPECT_LE(r.final_residual, r.initial_residual);
    EXPECT_NEAR(total_residual(g, r.poses), r.final_residual, 1e-9 * std::max(1.0, r.final_residual));
  }
}

TEST(PoseGraph, RejectsBadGraphs) {
  EXPECT_THROW((void)optimize_pose_graph(PoseGraph{}), std::invalid_argument);
  PoseGraph g;
  g.add_node(Pose());
  g.add_node(Pose());
  g.add_node(Pose());
  g.add_edge({0, 1, Pose(), EdgeKind::odometry, 1.0});
  g.add_edge({0, 2, Pose(), EdgeKind::loop, 1.0});
  EXPECT_FALSE(g.connected());
  EXPECT_THROW((void)optimize_pose_graph(g), std::invalid_argument);
  g.add_edge({1, 5, Pose(), EdgeKind::odometry, 1.0});
  EXPECT_THROW((void)optimize_pose_graph(g), std::invalid_argument);
}

TEST(PoseGraph, EdgeResidualZeroAtMeasurement) {
  std::mt19937_64 rng(14);
  const std::vector<Pose> poses{test::random_pose(rng), test::random_pose(rng)};
  const PoseGraphEdge e{0, 1, poses[0].inverse() * poses[1], EdgeKind::loop, 1.0};
  EXPECT_LT(edge_residual(e, poses).norm(), 1e-9);
}
