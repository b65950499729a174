// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support.hpp"

#include "tslam/calib/extrinsic.hpp"
#include "tslam/cli/config.hpp"
#include "tslam/cli/dataset.hpp"
#include "tslam/cli/evaluate.hpp"
#include "tslam/cli/pipeline.hpp"
#include "tslam/geom/se3.hpp"
#include "tslam/geom/trajectory.hpp"
#include "tslam/imgproc/image.hpp"
#include "tslam/loop/alignment.hpp"
#include "tslam/odom/direct.hpp"
#include "tslam/odom/frame.hpp"
#include "tslam/odom/robust.hpp"
#include "tslam/synth/sequence.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

using namespace tslam;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path source_dir() { return fs::path(TSLAM_SOURCE_DIR); }

/// Runs the command-line tool, output appended to `log`. Returns the exit code.
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + TSLAM_CLI_PATH + "\" " + args + " >> \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

/// Datasets shared between criteria, each made once through `synth`.
class Workspace {
 public:
  Workspace() : dir_("acceptance") {}

  const fs::path& root() const { return dir_.path(); }
  fs::path log() const { return dir_.path() / "cli.log"; }

  struct Dataset {
    fs::path path;
    int synth_exit = -1;
    double synth_seconds = 0.0;
  };

  const Dataset& dataset(const std::string& preset) {
    auto it = datasets_.find(preset);
    if (it != datasets_.end()) return it->second;
    Dataset d;
    d.path = root() / preset;
    const auto t0 = std::chrono::steady_clock::now();
    d.synth_exit = cli("synth \"" + (source_dir() / "configs" / (preset + ".scene")).string() +
                           "\" -o \"" + d.path.string() + "\"",
                       log());
    d.synth_seconds = seconds_since(t0);
    return datasets_.emplace(preset, d).first->second;
  }

 private:
  test::TempDir dir_;
  std::map<std::string, Dataset> datasets_;
};

struct RunOutput {
  cli::PipelineResult result;
  geom::Trajectory groundtruth;
};

RunOutput run_in_process(const fs::path& dataset, const cli::PipelineConfig& cfg) {
  const auto manifest = cli::load_dataset(dataset);
  const auto calibration = calib::read_calibration(manifest.calibration);
  RunOutput out{cli::run_pipeline(manifest, calibration, cfg), geom::read_tum(*manifest.groundtruth)};
  return out;
}

Pose gt_at(const geom::Trajectory& gt, geom::Timestamp stamp) {
  for (const auto& s : gt) {
    if (s.stamp == stamp) return s.pose;
  }
  throw std::runtime_error("no ground truth at stamp " + std::to_string(stamp));
}

// 1 -------------------------------------------------------------------------

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

Outcome geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  double worst_roundtrip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec6 xi = test::random_twist(rng, 3.0, 5.0);
    worst_roundtrip = std::max(worst_roundtrip, (geom::log(geom::exp(xi)).vector() - xi).norm());
    const Pose T = geom::exp(xi);
    worst_roundtrip = std::max(worst_roundtrip, test::max_abs_diff(geom::exp(geom::log(T)), T));
  }

  const CameraIntrinsics K{400.0, 410.0, 319.5, 255.5, 640, 512};
  const AnalyticSampler sampler;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  double worst_jacobian = 0.0;
  int checked = 0;
  while (checked < 100) {
    const Pose T = geom::exp(test::random_twist(rng, 0.2, 0.3));
    const Vec3 p(u(rng) * 1.5, u(rng) * 1.2, 2.0 + 2.0 * (u(rng) + 1.0));
    const double gain = 1.0 + 0.2 * u(rng), bias = 300.0 * u(rng);
    const auto rj = odom::residual_jacobian(sampler, K, p, T, Vec2::Zero(), 5000.0, gain, bias);
    if (!rj) continue;
    Vec6 fd;
    bool ok = true;
    for (int k = 0; k < 6 && ok; ++k) {
      Vec6 e = Vec6::Zero();
      e(k) = h;
      const auto plus = odom::residual_jacobian(sampler, K, p, geom::left_update(e, T), Vec2::Zero(), 5000.0, gain, bias);
      const auto minus = odom::residual_jacobian(sampler, K, p, geom::left_update(-e, T), Vec2::Zero(), 5000.0, gain, bias);
      ok = plus && minus;
      if (ok) fd(k) = (plus->residual - minus->residual) / (2 * h);
    }
    if (!ok) continue;
    worst_jacobian = std::max(worst_jacobian, (rj->jacobian - fd).norm() / fd.norm());
    ++checked;
  }
  const double secs = seconds_since(t0);
  return {worst_roundtrip < 1e-8 && worst_jacobian < 1e-4 && secs < 5.0,
          fmt("exp/log max err %.2e over 1000 twists, Jacobian max rel err %.2e over 100 configs, %.2f s",
              worst_roundtrip, worst_jacobian, secs)};
}

// 2 -------------------------------------------------------------------------

struct PoseError {
  double rotation_deg = 0.0;
  double translation = 0.0;
};

PoseError pose_error(const Pose& est, const Pose& truth) {
  const auto d = geom::pose_delta(est, truth);
  return {d.rotation_rad / kDeg, d.translation};
}

Outcome calibration() {
  const auto t0 = std::chrono::steady_clock::now();
  synth::SceneConfig cfg = synth::preset_config(synth::Preset::calib_room);
  cfg.frames = 30;
  const synth::SyntheticSequence seq = synth::build_sequence(cfg);
  std::vector<calib::CalibrationFrame> frames;
  for (std::size_t i = 0; i < seq.trajectory.size(); ++i) {
    auto f = synth::render_frame(seq, i, cfg);
    if (f.corners.empty()) continue;
    frames.push_back({std::move(f.corners), std::move(f.cloud)});
  }
  const Pose truth = seq.lidar_from_camera;
  Vec6 perturb;
  perturb << 2.0 * kDeg * Vec3(1, 2, -1).normalized(), 0.05 * Vec3(1, -1, 1).normalized();
  const Pose init = geom::exp(perturb) * truth;

  const auto clean = calib::calibrate(frames, *seq.board, seq.intrinsics, init);
  const double clean_err = test::max_abs_diff(clean.lidar_from_camera, truth);

  int passed = 0;
  PoseError worst;
  for (int trial = 0; trial < 50; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    std::normal_distribution<double> noise(0.0, 0.005);
    auto noisy = frames;
    for (auto& f : noisy) {
      for (auto& p : f.cloud) p += Vec3(noise(rng), noise(rng), noise(rng));
    }
    calib::CalibrationOptions opts;
    opts.ransac.seed = 1000 + trial;
    try {
      const auto r = calib::calibrate(noisy, *seq.board, seq.intrinsics, init, opts);
      const auto e = pose_error(r.lidar_from_camera, truth);
      worst.rotation_deg = std::max(worst.rotation_deg, e.rotation_deg);
      worst.translation = std::max(worst.translation, e.translation);
      if (e.rotation_deg < 0.5 && e.translation < 0.01) ++passed;
    } catch (const std::exception&) {
      // counts as a failed trial
    }
  }
  const double secs = seconds_since(t0);
  return {frames.size() == 30 && clean_err < 1e-6 && passed >= 48 && secs < 60.0,
          fmt("%zu boards, noiseless err %.2e, 5 mm noise %d/50 within 0.5 deg/1 cm "
              "(worst %.3f deg, %.2f mm), %.1f s",
              frames.size(), clean_err, passed, worst.rotation_deg, worst.translation * 1e3, secs)};
}

// 3 -------------------------------------------------------------------------

Outcome tracking(Workspace& ws) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& ds = ws.dataset("tunnel");
  if (ds.synth_exit != 0) return {false, fmt("synth exited %d", ds.synth_exit)};
  cli::PipelineConfig cfg;
  cfg.deterministic = true;
  cfg.loop_enabled = false;
  const RunOutput run = run_in_process(ds.path, cfg);
  const auto& est = run.result.trajectory;
  if (run.result.tracking_lost || est.size() != 100) {
    return {false, fmt("tracking lost or short trajectory (%zu frames)", est.size())};
  }
  PoseError worst;
  double path = 0.0;
  for (std::size_t i = 1; i < est.size(); ++i) {
    const Pose g0 = gt_at(run.groundtruth, est[i - 1].stamp), g1 = gt_at(run.groundtruth, est[i].stamp);
    const auto e = pose_error(est[i - 1].pose.inverse() * est[i].pose, g0.inverse() * g1);
    worst.rotation_deg = std::max(worst.rotation_deg, e.rotation_deg);
    worst.translation = std::max(worst.translation, e.translation);
    path += (g1.translation() - g0.translation()).norm();
  }
  const Pose gf = gt_at(run.groundtruth, est.front().stamp), gl = gt_at(run.groundtruth, est.back().stamp);
  const double drift =
      ((est.front().pose.inverse() * est.back().pose).translation() - (gf.inverse() * gl).translation()).norm();
  const double secs = seconds_since(t0);
  return {worst.translation < 0.005 && worst.rotation_deg < 0.1 && drift < 0.01 * path && secs < 120.0,
          fmt("100 frames, worst per-frame %.2f mm / %.4f deg, drift %.1f mm over %.2f m (%.3f %%), %.1f s",
              worst.translation * 1e3, worst.rotation_deg, drift * 1e3, path, 100.0 * drift / path, secs)};
}

// 4 -------------------------------------------------------------------------

ThermalImage affine_image(const ThermalImage& img, double a, double b) {
  auto counts = img.counts;
  for (auto& c : counts.data()) {
    c = static_cast<std::uint16_t>(std::clamp<long>(std::lround(a * c + b), 0, imgproc::kMaxRawCount));
  }
  return ThermalImage(counts, img.stamp);
}

Outcome bias_robustness() {
  const synth::SceneConfig cfg = synth::preset_config(synth::Preset::corridor_loop);
  const synth::SyntheticSequence seq = synth::build_sequence(cfg);
  const auto& samples = seq.trajectory.samples();
  // reference: first frame; target: the revisit of the same spot one lap later
  std::size_t revisit = samples.size() / 2;
  for (std::size_t j = samples.size() / 2; j < samples.size(); ++j) {
    if ((samples[j].pose.translation() - samples[0].pose.translation()).norm() <
        (samples[revisit].pose.translation() - samples[0].pose.translation()).norm()) {
      revisit = j;
    }
  }
  const auto ref_frame = synth::render_frame(seq, 0, cfg);
  const auto tgt_frame = synth::render_frame(seq, revisit, cfg);
  const Pose camera_from_lidar = seq.lidar_from_camera.inverse();
  std::vector<Vec3> points;
  for (const auto& p : ref_frame.cloud) points.push_back(camera_from_lidar * p);
  const odom::Frame ref(ref_frame.image, points, seq.intrinsics);
  const Pyramid target = imgproc::build_pyramid(affine_image(tgt_frame.image, 1.1, -200.0), 4);
  const Pose truth = samples[revisit].pose.inverse() * samples[0].pose;

  const cli::PipelineConfig defaults;
  const auto affine = loop::align_affine(ref, target, seq.intrinsics, Pose(), defaults.affine);
  auto plain_opts = defaults.affine;
  plain_opts.align.estimate_affine = false;
  const auto plain = loop::align_affine(ref, target, seq.intrinsics, Pose(), plain_opts);

  const auto ea = pose_error(affine.relative, truth);
  const auto ep = pose_error(plain.relative, truth);
  const double na = geom::log(affine.relative * truth.inverse()).norm();
  const double np = geom::log(plain.relative * truth.inverse()).norm();
  const bool model_ok = std::abs(affine.model.a - 1.1) < 0.02 && std::abs(affine.model.b + 200.0) < 10.0;
  const bool pose_ok = ea.translation < 0.01 && ea.rotation_deg < 0.2;
  const bool ratio_ok = np >= 5.0 * na;
  return {affine.ok && model_ok && pose_ok && ratio_ok,
          fmt("pair 0/%zu (gt offset %.3f m): a %.4f, b %.2f, pose err %.2f mm / %.4f deg; "
              "non-affine %.1f mm / %.3f deg, error ratio %.1fx",
              revisit, truth.translation().norm(), affine.model.a, affine.model.b, ea.translation * 1e3,
              ea.rotation_deg, ep.translation * 1e3, ep.rotation_deg, np / std::max(na, 1e-300))};
}

// 5 -------------------------------------------------------------------------

Outcome loop_closure(Workspace& ws) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& ds = ws.dataset("corridor-loop");
  if (ds.synth_exit != 0) return {false, fmt("synth exited %d", ds.synth_exit)};
  cli::PipelineConfig cfg;
  cfg.deterministic = true;
  cfg.inject_yaw_drift_deg = 0.5;
  const RunOutput with_loops = run_in_process(ds.path, cfg);
  const double loop_secs = seconds_since(t0);
  cfg.loop_enabled = false;
  const RunOutput odometry = run_in_process(ds.path, cfg);

  const auto& r = with_loops.result;
  const auto& gt = with_loops.groundtruth;
  std::map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < r.keyframe_ids.size(); ++i) index_of[r.keyframe_ids[i]] = i;

  const cli::LoopEvent* first = nullptr;
  int accepted = 0;
  int misplaced = 0;
  long worst_offset = 0;
  for (const auto& e : r.loops) {
    if (!e.accepted) continue;
    ++accepted;
    if (!first) first = &e;
    // ground-truth revisit: the nearest keyframe outside the recent window
    const Vec3 q = gt_at(gt, e.query_stamp).translation();
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < r.keyframes.size(); ++i) {
      const double dt = static_cast<double>(e.query_stamp - r.keyframes[i].stamp) * 1e-9;
      if (dt <= cfg.detector.recent_window_s) continue;
      const double d = (gt_at(gt, r.keyframes[i].stamp).translation() - q).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    const long offset = static_cast<long>(index_of.at(e.candidate_keyframe)) - static_cast<long>(best);
    worst_offset = std::max(worst_offset, std::abs(offset));
    if (std::abs(offset) > 2) ++misplaced;
  }
  bool gate_ok = false;
  double corrupt_err = 0.0;
  if (first) {
    Vec6 bump;
    bump << 2.0 * kDeg, -1.0 * kDeg, 1.5 * kDeg, 0.08, -0.05, 0.1;
    const Pose corrupted = geom::exp(bump) * first->T_kf_to_c;
    corrupt_err = loop::cross_validation_error(first->T_c_to_kf, corrupted);
    gate_ok = loop::cross_validate(first->T_c_to_kf, first->T_kf_to_c, cfg.cross_check_eps) &&
              !loop::cross_validate(first->T_c_to_kf, corrupted, cfg.cross_check_eps);
  }
  const double ate_loop = cli::evaluate_ate(r.trajectory, gt, true, false).rmse;
  const double ate_odom = cli::evaluate_ate(odometry.result.trajectory, gt, true, false).rmse;
  const double improvement = 1.0 - ate_loop / ate_odom;
  const double runtime = ds.synth_seconds + loop_secs;
  return {accepted > 0 && misplaced == 0 && gate_ok && improvement >= 0.7 && !r.tracking_lost &&
              runtime < 180.0,
          fmt("%d accepted loops, worst keyframe offset from gt revisit %ld, gate %s (corrupted reverse "
              "err %.3f), ATE %.3f m -> %.3f m (%.1f %% better), synth+run %.1f s",
              accepted, worst_offset, gate_ok ? "ok" : "wrong", corrupt_err, ate_odom, ate_loop,
              100.0 * improvement, runtime)};
}

// 6 -------------------------------------------------------------------------

Outcome weight_function() {
  bool ok = true;
  for (double sigma : {1e-3, 0.5, 1.0, 37.5, 812.0}) {
    const odom::RobustWeight w{5.0, sigma};
    ok = ok && w(0.0) == 1.2 && w(sigma) == 1.0 && w(-sigma) == 1.0;
    double prev = w(0.0);
    for (int i = 1; i <= 10000; ++i) {
      const double cur = w(10.0 * sigma * i / 10000.0);
      ok = ok && cur <= prev;
      prev = cur;
    }
  }
  return {ok, "nu 5: w(0) = 1.2, w(sigma) = 1 exactly, non-increasing on 10^4 points for 5 sigmas"};
}

// 7 -------------------------------------------------------------------------

Outcome rescale() {
  const RawToCelsius conv;
  bool monotone = true;
  int prev = imgproc::rescale_count(0, 0.0, 30.0, conv);
  for (int c = 1; c <= imgproc::kMaxRawCount; ++c) {
    const int cur = imgproc::rescale_count(static_cast<std::uint16_t>(c), 0.0, 30.0, conv);
    monotone = monotone && cur >= prev;
    prev = cur;
  }
  const auto lo = static_cast<std::uint16_t>(std::floor(conv.to_raw(0.0)));
  const auto hi = static_cast<std::uint16_t>(std::ceil(conv.to_raw(30.0)));
  const bool ends = imgproc::rescale_count(lo, 0.0, 30.0, conv) == 0 &&
                    imgproc::rescale_count(hi, 0.0, 30.0, conv) == 255 &&
                    imgproc::rescale_count(0, 0.0, 30.0, conv) == 0 &&
                    imgproc::rescale_count(imgproc::kMaxRawCount, 0.0, 30.0, conv) == 255;
  // a map whose window endpoints fall on whole counts
  const RawToCelsius exact{0.01, 0.0};
  const bool exact_ends = imgproc::rescale_count(0, 0.0, 30.0, exact) == 0 &&
                          imgproc::rescale_count(3000, 0.0, 30.0, exact) == 255;
  return {monotone && ends && exact_ends,
          fmt("all 16384 counts non-decreasing; 0 C (count %d) -> 0, 30 C (count %d) -> 255", lo, hi)};
}

// 8 -------------------------------------------------------------------------

Outcome determinism(Workspace& ws) {
  const auto& ds = ws.dataset("corridor-loop");
  if (ds.synth_exit != 0) return {false, fmt("synth exited %d", ds.synth_exit)};
  const fs::path a = ws.root() / "det_a", b = ws.root() / "det_b";
  const int ea = cli("run \"" + ds.path.string() + "\" -o \"" + a.string() + "\" --deterministic", ws.log());
  const int eb = cli("run \"" + ds.path.string() + "\" -o \"" + b.string() + "\" --deterministic", ws.log());
  if (ea != 0 || eb != 0) return {false, fmt("run exited %d / %d", ea, eb)};
  std::string differing;
  for (const char* name : {"trajectory.txt", "keyframes.txt", "map.ply", "map_colored.ply"}) {
    const std::string x = slurp(a / name), y = slurp(b / name);
    if (x.empty() || x != y) differing += std::string(" ") + name;
  }
  return {differing.empty(), differing.empty()
                                 ? std::string("corridor-loop: trajectory, keyframes and both maps byte-identical")
                                 : "differing or empty:" + differing};
}

// 9 -------------------------------------------------------------------------

Outcome end_to_end(Workspace& ws) {
  bool ok = true;
  std::string detail;
  for (const std::string preset : {"corridor-loop", "tunnel", "calib-room"}) {
    const auto& ds = ws.dataset(preset);
    const fs::path out = ws.root() / ("e2e_" + preset);
    int calib_exit = 0;
    if (preset == "calib-room") {
      calib_exit = cli("calibrate \"" + ds.path.string() + "\" -o \"" + (out.string() + "_calib.txt") + "\"",
                       ws.log());
    }
    const int run_exit = cli("run \"" + ds.path.string() + "\" -o \"" + out.string() + "\"", ws.log());
    const int eval_exit = cli("eval \"" + (out / "trajectory.txt").string() + "\" \"" +
                                  (ds.path / cli::kGroundTruthFile).string() + "\" --align",
                              ws.log());
    ok = ok && ds.synth_exit == 0 && calib_exit == 0 && run_exit == 0 && eval_exit == 0;
    detail += fmt("%s synth/%srun/eval %d/%s%d/%d; ", preset.c_str(),
                  preset == "calib-room" ? "calibrate/" : "", ds.synth_exit,
                  preset == "calib-room" ? (std::to_string(calib_exit) + "/").c_str() : "", run_exit,
                  eval_exit);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace

int main() {
  Workspace ws;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"geometry", geometry},
      {"calibration", calibration},
      {"tracking", [&] { return tracking(ws); }},
      {"bias robustness", bias_robustness},
      {"loop closure", [&] { return loop_closure(ws); }},
      {"weight function", weight_function},
      {"rescale", rescale},
      {"determinism", [&] { return determinism(ws); }},
      {"end-to-end", [&] { return end_to_end(ws); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  if (failures > 0) {
    std::cout << failures << " criteria failed; CLI output in " << ws.log() << "\n";
    std::cout << slurp(ws.log());
  }
  return failures == 0 ? 0 : 1;
}
