#include "tslam/cli/pipeline.hpp"

#include "tslam/imgproc/pgm.hpp"
#include "tslam/loop/features.hpp"
#include "tslam/loop/vocabulary.hpp"
#include "tslam/map/ply.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

namespace tslam::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using PointsPtr = std::shared_ptr<const std::vector<Vec3>>;
using BagPtr = std::shared_ptr<const loop::DescriptorBag>;
using FramePtr = std::shared_ptr<const odom::Frame>;

/// Immutable inputs of one loop search, captured when the keyframe is made.
struct LoopJob {
  int query = 0;
  std::vector<loop::DatabaseEntry> database;
  std::vector<FramePtr> frames;  // by keyframe id
  std::vector<BagPtr> bags;
  std::vector<PointsPtr> points;
  std::vector<Pose> poses;
};

struct LoopOutcome {
  std::optional<LoopEvent> event;
  std::optional<loop::PoseGraphEdge> edge;
};

std::uint64_t job_seed(std::uint64_t seed, int keyframe) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(keyframe + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

LoopOutcome process_loop(const LoopJob& job, const CameraIntrinsics& K, const PipelineConfig& cfg) {
  LoopOutcome out;
  const auto k = static_cast<std::size_t>(job.query);
  const loop::DatabaseEntry query{job.query, job.frames[k]->stamp(), job.bags[k]->bow};
  const auto cand = loop::detect_loop(query, job.database, cfg.detector);
  if (!cand) return out;
  const auto c = static_cast<std::size_t>(cand->keyframe_id);

  LoopEvent ev;
  ev.query_keyframe = job.query;
  ev.candidate_keyframe = cand->keyframe_id;
  ev.query_stamp = job.frames[k]->stamp();
  ev.candidate_stamp = job.frames[c]->stamp();
  ev.eta = cand->eta;
  ev.common_ratio = cand->common_ratio;

  // Initial T_c^kf: maps query-camera points into the candidate camera.
  std::optional<Pose> T_init;
  const double distance = (job.poses[k].translation() - job.poses[c].translation()).norm();
  if (distance < cfg.identity_init_distance) {
    T_init = Pose();
    ev.init = "identity";
  } else {
    const auto& qb = *job.bags[k];
    const auto& cb = *job.bags[c];
    loop::RansacPoseOptions ropts = cfg.ransac;
    ropts.seed = job_seed(cfg.seed, job.query);
    const auto fit = loop::ransac_pose_from_matches(
        qb.descriptors, loop::keypoint_positions(qb.keypoints, *job.points[k], K),
        cb.descriptors, loop::keypoint_positions(cb.keypoints, *job.points[c], K), ropts);
    if (fit) {
      T_init = fit->relative;
      ev.init = "ransac";
    } else {
      ev.init = "failed";
    }
  }
  if (T_init) {
    const auto fwd = loop::align_affine(*job.frames[k], job.frames[c]->pyramid(), K, *T_init,
                                        cfg.affine);
    const auto rev = loop::align_affine(*job.frames[c], job.frames[k]->pyramid(), K,
                                        T_init->inverse(), cfg.affine);
    ev.forward_model = fwd.model;
    ev.reverse_model = rev.model;
    ev.forward_ok = fwd.ok;
    ev.reverse_ok = rev.ok;
    ev.T_c_to_kf = fwd.relative;
    ev.T_kf_to_c = rev.relative;
    ev.cross_error = loop::cross_validation_error(fwd.relative, rev.relative);
    ev.accepted = fwd.ok && rev.ok && ev.cross_error < cfg.cross_check_eps;
    if (ev.accepted) {
      out.edge = loop::PoseGraphEdge{c, k, fwd.relative, loop::EdgeKind::loop,
                                     static_cast<double>(std::max<std::size_t>(fwd.alignment.inliers, 1))};
    }
  }
  out.event = ev;
  return out;
}

class Pipeline {
 public:
  Pipeline(const DatasetManifest& manifest, const calib::CalibrationFile& calib,
           const PipelineConfig& cfg, std::ostream* log)
      : manifest_(manifest), K_(calib.intrinsics), cam_from_lidar_(calib.lidar_from_camera.inverse()),
        cfg_(cfg), log_(log) {}

  PipelineResult run() {
    setup_vocabulary();
    Pose pose;
    Pose motion;
    FramePtr prev;
    for (std::size_t i = 0; i < manifest_.frames.size(); ++i) {
      const auto& entry = manifest_.frames[i];
      ThermalImage image;
      try {
        image = imgproc::read_thermal_pgm(entry.image);
      } catch (const std::exception& e) {
        throw DataError(e.what());
      }
      if (image.width() != K_.width || image.height() != K_.height) {
        throw DataError(entry.image.string() + ": image size does not match the calibration");
      }
      image.stamp = entry.stamp;
      std::vector<Vec3> cloud = read_cloud_csv(entry.cloud);
      for (auto& p : cloud) p = cam_from_lidar_ * p;
      auto points = std::make_shared<const std::vector<Vec3>>(std::move(cloud));
      auto frame = std::make_shared<odom::Frame>(image, *points, K_, cfg_.frame);

      FrameRecord rec;
      rec.stamp = entry.stamp;
      if (!prev) {
        pose = Pose();
        create_keyframe(frame, points, pose, rec);
        result_.frames.push_back(rec);
        prev = frame;
        continue;
      }
      if (prev->points().size() < cfg_.track.min_points) {
        lose("frame " + std::to_string(i) + ": previous frame has only " +
             std::to_string(prev->points().size()) + " points in view");
        break;
      }
      const auto tracked = odom::track(*prev, frame->pyramid(), K_, motion, cfg_.track);
      rec.tracking = tracked.diagnostics;
      if (tracked.diagnostics.lost) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "frame %zu: tracking lost (valid ratio %.3f, weighted rms %.1f)", i,
                      tracked.diagnostics.valid_ratio, tracked.diagnostics.weighted_rms);
        lose(buf);
        break;
      }
      motion = tracked.relative;
      pose = pose * tracked.relative.inverse();
      if (cfg_.refine) {
        std::vector<const odom::Keyframe*> window;
        const std::size_t n = std::min(cfg_.window_size, keyframes_.size());
        for (std::size_t w = keyframes_.size() - n; w < keyframes_.size(); ++w) {
          window.push_back(&keyframes_[w]);
        }
        const auto refined = odom::refine_local(frame->pyramid(), K_, pose, window, cfg_.refine_options);
        pose = refined.pose;
        rec.refine_fell_back = refined.fell_back;
      }

      const odom::Keyframe& last = keyframes_.back();
      const Pose since_last = last.pose.inverse() * pose;
      if (odom::should_create_keyframe(since_last, tracked.diagnostics.valid_ratio, cfg_.keyframes)) {
        apply_pending(pose);
        if (cfg_.inject_yaw_drift_deg != 0.0) {
          const Pose& ref = keyframes_.back().pose;
          const Pose yaw(geom::so3_exp(Vec3(0.0, -cfg_.inject_yaw_drift_deg * kDeg, 0.0)), Vec3::Zero());
          pose = ref * yaw * ref.inverse() * pose;
        }
        create_keyframe(frame, points, pose, rec);
      } else {
        const odom::Keyframe& anchor = keyframes_.back();
        rec.anchor = anchor.id;
        rec.anchor_from_frame = anchor.pose.inverse() * pose;
        if (cfg_.map_all_frames) {
          result_.map.accumulate_relative(anchor.id, rec.anchor_from_frame, frame->image(),
                                          *points, K_, cfg_.conv, {.z_min = cfg_.frame.z_min});
        }
      }
      result_.frames.push_back(rec);
      prev = frame;
    }
    Pose unused;
    apply_pending(unused);
    finish();
    return std::move(result_);
  }

 private:
  void say(const std::string& line) {
    if (log_) *log_ << line << "\n";
  }

  void lose(const std::string& why) {
    result_.tracking_lost = true;
    result_.lost_reason = why;
    say("error: " + why);
  }

  void setup_vocabulary() {
    if (!cfg_.loop_enabled) return;
    std::optional<fs::path> path;
    if (!cfg_.vocabulary.empty()) {
      path = fs::path(cfg_.vocabulary);
    } else if (manifest_.vocabulary) {
      path = *manifest_.vocabulary;
    }
    if (!path) {
      warn("no vocabulary (set loop.vocabulary or add vocabulary.bin); loop closure disabled");
      return;
    }
    try {
      vocabulary_ = std::make_unique<loop::Vocabulary>(loop::Vocabulary::load(*path));
    } catch (const std::exception& e) {
      throw DataError(std::string("vocabulary: ") + e.what());
    }
    result_.loop_closure_active = true;
  }

  void warn(const std::string& w) {
    result_.warnings.push_back(w);
    say("warning: " + w);
  }

  void create_keyframe(const std::shared_ptr<odom::Frame>& frame, const PointsPtr& points,
                       const Pose& pose, FrameRecord& rec) {
    const int id = static_cast<int>(keyframes_.size());
    frame->pose = pose;
    odom::Keyframe kf;
    kf.id = id;
    kf.frame = frame;
    kf.pose = pose;

    auto bag = std::make_shared<loop::DescriptorBag>();
    if (vocabulary_) {
      const Image8 img8 =
          imgproc::rescale_to_8bit(frame->image(), cfg_.rescale_low, cfg_.rescale_high, cfg_.conv);
      *bag = loop::extract_features(img8, vocabulary_.get(), cfg_.features);
      kf.in_loop_database = bag->keypoints.size() >= cfg_.features.min_features && !bag->bow.empty();
      if (!kf.in_loop_database) {
        say("keyframe " + std::to_string(id) + ": " + std::to_string(bag->keypoints.size()) +
            " features, excluded from the loop database");
      }
    }

    if (id > 0) {
      const Pose& prev = keyframes_.back().pose;
      graph_.add_edge({static_cast<std::size_t>(id - 1), static_cast<std::size_t>(id),
                       prev.inverse() * pose, loop::EdgeKind::odometry, 1.0});
    }
    graph_.add_node(pose);
    frames_.push_back(frame);
    bags_.push_back(bag);
    points_.push_back(points);
    result_.map.accumulate(id, pose, frame->image(), *points, K_, cfg_.conv,
                           {.z_min = cfg_.frame.z_min});

    rec.keyframe = true;
    rec.anchor = id;
    rec.anchor_from_frame = Pose();

    const bool searchable = kf.in_loop_database;
    keyframes_.push_back(std::move(kf));
    if (searchable) {
      submit(id);
      database_.push_back({id, frame->stamp(), bag->bow});
    }
  }

  void submit(int id) {
    LoopJob job;
    job.query = id;
    job.database = database_;
    job.frames = frames_;
    job.bags = bags_;
    job.points = points_;
    for (const auto& kf : keyframes_) job.poses.push_back(kf.pose);
    if (cfg_.deterministic) {
      std::promise<LoopOutcome> p;
      p.set_value(process_loop(job, K_, cfg_));
      pending_ = p.get_future();
    } else {
      pending_ = std::async(std::launch::async, [job = std::move(job), K = K_, cfg = cfg_]() {
        return process_loop(job, K, cfg);
      });
    }
  }

  /// Collects the outstanding loop search and, when it yields an accepted
  /// edge, optimizes the graph and moves `current` with its anchor.
  void apply_pending(Pose& current) {
    if (!pending_.valid()) return;
    const LoopOutcome outcome = pending_.get();
    if (!outcome.event) return;
    const LoopEvent& ev = *outcome.event;
    result_.loops.push_back(ev);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "loop: keyframe %d -> %d eta %.3f common %.3f init %s a %.4f b %.1f error %.4f %s",
                  ev.query_keyframe, ev.candidate_keyframe, ev.eta, ev.common_ratio, ev.init.c_str(),
                  ev.forward_model.a, ev.forward_model.b, ev.cross_error,
                  ev.accepted ? "accepted" : "rejected");
    say(buf);
    if (!outcome.edge) return;

    graph_.add_edge(*outcome.edge);
    const auto solved = loop::optimize_pose_graph(graph_, cfg_.pose_graph);
    if (!solved.converged) warn("pose graph did not converge; keeping the best iterate");
    const Pose anchor_old = keyframes_.back().pose;
    std::map<int, Pose> corrected;
    for (std::size_t n = 0; n < keyframes_.size(); ++n) {
      keyframes_[n].pose = solved.poses[n];
      corrected[keyframes_[n].id] = solved.poses[n];
    }
    graph_.nodes = solved.poses;
    result_.map.reanchor(corrected);
    current = keyframes_.back().pose * anchor_old.inverse() * current;
  }

  void finish() {
    for (const auto& rec : result_.frames) {
      const Pose world = keyframes_[static_cast<std::size_t>(rec.anchor)].pose * rec.anchor_from_frame;
      result_.trajectory.push_back({rec.stamp, world, true});
    }
    for (const auto& kf : keyframes_) {
      result_.keyframes.push_back({kf.stamp(), kf.pose, true});
      result_.keyframe_ids.push_back(kf.id);
    }
  }

  const DatasetManifest& manifest_;
  CameraIntrinsics K_;
  Pose cam_from_lidar_;
  PipelineConfig cfg_;
  std::ostream* log_;

  std::unique_ptr<loop::Vocabulary> vocabulary_;
  std::vector<odom::Keyframe> keyframes_;
  std::vector<FramePtr> frames_;
  std::vector<BagPtr> bags_;
  std::vector<PointsPtr> points_;
  std::vector<loop::DatabaseEntry> database_;
  loop::PoseGraph graph_;
  std::future<LoopOutcome> pending_;
  PipelineResult result_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

PipelineResult run_pipeline(const DatasetManifest& manifest, const calib::CalibrationFile& calibration,
                            const PipelineConfig& cfg, std::ostream* log) {
  validate(cfg);
  calibration.intrinsics.validate();
  if (log) {
    *log << "# resolved config\n";
    write_pipeline_config(*log, cfg);
  }
  Pipeline p(manifest, calibration, cfg, log);
  return p.run();
}

void write_outputs(const PipelineResult& r, const PipelineConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  geom::write_tum(out_dir / "trajectory.txt", r.trajectory);
  geom::write_tum(out_dir / "keyframes.txt", r.keyframes);

  const auto points = map::voxel_filter(r.map.points(), cfg.map_voxel);
  map::PlyOptions ply{.format = cfg.map_format, .colormap = false,
                      .t_low = cfg.colormap_low, .t_high = cfg.colormap_high};
  map::write_ply(out_dir / "map.ply", points, ply);
  ply.colormap = true;
  map::write_ply(out_dir / "map_colored.ply", points, ply);

  std::string diag = "timestamp,keyframe,anchor,cost,weighted_rms,sigma,valid_ratio,inlier_ratio,iterations,rank_deficient,refine_fell_back\n";
  char buf[512];
  for (const auto& f : r.frames) {
    std::string iters;
    for (std::size_t n = 0; n < f.tracking.iterations.size(); ++n) {
      if (n) iters += ';';
      iters += std::to_string(f.tracking.iterations[n]);
    }
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.9g,%.9g,%.9g,%.6f,%.6f,%s,%d,%d\n",
                  geom::format_seconds(f.stamp).c_str(), f.keyframe ? 1 : 0, f.anchor,
                  f.tracking.cost, f.tracking.weighted_rms, f.tracking.sigma,
                  f.tracking.valid_ratio, f.tracking.inlier_ratio, iters.c_str(),
                  f.tracking.rank_deficient ? 1 : 0, f.refine_fell_back ? 1 : 0);
    diag += buf;
  }
  write_text(out_dir / "diagnostics.csv", diag);

  std::string loops = "query_ts,candidate_ts,query_kf,candidate_kf,eta,common_ratio,init,a,b,reverse_a,reverse_b,forward_ok,reverse_ok,cross_error,accepted\n";
  for (const auto& e : r.loops) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.6f,%.6f,%s,%.6f,%.3f,%.6f,%.3f,%d,%d,%.6g,%d\n",
                  geom::format_seconds(e.query_stamp).c_str(),
                  geom::format_seconds(e.candidate_stamp).c_str(), e.query_keyframe,
                  e.candidate_keyframe, e.eta, e.common_ratio, e.init.c_str(), e.forward_model.a,
                  e.forward_model.b, e.reverse_model.a, e.reverse_model.b, e.forward_ok ? 1 : 0,
                  e.reverse_ok ? 1 : 0, e.cross_error, e.accepted ? 1 : 0);
    loops += buf;
  }
  write_text(out_dir / "loops.csv", loops);

  std::ostringstream cfg_text;
  write_pipeline_config(cfg_text, cfg);
  write_text(out_dir / "config_resolved.txt", cfg_text.str());
}

}  // namespace tslam::cli
