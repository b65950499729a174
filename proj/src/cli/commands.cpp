#include "tslam/cli/commands.hpp"

#include "tslam/cli/evaluate.hpp"
#include "tslam/cli/pipeline.hpp"
#include "tslam/synth/sequence.hpp"

#include <cstdio>
#include <ostream>

namespace tslam::cli {

namespace fs = std::filesystem;

namespace {

PipelineConfig config_or_default(const std::optional<fs::path>& path) {
  return path ? load_pipeline_config(*path) : PipelineConfig{};
}

calib::CalibrationFile load_calibration(const fs::path& path) {
  try {
    return calib::read_calibration(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

}  // namespace

calib::CalibrationResult calibrate_dataset(const DatasetManifest& manifest,
                                           const calib::CalibrationFile& initial,
                                           const calib::CalibrationOptions& opts) {
  if (!initial.board) {
    throw DataError(manifest.calibration.string() + ": no 'board' line; calibration needs the board geometry");
  }
  std::vector<calib::CalibrationFrame> frames;
  for (const auto& f : manifest.frames) {
    if (!f.corners) continue;
    calib::CalibrationFrame cf;
    try {
      cf.corners = calib::read_corner_sidecar(*f.corners);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    cf.cloud = read_cloud_csv(f.cloud);
    frames.push_back(std::move(cf));
  }
  if (frames.empty()) {
    throw DataError("dataset " + manifest.root.string() + ": no frame has a .corners.csv sidecar");
  }
  try {
    return calib::calibrate(frames, *initial.board, initial.intrinsics, initial.lidar_from_camera, opts);
  } catch (const calib::DegenerateGeometry& e) {
    throw DataError(std::string("calibration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("calibration: ") + e.what());
  }
}

int calibrate_command(const fs::path& dataset, const fs::path& output,
                      const std::optional<fs::path>& config, std::ostream& out, std::ostream& err) {
  try {
    const PipelineConfig cfg = config_or_default(config);
    const DatasetManifest m = load_dataset(dataset, static_cast<geom::Timestamp>(cfg.sync_tolerance_ms * 1e6));
    for (const auto& w : m.warnings) err << "warning: " << w << "\n";
    const calib::CalibrationFile initial = load_calibration(m.calibration);
    const auto result = calibrate_dataset(m, initial, cfg.calibration);
    calib::write_calibration(output, {result.lidar_from_camera, initial.intrinsics, initial.board});
    char buf[200];
    std::snprintf(buf, sizeof(buf), "boards used %zu, rejected %zu, cost %.6g -> %.6g\n",
                  result.pairs.size(), result.rejected, result.refine.initial_cost,
                  result.refine.final_cost);
    out << buf;
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_command(const fs::path& dataset, const std::optional<fs::path>& config,
                const fs::path& out_dir, bool deterministic, std::ostream& log, std::ostream& err) {
  try {
    PipelineConfig cfg = config_or_default(config);
    if (deterministic) cfg.deterministic = true;
    const DatasetManifest m = load_dataset(dataset, static_cast<geom::Timestamp>(cfg.sync_tolerance_ms * 1e6));
    for (const auto& w : m.warnings) err << "warning: " << w << "\n";
    const calib::CalibrationFile calib = load_calibration(m.calibration);
    const PipelineResult r = run_pipeline(m, calib, cfg, &log);
    write_outputs(r, cfg, out_dir);
    std::size_t accepted = 0;
    for (const auto& e : r.loops) accepted += e.accepted ? 1 : 0;
    log << "frames " << r.trajectory.size() << ", keyframes " << r.keyframes.size() << ", loops "
        << accepted << " accepted / " << r.loops.size() << " candidates, map points "
        << r.map.size() << "\n";
    if (r.tracking_lost) {
      err << "tracking lost: " << r.lost_reason << " (outputs hold the last good pose)\n";
      return kExitTrackingLost;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int synth_command(const fs::path& scene_config, const fs::path& out_dir, std::ostream& out,
                  std::ostream& err) {
  synth::SceneConfig cfg;
  try {
    cfg = synth::load_scene_config(scene_config);
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    synth::generate_dataset(cfg, out_dir);
    out << "wrote " << cfg.frames << " frames (" << synth::preset_name(cfg.preset) << ") to "
        << out_dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int eval_command(const fs::path& estimate, const fs::path& groundtruth, bool align, bool scale,
                 std::ostream& out, std::ostream& err) {
  geom::Trajectory est;
  geom::Trajectory gt;
  try {
    est = geom::read_tum(estimate);
    gt = geom::read_tum(groundtruth);
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  try {
    const AteResult r = evaluate_ate(est, gt, align, scale);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "rmse %.6f\nmean %.6f\nmax %.6f\nmatched %zu\nscale %.6f\n",
                  r.rmse, r.mean, r.max, r.matched, r.alignment.scale);
    out << buf;
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace tslam::cli
