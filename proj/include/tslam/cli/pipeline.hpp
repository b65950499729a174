#pragma once

#include "tslam/calib/extrinsic.hpp"
#include "tslam/cli/config.hpp"
#include "tslam/cli/dataset.hpp"
#include "tslam/map/thermo_map.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tslam::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitTrackingLost = 4,
};

struct FrameRecord {
  geom::Timestamp stamp = 0;
  int anchor = 0;            // keyframe the pose is stored against
  Pose anchor_from_frame;    // T_kf^-1 T_frame
  bool keyframe = false;
  odom::TrackDiagnostics tracking;  // empty for the first frame
  bool refine_fell_back = false;
};

/// One loop candidate and what became of it.
struct LoopEvent {
  int query_keyframe = 0;
  int candidate_keyframe = 0;
  geom::Timestamp query_stamp = 0;
  geom::Timestamp candidate_stamp = 0;
  double eta = 0.0;
  double common_ratio = 0.0;
  std::string init;  // identity | ransac | failed
  loop::AffineModel forward_model;
  loop::AffineModel reverse_model;
  bool forward_ok = false;
  bool reverse_ok = false;
  double cross_error = 0.0;
  bool accepted = false;
  Pose T_c_to_kf;  // forward estimate
  Pose T_kf_to_c;  // reverse estimate
};

struct PipelineResult {
  geom::Trajectory trajectory;  // every processed frame, final poses
  geom::Trajectory keyframes;
  std::vector<int> keyframe_ids;
  std::vector<FrameRecord> frames;
  std::vector<LoopEvent> loops;
  map::ThermoMap map;
  bool loop_closure_active = false;
  bool tracking_lost = false;
  std::string lost_reason;
  std::vector<std::string> warnings;
};

/// Tracking, local refinement, keyframing, loop closure with pose-graph
/// correction and map accumulation over the dataset in time order. Loop
/// work for keyframe k runs on a worker thread (inline with
/// cfg.deterministic) and is applied when keyframe k+1 is created, so both
/// modes produce identical results. Tracking loss stops processing and is
/// reported through `tracking_lost`. Throws DataError for unreadable input.
[[nodiscard]] PipelineResult run_pipeline(const DatasetManifest& manifest,
                                          const calib::CalibrationFile& calibration,
                                          const PipelineConfig& cfg, std::ostream* log = nullptr);

/// trajectory.txt, keyframes.txt, map.ply, map_colored.ply, diagnostics.csv,
/// loops.csv and config_resolved.txt.
void write_outputs(const PipelineResult& result, const PipelineConfig& cfg,
                   const std::filesystem::path& out_dir);

}  // namespace tslam::cli
