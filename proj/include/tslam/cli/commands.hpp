#pragma once

#include "tslam/calib/extrinsic.hpp"
#include "tslam/cli/config.hpp"
#include "tslam/cli/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace tslam::cli {

/// Board observations of the dataset (frames with a corner sidecar) fed to
/// the plane-based calibration, starting from the extrinsic in calib.txt.
/// Throws DataError when calib.txt has no board or no frame has corners.
[[nodiscard]] calib::CalibrationResult calibrate_dataset(const DatasetManifest& manifest,
                                                         const calib::CalibrationFile& initial,
                                                         const calib::CalibrationOptions& opts);

// Subcommand bodies. Each returns an ExitCode and reports errors on `err`.
int calibrate_command(const std::filesystem::path& dataset, const std::filesystem::path& output,
                      const std::optional<std::filesystem::path>& config, std::ostream& out,
                      std::ostream& err);
int run_command(const std::filesystem::path& dataset,
                const std::optional<std::filesystem::path>& config,
                const std::filesystem::path& out_dir, bool deterministic, std::ostream& log,
                std::ostream& err);
int synth_command(const std::filesystem::path& scene_config, const std::filesystem::path& out_dir,
                  std::ostream& out, std::ostream& err);
int eval_command(const std::filesystem::path& estimate, const std::filesystem::path& groundtruth,
                 bool align, bool scale, std::ostream& out, std::ostream& err);

}  // namespace tslam::cli
