#include "tslam/cli/commands.hpp"
#include "tslam/cli/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  using namespace tslam::cli;
  CLI::App app{"Thermal-LiDAR direct SLAM"};
  app.require_subcommand(1);

  std::string dataset, output, config, scene, est, gt;
  bool deterministic = false, align = false, scale = false;

  auto* calibrate = app.add_subcommand("calibrate", "Estimate the camera-LiDAR extrinsic from board observations");
  calibrate->add_option("dataset", dataset, "Dataset root")->required();
  calibrate->add_option("-o,--output", output, "Calibration file to write")->required();
  calibrate->add_option("-c,--config", config, "Pipeline config (calib.* keys)");

  auto* run = app.add_subcommand("run", "Run odometry, loop closure and mapping on a dataset");
  run->add_option("dataset", dataset, "Dataset root")->required();
  run->add_option("-c,--config", config, "Pipeline config");
  run->add_option("-o,--output", output, "Output directory")->required();
  run->add_flag("--deterministic", deterministic, "Single-threaded run (same as deterministic = true)");

  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset from a scene config");
  synth->add_option("scene", scene, "Scene config")->required();
  synth->add_option("-o,--output", output, "Dataset directory to create")->required();

  auto* eval = app.add_subcommand("eval", "Absolute trajectory error against ground truth");
  eval->add_option("estimate", est, "Estimated trajectory (TUM)")->required();
  eval->add_option("groundtruth", gt, "Ground truth trajectory (TUM)")->required();
  eval->add_flag("--align", align, "Rigid (SE3) alignment before the error");
  eval->add_flag("--scale", scale, "Similarity alignment (implies --align)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto opt_config = config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config);
  if (*calibrate) return calibrate_command(dataset, output, opt_config, std::cout, std::cerr);
  if (*run) return run_command(dataset, opt_config, output, deterministic, std::cout, std::cerr);
  if (*synth) return synth_command(scene, output, std::cout, std::cerr);
  if (*eval) return eval_command(est, gt, align, scale, std::cout, std::cerr);
  return kExitFailure;
}
