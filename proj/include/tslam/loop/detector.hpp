#pragma once

#include "tslam/geom/trajectory.hpp"
#include "tslam/loop/bow.hpp"

#include <optional>
#include <span>

namespace tslam::loop {

/// One keyframe's entry in the place-recognition database.
struct DatabaseEntry {
  int keyframe_id = 0;
  geom::Timestamp stamp = 0;
  BowVector bow;
};

struct LoopDetectorOptions {
  double recent_window_s = 30.0;
  double min_eta = 0.75;
  double min_common_ratio = 0.4;
  /// Preceding keyframes considered when picking the score normalizer.
  int normalizer_neighbors = 3;
};

struct LoopCandidate {
  int keyframe_id = 0;
  std::size_t index = 0;  // position in the database span
  double score = 0.0;     // raw similarity
  double normalizer = 1.0;
  double eta = 0.0;
  double common_ratio = 0.0;
};

/// Best similarity of `query` to the keyframes immediately preceding it in
/// time; 1 when there are none or the best score is negligible.
[[nodiscard]] double score_normalizer(const DatabaseEntry& query,
                                      std::span<const DatabaseEntry> database,
                                      const LoopDetectorOptions& opts = {});

/// Highest normalized score among entries older than the recent window,
/// accepted only when both the normalized score and the common-word ratio
/// clear their thresholds.
[[nodiscard]] std::optional<LoopCandidate> detect_loop(const DatabaseEntry& query,
                                                       std::span<const DatabaseEntry> database,
                                                       const LoopDetectorOptions& opts = {});

}  // namespace tslam::loop
