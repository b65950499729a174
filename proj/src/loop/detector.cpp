#include "tslam/loop/detector.hpp"

#include <algorithm>
#include <vector>

namespace tslam::loop {

double score_normalizer(const DatabaseEntry& query, std::span<const DatabaseEntry> database,
                        const LoopDetectorOptions& opts) {
  std::vector<const DatabaseEntry*> before;
  for (const auto& e : database) {
    if (e.stamp < query.stamp && e.keyframe_id != query.keyframe_id) before.push_back(&e);
  }
  std::sort(before.begin(), before.end(), [](const DatabaseEntry* a, const DatabaseEntry* b) {
    return a->stamp > b->stamp;
  });
  double best = 0.0;
  const auto n = std::min<std::size_t>(before.size(), static_cast<std::size_t>(
                                                          std::max(opts.normalizer_neighbors, 0)));
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, similarity(query.bow, before[i]->bow));
  return best < 1e-3 ? 1.0 : best;
}

std::optional<LoopCandidate> detect_loop(const DatabaseEntry& query,
                                         std::span<const DatabaseEntry> database,
                                         const LoopDetectorOptions& opts) {
  if (database.empty() || query.bow.empty()) return std::nullopt;
  const auto window = static_cast<geom::Timestamp>(opts.recent_window_s * 1e9);
  const double normalizer = score_normalizer(query, database, opts);

  std::optional<LoopCandidate> best;
  for (std::size_t i = 0; i < database.size(); ++i) {
    const auto& e = database[i];
    if (e.keyframe_id == query.keyframe_id || e.bow.empty()) continue;
    const geom::Timestamp gap = query.stamp > e.stamp ? query.stamp - e.stamp : e.stamp - query.stamp;
    if (gap <= window) continue;
    const double s = similarity(query.bow, e.bow);
    const double eta = s / normalizer;
    if (best && eta <= best->eta) continue;
    best = LoopCandidate{e.keyframe_id, i, s, normalizer, eta, common_word_ratio(query.bow, e.bow)};
  }
  if (!best || best->eta < opts.min_eta || best->common_ratio < opts.min_common_ratio) {
    return std::nullopt;
  }
  return best;
}

}  // namespace tslam::loop
