#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace tslam::loop {

/// 256-bit binary descriptor.
using Descriptor = std::array<std::uint64_t, 4>;

[[nodiscard]] inline int hamming(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += __builtin_popcountll(a[i] ^ b[i]);
  return d;
}

/// Sparse word-id -> weight map, L1-normalized when non-empty.
using BowVector = std::map<std::uint32_t, double>;

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float angle = 0.0f;  // radians
  float score = 0.0f;
};

struct DescriptorBag {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
  BowVector bow;
};

/// Scales the weights to sum to one; empty stays empty.
void l1_normalize(BowVector& v);

/// s = 1 - 0.5 * | v_c/|v_c| - v_q/|v_q| |_1, in [0, 1]; 0 for empty input.
[[nodiscard]] double similarity(const BowVector& v_c, const BowVector& v_q);

/// Fraction of the words of `v_c` that also occur in `v_q`.
[[nodiscard]] double common_word_ratio(const BowVector& v_c, const BowVector& v_q);

}  // namespace tslam::loop
