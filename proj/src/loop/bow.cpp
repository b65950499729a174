#include "tslam/loop/bow.hpp"

#include <algorithm>
#include <cmath>

namespace tslam::loop {

void l1_normalize(BowVector& v) {
  double sum = 0.0;
  for (const auto& [w, x] : v) sum += std::abs(x);
  if (sum <= 0.0) return;
  for (auto& [w, x] : v) x /= sum;
}

double similarity(const BowVector& v_c, const BowVector& v_q) {
  double nc = 0.0;
  double nq = 0.0;
  for (const auto& [w, x] : v_c) nc += std::abs(x);
  for (const auto& [w, x] : v_q) nq += std::abs(x);
  if (nc <= 0.0 || nq <= 0.0) return 0.0;

  // |a - b|_1 = |a|_1 + |b|_1 + sum over shared words of (|a-b| - |a| - |b|)
  double l1 = 2.0;
  auto a = v_c.begin();
  auto b = v_q.begin();
  while (a != v_c.end() && b != v_q.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      const double x = a->second / nc;
      const double y = b->second / nq;
      l1 += std::abs(x - y) - std::abs(x) - std::abs(y);
      ++a;
      ++b;
    }
  }
  return std::clamp(1.0 - 0.5 * l1, 0.0, 1.0);
}

double common_word_ratio(const BowVector& v_c, const BowVector& v_q) {
  if (v_c.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& [w, x] : v_c) common += v_q.count(w);
  return static_cast<double>(common) / static_cast<double>(v_c.size());
}

}  // namespace tslam::loop
