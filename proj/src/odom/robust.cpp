#include "tslam/odom/robust.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tslam::odom {

double estimate_sigma(std::span<const double> residuals, double nu) {
  if (residuals.size() < 10) {
    throw std::invalid_argument("estimate_sigma: need at least 10 residuals");
  }
  std::vector<double> abs_r(residuals.size());
  std::transform(residuals.begin(), residuals.end(), abs_r.begin(),
                 [](double r) { return std::abs(r); });
  const auto mid = abs_r.begin() + static_cast<std::ptrdiff_t>(abs_r.size() / 2);
  std::nth_element(abs_r.begin(), mid, abs_r.end());
  double sigma2 = std::pow(*mid / 0.6745, 2);
  if (!(sigma2 > kSigmaFloor * kSigmaFloor)) {
    // Median zero: fall back to RMS so a sparse set of non-zero residuals
    // still yields a scale.
    double sum = 0.0;
    for (double r : residuals) sum += r * r;
    sigma2 = sum / static_cast<double>(residuals.size());
    if (!(sigma2 > kSigmaFloor * kSigmaFloor)) return kSigmaFloor;
  }

  const double n = static_cast<double>(residuals.size());
  const Eigen::ArrayXd r2 =
      Eigen::Map<const Eigen::ArrayXd>(residuals.data(), static_cast<Eigen::Index>(residuals.size()))
          .square();
  for (int it = 0; it < 50; ++it) {
    const double inv = 1.0 / sigma2;
    const double sum = (r2 / (nu + r2 * inv)).sum();
    const double next = std::max(sum * (nu + 1.0) / n, kSigmaFloor * kSigmaFloor);
    const double rel = std::abs(std::sqrt(next) - std::sqrt(sigma2)) / std::sqrt(sigma2);
    sigma2 = next;
    if (rel < 1e-6) break;
  }
  return std::max(std::sqrt(sigma2), kSigmaFloor);
}

}  // namespace tslam::odom
