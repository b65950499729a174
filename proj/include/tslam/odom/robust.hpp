#pragma once

#include <span>

namespace tslam::odom {

/// Student-t weight w(r) = (nu + 1) / (nu + (r / sigma)^2).
struct RobustWeight {
  double nu = 5.0;
  double sigma = 1.0;

  [[nodiscard]] double operator()(double r) const {
    const double s = r / sigma;
    return (nu + 1.0) / (nu + s * s);
  }
};

inline constexpr double kSigmaFloor = 1e-3;  // raw counts

/// Scale of a Student-t residual distribution by fixed-point iteration
///   sigma^2 <- (1/n) sum r^2 (nu + 1) / (nu + r^2 / sigma^2),
/// started at MAD / 0.6745; stops at relative change < 1e-6 or 50 iterations.
/// Returns kSigmaFloor for all-zero input. Throws std::invalid_argument
/// for fewer than 10 residuals.
[[nodiscard]] double estimate_sigma(std::span<const double> residuals, double nu = 5.0);

}  // namespace tslam::odom
