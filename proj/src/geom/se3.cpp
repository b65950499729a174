#include "tslam/geom/se3.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tslam::geom {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (orthonormality_error() > 1e-7) rotation_ = nearest_rotation(rotation_);
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

Pose Pose::inverse() const {
  const Mat3 Rt = rotation_.transpose();
  return Pose(Rt, -(Rt * translation_));
}

double Pose::orthonormality_error() const {
  const double ortho =
      (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation_.determinant() - 1.0));
}

namespace {

struct ExpCoefficients {
  double a;  // sin(t)/t
  double b;  // (1-cos(t))/t^2
  double c;  // (t-sin(t))/t^3
};

// (t - sin t)/t^3 and the V^-1 coefficient cancel badly well above
// kSmallAngle, so they switch to series earlier.
constexpr double kSeriesAngle = 0.1;

ExpCoefficients exp_coefficients(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return {1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0};
  }
  const double s = std::sin(theta);
  const double h = std::sin(0.5 * theta);
  ExpCoefficients k{s / theta, 2.0 * h * h / t2, 0.0};
  if (theta < kSeriesAngle) {
    k.c = 1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0)));
  } else {
    k.c = (theta - s) / (t2 * theta);
  }
  return k;
}

// (1 - a / 2b) / t^2
double vinv_coefficient(double theta) {
  const double t2 = theta * theta;
  if (theta < kSeriesAngle) {
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0;
  }
  return 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
}

}  // namespace

Mat3 so3_exp(const Vec3& w) {
  const auto k = exp_coefficients(w.norm());
  const Mat3 W = skew(w);
  return Mat3::Identity() + k.a * W + k.b * W * W;
}

double rotation_angle(const Mat3& R) {
  const double cos_theta = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double sin_theta = vee(R).norm();
  return std::atan2(sin_theta, cos_theta);
}

Vec3 so3_log(const Mat3& R) {
  const double theta = rotation_angle(R);
  if (theta < kSmallAngle) {
    // first-order: R - R^T ~ 2 W
    return vee(R) * (1.0 + theta * theta / 6.0);
  }
  constexpr double pi = std::numbers::pi;
  if (pi - theta < 1e-9) {
    throw BranchAmbiguity("so3_log: rotation angle is pi, axis sign ambiguous");
  }
  if (pi - theta < 1e-3) {
    // Near pi: axis from the symmetric part, sign from the skew part.
    const double c = std::cos(theta);
    const Mat3 aat = ((R + R.transpose()) * 0.5 - c * Mat3::Identity()) / (1.0 - c);
    int k = 0;
    aat.diagonal().maxCoeff(&k);
    Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
    axis.normalize();
    if (axis.dot(vee(R)) < 0.0) axis = -axis;
    return axis * theta;
  }
  return vee(R) * (theta / std::sin(theta));
}

Pose exp(const Twist& xi) {
  const double theta = xi.angular.norm();
  const auto k = exp_coefficients(theta);
  const Mat3 W = skew(xi.angular);
  const Mat3 W2 = W * W;
  const Mat3 R = Mat3::Identity() + k.a * W + k.b * W2;
  const Mat3 V = Mat3::Identity() + k.b * W + k.c * W2;
  return Pose(R, V * xi.linear);
}

Twist log(const Pose& T) {
  const Vec3 w = so3_log(T.rotation());
  const double theta = w.norm();
  const Mat3 W = skew(w);
  const double d = vinv_coefficient(theta);
  const Mat3 V_inv = Mat3::Identity() - 0.5 * W + d * W * W;
  return Twist{w, V_inv * T.translation()};
}

Mat6 adjoint(const Pose& T) {
  Mat6 ad = Mat6::Zero();
  const Mat3& R = T.rotation();
  ad.topLeftCorner<3, 3>() = R;
  ad.bottomRightCorner<3, 3>() = R;
  ad.bottomLeftCorner<3, 3>() = skew(T.translation()) * R;
  return ad;
}

PoseDelta pose_delta(const Pose& a, const Pose& b) {
  const Pose d = a.inverse() * b;
  return {rotation_angle(d.rotation()), d.translation().norm()};
}

}  // namespace tslam::geom
