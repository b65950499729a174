#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>

namespace tslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

namespace geom {

/// Raised by log() when the rotation angle sits on the pi branch cut.
class BranchAmbiguity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kSmallAngle = 1e-8;

[[nodiscard]] Mat3 skew(const Vec3& v);
[[nodiscard]] Vec3 vee(const Mat3& m);

/// Nearest rotation in the Frobenius sense (SVD projection, det +1).
[[nodiscard]] Mat3 nearest_rotation(const Mat3& m);

/// se(3) increment, ordered [angular, linear].
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  [[nodiscard]] Vec6 vector() const {
    Vec6 out;
    out << angular, linear;
    return out;
  }
  [[nodiscard]] static Twist from_vector(const Vec6& xi) {
    return Twist{xi.head<3>(), xi.tail<3>()};
  }
  [[nodiscard]] double norm() const { return vector().norm(); }
};

/// Rigid transform p' = R p + t. Rotation is kept as a matrix.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Rotation drifting off SO(3) by more than 1e-7 is projected back.
  Pose(const Mat3& rotation, const Vec3& translation);

  [[nodiscard]] static Pose identity() { return Pose(); }
  [[nodiscard]] static Pose from_matrix(const Mat4& m) {
    return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  }
  [[nodiscard]] static Pose from_quaternion(const Eigen::Quaterniond& q,
                                            const Vec3& t) {
    return Pose(q.normalized().toRotationMatrix(), t);
  }

  [[nodiscard]] const Mat3& rotation() const { return rotation_; }
  [[nodiscard]] const Vec3& translation() const { return translation_; }
  [[nodiscard]] Eigen::Quaterniond quaternion() const {
    return Eigen::Quaterniond(rotation_).normalized();
  }
  [[nodiscard]] Mat4 matrix() const;

  [[nodiscard]] Vec3 operator*(const Vec3& p) const {
    return rotation_ * p + translation_;
  }
  [[nodiscard]] Pose operator*(const Pose& other) const;
  [[nodiscard]] Pose inverse() const;

  /// max(|R^T R - I|, |det R - 1|)
  [[nodiscard]] double orthonormality_error() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

[[nodiscard]] inline Vec3 transform(const Pose& T, const Vec3& p) { return T * p; }
[[nodiscard]] inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
[[nodiscard]] inline Pose inverse(const Pose& T) { return T.inverse(); }

/// T_m^n = T_n^-1 T_m: maps points of frame m into frame n.
[[nodiscard]] inline Pose relative(const Pose& T_n, const Pose& T_m) {
  return T_n.inverse() * T_m;
}

[[nodiscard]] Mat3 so3_exp(const Vec3& w);
[[nodiscard]] Vec3 so3_log(const Mat3& R);

/// Closed-form SE(3) exponential (Rodrigues + V coupling).
[[nodiscard]] Pose exp(const Twist& xi);
[[nodiscard]] inline Pose exp(const Vec6& xi) { return exp(Twist::from_vector(xi)); }

/// Principal-branch logarithm. Throws BranchAmbiguity at angle pi.
[[nodiscard]] Twist log(const Pose& T);

/// Left-multiplicative update exp(xi) * T.
[[nodiscard]] inline Pose left_update(const Vec6& xi, const Pose& T) {
  return exp(xi) * T;
}

/// 6x6 adjoint in [angular, linear] ordering: exp(Ad_T xi) = T exp(xi) T^-1.
[[nodiscard]] Mat6 adjoint(const Pose& T);

/// Rotation angle in radians.
[[nodiscard]] double rotation_angle(const Mat3& R);

/// Angle of R and translation norm of T, handy for error reporting.
struct PoseDelta {
  double rotation_rad = 0.0;
  double translation = 0.0;
};
[[nodiscard]] PoseDelta pose_delta(const Pose& a, const Pose& b);

}  // namespace geom

using geom::Pose;
using geom::Twist;

}  // namespace tslam
