#pragma once

// SO(3)/SE(3) helpers, the pinhole camera model and pose error metrics.
//
// Conventions used throughout the project:
//  * CameraPose::rot is camera-to-world, CameraPose::trans is the camera
//    center in world coordinates.
//  * Cameras look down their local -z axis, +y is up in the image, and pixel
//    (u, v) is sampled at its center (u + 0.5, v + 0.5).

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ilnerf/errors.hpp"

namespace ilnerf {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height;
  }

  // Square pixels, principal point at the image center.
  static Intrinsics from_fov(int width, int height, double fov_x_rad) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width / std::tan(0.5 * fov_x_rad);
    k.fy = k.fx;
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    return k;
  }
};

template <typename Scalar = double>
struct CameraPose {
  Mat3<Scalar> rot = Mat3<Scalar>::Identity();
  Vec3<Scalar> trans = Vec3<Scalar>::Zero();

  Vec3<Scalar> center() const { return trans; }
};

// Trainable pose increment: rotation `a` (axis-angle, applied on the left)
// and translation increment `b`.
template <typename Scalar = double>
struct PoseDelta {
  Vec3<Scalar> a = Vec3<Scalar>::Zero();
  Vec3<Scalar> b = Vec3<Scalar>::Zero();
};

template <typename Scalar = double>
struct Ray {
  Vec3<Scalar> origin = Vec3<Scalar>::Zero();
  Vec3<Scalar> dir = Vec3<Scalar>(0, 0, -1);
};

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& v) {
  Mat3<Scalar> s;
  s << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return s;
}

template <typename Scalar>
bool is_rotation(const Mat3<Scalar>& m, Scalar tol = Scalar(1e-9)) {
  if (!m.allFinite()) return false;
  const Scalar ortho = (m.transpose() * m - Mat3<Scalar>::Identity()).norm();
  return ortho <= tol && std::abs(m.determinant() - Scalar(1)) <= tol;
}

namespace detail {

// Coefficients of R = I + A*K + B*K^2 with K = [a]x and theta = |a|.
template <typename Scalar>
void rodrigues_coeffs(Scalar theta, Scalar& A, Scalar& B) {
  if (theta < Scalar(1e-8)) {
    const Scalar t2 = theta * theta;
    A = Scalar(1) - t2 / Scalar(6);
    B = Scalar(0.5) - t2 / Scalar(24);
  } else {
    A = std::sin(theta) / theta;
    const Scalar s = std::sin(Scalar(0.5) * theta);
    B = Scalar(2) * s * s / (theta * theta);
  }
}

// dA/dtheta / theta and dB/dtheta / theta.
template <typename Scalar>
void rodrigues_coeff_derivs(Scalar theta, Scalar& dA, Scalar& dB) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(1e-2)) {
    dA = Scalar(-1) / Scalar(3) + t2 / Scalar(30) - t2 * t2 / Scalar(840);
    dB = Scalar(-1) / Scalar(12) + t2 / Scalar(180) - t2 * t2 / Scalar(6720);
  } else {
    const Scalar c = std::cos(theta);
    const Scalar s = std::sin(theta);
    dA = (theta * c - s) / (t2 * theta);
    dB = (theta * s - Scalar(2) * (Scalar(1) - c)) / (t2 * t2);
  }
}

}  // namespace detail

// Exponential map so(3) -> SO(3).
template <typename Scalar>
Mat3<Scalar> rodrigues(const Vec3<Scalar>& a) {
  if (!a.allFinite()) throw InvalidArgument("rodrigues: non-finite axis-angle");
  Scalar A, B;
  detail::rodrigues_coeffs(a.norm(), A, B);
  const Mat3<Scalar> K = skew(a);
  return Mat3<Scalar>::Identity() + A * K + B * K * K;
}

// Partial derivatives dR/da_j of rodrigues(a), j = 0..2.
template <typename Scalar>
std::array<Mat3<Scalar>, 3> rodrigues_jacobian(const Vec3<Scalar>& a) {
  const Scalar theta = a.norm();
  Scalar A, B, dA, dB;
  detail::rodrigues_coeffs(theta, A, B);
  detail::rodrigues_coeff_derivs(theta, dA, dB);
  const Mat3<Scalar> K = skew(a);
  const Mat3<Scalar> K2 = K * K;
  std::array<Mat3<Scalar>, 3> out;
  for (int j = 0; j < 3; ++j) {
    const Mat3<Scalar> E = skew<Scalar>(Vec3<Scalar>::Unit(j));
    out[j] = dA * a[j] * K + A * E + dB * a[j] * K2 + B * (E * K + K * E);
  }
  return out;
}

// Nearest rotation in Frobenius norm.
template <typename Scalar>
Mat3<Scalar> so3_project(const Mat3<Scalar>& m) {
  if (!m.allFinite()) throw InvalidArgument("so3_project: non-finite matrix");
  Eigen::JacobiSVD<Mat3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(2) <= sv(0) * Scalar(1e-12)) {
    throw DegenerateInput("so3_project: singular matrix");
  }
  const Mat3<Scalar> U = svd.matrixU();
  const Mat3<Scalar> V = svd.matrixV();
  Vec3<Scalar> d(Scalar(1), Scalar(1), (U * V.transpose()).determinant() < 0 ? Scalar(-1) : Scalar(1));
  return U * d.asDiagonal() * V.transpose();
}

// Rotation angle of r1^T r2, in [0, pi].
// Evaluated as atan2(|sin|, cos) so small angles keep full precision; the value
// agrees with arccos((trace - 1) / 2) wherever the latter is well conditioned.
template <typename Scalar>
Scalar rotation_geodesic(const Mat3<Scalar>& r1, const Mat3<Scalar>& r2) {
  const Mat3<Scalar> r = r1.transpose() * r2;
  const Scalar c = std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Vec3<Scalar> axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const Scalar s = Scalar(0.5) * axis.norm();
  return std::atan2(s, c);
}

// Unnormalized viewing direction of pixel (u, v) in camera coordinates.
template <typename Scalar = double>
Vec3<Scalar> camera_direction(const Intrinsics& k, double u, double v) {
  return Vec3<Scalar>(Scalar((u + 0.5 - k.cx) / k.fx), Scalar(-(v + 0.5 - k.cy) / k.fy), Scalar(-1));
}

template <typename Scalar>
Ray<Scalar> camera_ray(const CameraPose<Scalar>& pose, const Intrinsics& k, double u, double v) {
  if (!(u >= 0 && u < k.width && v >= 0 && v < k.height)) {
    throw InvalidArgument("camera_ray: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                          ") outside image");
  }
  Ray<Scalar> ray;
  ray.origin = pose.trans;
  ray.dir = (pose.rot * camera_direction<Scalar>(k, u, v)).normalized();
  return ray;
}

// Pose with the increment applied: (Omega(a) * rot, trans + b).
template <typename Scalar>
CameraPose<Scalar> apply_delta(const CameraPose<Scalar>& base, const PoseDelta<Scalar>& delta) {
  return {rodrigues(delta.a) * base.rot, base.trans + delta.b};
}

// Camera at `eye` looking at `target`; `up` fixes the roll.
template <typename Scalar>
CameraPose<Scalar> look_at(const Vec3<Scalar>& eye, const Vec3<Scalar>& target,
                           const Vec3<Scalar>& up = Vec3<Scalar>::UnitZ()) {
  const Vec3<Scalar> back = (eye - target).normalized();
  const Vec3<Scalar> right = up.cross(back).normalized();
  const Vec3<Scalar> cam_up = back.cross(right);
  CameraPose<Scalar> pose;
  pose.rot.col(0) = right;
  pose.rot.col(1) = cam_up;
  pose.rot.col(2) = back;
  pose.trans = eye;
  return pose;
}

}  // namespace ilnerf
