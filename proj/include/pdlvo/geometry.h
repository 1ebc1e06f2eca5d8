#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pdlvo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Rigid transform on SE(3).
//
// Naming convention used throughout the code base: a pose called
// `b_from_a` maps coordinates expressed in frame a into frame b, i.e.
// p_b = b_from_a * p_a. Composition reads right to left:
// c_from_a = c_from_b * b_from_a.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }
  // Rejects anything that is not a rigid 4x4 (last row, orthonormality).
  static Pose from_matrix(const Mat4& m, double tolerance = 1e-6);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const;
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  // Projects the rotation back onto SO(3); used after long products.
  Pose renormalized() const;

  // max |R^T R - I| and |det R - 1|.
  double orthonormality_error() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// se(3) element. The 6-vector layout is (translation, rotation).
struct Twist {
  Vec3 rotation = Vec3::Zero();     // radians, axis * angle
  Vec3 translation = Vec3::Zero();  // meters

  Vec6 vector() const;
  static Twist from_vector(const Vec6& v);
};

Mat3 skew(const Vec3& w);
Mat3 so3_exp(const Vec3& w);

Pose se3_exp(const Twist& xi);
// Throws NearSingularRotation when the rotation angle is numerically pi.
Twist se3_log(const Pose& pose);

inline Pose se3_exp(const Vec6& xi) { return se3_exp(Twist::from_vector(xi)); }

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {u, v}; }
};

// Pinhole intrinsics for a pre-rectified image. Pixel (u, v) with integer
// coordinates refers to the pixel centre.
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Checks fx, fy > 0 and the principal point lies inside the image.
  void validate() const;
  bool valid() const noexcept;

  // Intrinsics of the image obtained by `levels` successive 2x2 averages.
  CameraModel downscaled(int levels) const;

  bool contains(const Pixel& px, double margin = 0.0) const;
};

// u = fx * x / z + cx, v = fy * y / z + cy.
Pixel project(const CameraModel& cam, const Vec3& p_cam);
Vec3 unproject(const CameraModel& cam, const Pixel& px, double depth);

// u' = project(dst, dst_from_src * unproject(src, u, d)); the result is not
// bounds checked.
Pixel warp_pixel(const CameraModel& cam_src, const CameraModel& cam_dst,
                 const Pose& dst_from_src, const Pixel& px, double depth);

// Non-throwing variants for the inner loops.
std::optional<Pixel> try_project(const CameraModel& cam, const Vec3& p_cam);
std::optional<Pixel> try_warp_pixel(const CameraModel& cam_src,
                                    const CameraModel& cam_dst,
                                    const Pose& dst_from_src, const Pixel& px,
                                    double depth);

// d(u, v) / d(x, y, z) at p_cam.
Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraModel& cam,
                                                const Vec3& p_cam);

}  // namespace pdlvo
