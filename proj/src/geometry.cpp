#include "pdlvo/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "pdlvo/error.h"

namespace pdlvo {

namespace {

// Below this angle the closed-form coefficients lose digits to
// cancellation; their Taylor series are exact to double precision here.
constexpr double kSmallAngle = 1e-2;
// Below this distance from pi the rotation axis cannot be recovered from
// the antisymmetric part of R.
constexpr double kSingularMargin = 1e-9;
constexpr double kMinDepth = 1e-9;

// (theta - sin theta) / theta^3, by its Taylor series below theta = 1.
double third_order_coeff(double theta) {
  const double t2 = theta * theta;
  if (theta >= 1.0) return (theta - std::sin(theta)) / (t2 * theta);
  double term = 1.0 / 6.0, sum = 0.0;
  for (int k = 0; k < 12; ++k) {
    sum += term;
    term *= -t2 / ((2 * k + 4) * (2 * k + 5));
  }
  return sum;
}

// (1 - (theta/2) cot(theta/2)) / theta^2, the K^2 coefficient of V^{-1}.
double inverse_v_coeff(double theta) {
  const double t2 = theta * theta;
  if (theta >= 0.1) return (1.0 - 0.5 * theta / std::tan(0.5 * theta)) / t2;
  return 1.0 / 12.0 + t2 * (1.0 / 720.0 + t2 * (1.0 / 30240.0 + t2 * (1.0 / 1209600.0 + t2 / 47900160.0)));
}

}  // namespace

Pose Pose::from_matrix(const Mat4& m, double tolerance) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::ParseError, "pose matrix has non-finite entries");
  }
  const Eigen::RowVector4d last = m.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tolerance) {
    throw Error(ErrorCode::ParseError, "pose matrix last row is not (0 0 0 1)");
  }
  Pose p(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  if (p.orthonormality_error() > tolerance) {
    throw Error(ErrorCode::ParseError, "pose rotation is not orthonormal");
  }
  return p;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_));
}

Pose Pose::operator*(const Pose& rhs) const {
  return Pose(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
}

Pose Pose::renormalized() const {
  Eigen::JacobiSVD<Mat3> svd(rotation_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Pose(r, translation_);
}

double Pose::orthonormality_error() const {
  const double ortho = (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation_.determinant() - 1.0));
}

Vec6 Twist::vector() const {
  Vec6 v;
  v << translation, rotation;
  return v;
}

Twist Twist::from_vector(const Vec6& v) {
  return Twist{v.tail<3>(), v.head<3>()};
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

Mat3 so3_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(w);
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0);
    b = 0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0);
  } else {
    const double h = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * h * h / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Pose se3_exp(const Twist& xi) {
  const Vec3& w = xi.rotation;
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(w);
  const Mat3 kk = k * k;
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0);
    b = 0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0);
  } else {
    const double h = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * h * h / theta2;
  }
  const double c = third_order_coeff(theta);
  const Mat3 r = Mat3::Identity() + a * k + b * kk;
  const Mat3 v = Mat3::Identity() + b * k + c * kk;
  return Pose(r, v * xi.translation);
}

Twist se3_log(const Pose& pose) {
  const Mat3& r = pose.rotation();
  const Vec3 axis_sin(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * axis_sin.norm();
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (std::numbers::pi - theta < kSingularMargin) {
    throw Error(ErrorCode::NearSingularRotation, "rotation angle is pi");
  }

  Vec3 w;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 0.5 * (1.0 + t2 / 6.0 * (1.0 + 7.0 * t2 / 60.0)) * axis_sin;
  } else if (theta < 0.75 * std::numbers::pi) {
    w = (theta / (2.0 * sin_theta)) * axis_sin;
  } else {
    // Near pi the antisymmetric part vanishes; take the axis from the
    // symmetric part, R + R^T - 2 cos(theta) I = 2 (1 - cos(theta)) n n^T.
    const Mat3 s = 0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity();
    Eigen::Index i = 0;
    s.diagonal().maxCoeff(&i);
    Vec3 n = s.col(i) / std::sqrt(s(i, i) * (1.0 - cos_theta));
    n.normalize();
    if (n.dot(axis_sin) < 0) n = -n;
    w = theta * n;
  }
  const Mat3 k = skew(w);
  const Mat3 v_inv = Mat3::Identity() - 0.5 * k + inverse_v_coeff(theta) * k * k;
  return Twist{w, v_inv * pose.translation()};
}

void CameraModel::validate() const {
  if (!valid()) {
    std::ostringstream os;
    os << "invalid camera model fx=" << fx << " fy=" << fy << " cx=" << cx
       << " cy=" << cy << " size=" << width << "x" << height;
    throw Error(ErrorCode::ParseError, os.str());
  }
}

bool CameraModel::valid() const noexcept {
  return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width &&
         cy >= 0 && cy < height;
}

CameraModel CameraModel::downscaled(int levels) const {
  CameraModel c = *this;
  for (int i = 0; i < levels; ++i) {
    c.fx *= 0.5;
    c.fy *= 0.5;
    c.cx = (c.cx + 0.5) * 0.5 - 0.5;
    c.cy = (c.cy + 0.5) * 0.5 - 0.5;
    c.width /= 2;
    c.height /= 2;
  }
  return c;
}

bool CameraModel::contains(const Pixel& px, double margin) const {
  return px.u >= margin && px.v >= margin && px.u <= width - 1 - margin &&
         px.v <= height - 1 - margin;
}

std::optional<Pixel> try_project(const CameraModel& cam, const Vec3& p) {
  if (!(p.z() > kMinDepth)) return std::nullopt;
  const double inv_z = 1.0 / p.z();
  return Pixel{cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy};
}

Pixel project(const CameraModel& cam, const Vec3& p_cam) {
  auto px = try_project(cam, p_cam);
  if (!px) throw Error(ErrorCode::NonPositiveDepth, "cannot project point with z <= 0");
  return *px;
}

Vec3 unproject(const CameraModel& cam, const Pixel& px, double depth) {
  if (!(depth > 0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  return {(px.u - cam.cx) / cam.fx * depth, (px.v - cam.cy) / cam.fy * depth, depth};
}

std::optional<Pixel> try_warp_pixel(const CameraModel& cam_src, const CameraModel& cam_dst,
                                    const Pose& dst_from_src, const Pixel& px, double depth) {
  if (!(depth > 0)) return std::nullopt;
  return try_project(cam_dst, dst_from_src * unproject(cam_src, px, depth));
}

Pixel warp_pixel(const CameraModel& cam_src, const CameraModel& cam_dst,
                 const Pose& dst_from_src, const Pixel& px, double depth) {
  const Vec3 p_dst = dst_from_src * unproject(cam_src, px, depth);
  auto out = try_project(cam_dst, p_dst);
  if (!out) throw Error(ErrorCode::BehindCamera, "warped point is behind the destination camera");
  return *out;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraModel& cam, const Vec3& p) {
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z * inv_z,
       0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z * inv_z;
  return j;
}

}  // namespace pdlvo
