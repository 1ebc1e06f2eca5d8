#include "pdlvo/photometric.h"

#include <cmath>

#include <Eigen/LU>

namespace pdlvo {

double huber_cost(double r, double gamma) {
  const double a = std::abs(r);
  return a <= gamma ? r * r : gamma * (2.0 * a - gamma);
}

double huber_weight(double r, double gamma) {
  const double a = std::abs(r);
  return a <= gamma ? 1.0 : gamma / a;
}

std::optional<Vec2> reference_gradient(const Image& img, const Pixel& px) {
  const auto xm = try_sample_bilinear(img, {px.u - 1.0, px.v});
  const auto xp = try_sample_bilinear(img, {px.u + 1.0, px.v});
  const auto ym = try_sample_bilinear(img, {px.u, px.v - 1.0});
  const auto yp = try_sample_bilinear(img, {px.u, px.v + 1.0});
  if (xm && xp && ym && yp) {
    return Vec2(0.5 * (xp->intensity - xm->intensity), 0.5 * (yp->intensity - ym->intensity));
  }
  if (auto s = try_sample_bilinear(img, px)) return s->gradient;
  return std::nullopt;
}

namespace {

// Row gradient w.r.t. target pixels equivalent to a host reference
// gradient, via the 2x2 warp Jacobian d(target pixel)/d(normalized host)
// at fixed depth.
std::optional<Eigen::Matrix<double, 1, 2>> carried_gradient(const Vec2& host_gradient,
                                                            const Vec3& point_host,
                                                            const Mat3& target_from_host_rotation,
                                                            const Eigen::Matrix<double, 2, 3>& jp) {
  Eigen::Matrix<double, 3, 2> dx = Eigen::Matrix<double, 3, 2>::Zero();
  dx(0, 0) = point_host.z();
  dx(1, 1) = point_host.z();
  const Eigen::Matrix2d m = jp * target_from_host_rotation * dx;
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12)) return std::nullopt;
  return Eigen::Matrix<double, 1, 2>(host_gradient.transpose() * m.inverse());
}

}  // namespace

std::vector<HostPoint> host_points(const Keyframe& kf, const RigCalibration& rig,
                                   const std::vector<int>& views, int level) {
  std::vector<HostPoint> out;
  const double scale = std::ldexp(1.0, -level);
  for (int view : views) {
    const CameraModel cam = rig.camera(view).downscaled(level);
    const Image& img = kf.frame.image(view, level);
    const ImagePyramid& ref_pyr = kf.reference[static_cast<size_t>(view - 1)];
    const Image& ref = ref_pyr.levels() > level ? ref_pyr.level(level) : img;
    const auto& kps = kf.keypoints[static_cast<size_t>(view - 1)];
    for (size_t k = 0; k < kps.size(); ++k) {
      const Keypoint& kp = kps[k];
      const double ul = (kp.pixel.u + 0.5) * scale - 0.5;
      const double vl = (kp.pixel.v + 0.5) * scale - 0.5;
      for (int i = 0; i < kPatternSize; ++i) {
        const Pixel px{ul + kPattern[static_cast<size_t>(i)][0], vl + kPattern[static_cast<size_t>(i)][1]};
        double intensity;
        if (level == 0) {
          if (!in_sampling_region(img, px)) continue;
          intensity = kp.pattern[static_cast<size_t>(i)];
        } else {
          auto s = try_sample_bilinear(img, px);
          if (!s) continue;
          intensity = s->intensity;
        }
        const auto g = reference_gradient(ref, px);
        if (!g) continue;
        out.push_back({view, static_cast<int>(k), px, unproject(cam, px, kp.depth), intensity,
                       Vec2(g->x() * cam.fx, g->y() * cam.fy)});
      }
    }
  }
  return out;
}

std::optional<TrackingTerm> tracking_term(const Vec3& point_host, double host_intensity,
                                          const Pose& body_from_host, const Pose& cur_from_kf,
                                          const Pose& target_from_body,
                                          const CameraModel& target_cam, const Image& target_img,
                                          bool with_jacobian, const Vec2* host_gradient) {
  const Vec3 q = cur_from_kf * (body_from_host * point_host);
  const Vec3 p = target_from_body * q;
  auto px = try_project(target_cam, p);
  if (!px) return std::nullopt;
  auto s = try_sample_bilinear(target_img, *px);
  if (!s) return std::nullopt;
  TrackingTerm t;
  t.residual = host_intensity - s->intensity;
  t.target = *px;
  t.gradient_norm = s->gradient.norm();
  if (with_jacobian) {
    // dp/dxi for q -> exp(xi) q: R_target * [I | -[q]x]
    Eigen::Matrix<double, 3, 6> dq;
    dq.leftCols<3>().setIdentity();
    dq.rightCols<3>() = -skew(q);
    const Eigen::Matrix<double, 2, 3> jp = projection_jacobian(target_cam, p);
    Eigen::Matrix<double, 1, 2> g = s->gradient.transpose();
    if (host_gradient) {
      const Mat3 r = target_from_body.rotation() * cur_from_kf.rotation() * body_from_host.rotation();
      auto carried = carried_gradient(*host_gradient, point_host, r, jp);
      if (!carried) return std::nullopt;
      g = *carried;
    }
    t.jacobian = -g * jp * target_from_body.rotation() * dq;
  }
  return t;
}

std::optional<BundleTerm> bundle_term(const Vec3& point_host, double host_intensity,
                                      const Pose& cam_from_body, const Pose& world_from_host,
                                      const Pose& world_from_target, const CameraModel& cam,
                                      const Image& target_img, bool with_jacobian,
                                      const Vec2* host_gradient) {
  const Vec3 x = world_from_host * (cam_from_body.inverse() * point_host);
  const Pose cam_from_world = cam_from_body * world_from_target.inverse();
  const Vec3 p = cam_from_world * x;
  auto px = try_project(cam, p);
  if (!px) return std::nullopt;
  auto s = try_sample_bilinear(target_img, *px);
  if (!s) return std::nullopt;
  BundleTerm t;
  t.residual = host_intensity - s->intensity;
  t.target = *px;
  if (with_jacobian) {
    Eigen::Matrix<double, 3, 6> dx;
    dx.leftCols<3>().setIdentity();
    dx.rightCols<3>() = -skew(x);
    const Eigen::Matrix<double, 2, 3> jp = projection_jacobian(cam, p);
    Eigen::Matrix<double, 1, 2> g = s->gradient.transpose();
    if (host_gradient) {
      const Mat3 r = cam_from_world.rotation() * world_from_host.rotation() *
                     cam_from_body.rotation().transpose();
      auto carried = carried_gradient(*host_gradient, point_host, r, jp);
      if (!carried) return std::nullopt;
      g = *carried;
    }
    const Eigen::Matrix<double, 1, 3> dr_dp = -g * jp;
    t.jacobian_host = dr_dp * cam_from_world.rotation() * dx;
    t.jacobian_target = -t.jacobian_host;
  }
  return t;
}

}  // namespace pdlvo
