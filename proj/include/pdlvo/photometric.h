#pragma once

#include <optional>
#include <vector>

#include "pdlvo/frame.h"
#include "pdlvo/geometry.h"
#include "pdlvo/image.h"

namespace pdlvo {

using Row6 = Eigen::Matrix<double, 1, 6>;

// Huber norm: r^2 inside [-gamma, gamma], gamma * (2|r| - gamma) outside.
double huber_cost(double r, double gamma);
// IRLS weight matching huber_cost: 1 inside, gamma / |r| outside.
double huber_weight(double r, double gamma);

// A keyframe pattern pixel lifted to 3D in its host camera at one pyramid
// level.
struct HostPoint {
  int view = 1;
  int keypoint = 0;
  Pixel pixel;        // at this level
  Vec3 point;         // host camera coordinates
  double intensity = 0.0;
  // Reference image gradient w.r.t. normalized host coordinates (x/z, y/z),
  // i.e. the pixel gradient scaled by the focal lengths.
  Vec2 gradient = Vec2::Zero();
};

// Central differences of the bilinear surface with a one-pixel step; falls
// back to the exact bilinear derivative next to the border.
std::optional<Vec2> reference_gradient(const Image& img, const Pixel& px);

// Host points of all keypoints in `views` at `level`. Pattern pixels that
// leave the sampling region at that level are dropped.
std::vector<HostPoint> host_points(const Keyframe& kf, const RigCalibration& rig,
                                   const std::vector<int>& views, int level);

struct TrackingTerm {
  double residual = 0.0;
  Row6 jacobian = Row6::Zero();  // w.r.t. left increment of cur_from_kf
  Pixel target;
  double gradient_norm = 0.0;
};

// r = I_host - I_target(u'), with u' = pi(target_from_body * cur_from_kf *
// body_from_host * point). Returns nothing if the warp is behind the target
// camera or outside the sampling region of `target_img`.
//
// By default the Jacobian is exact (target image gradient). With
// `host_gradient` the target gradient is replaced by the host reference
// gradient carried through the local warp (inverse-compositional style);
// both agree at the true pose under brightness constancy, but the host
// version is immune to corrupted target pixels.
std::optional<TrackingTerm> tracking_term(const Vec3& point_host, double host_intensity,
                                          const Pose& body_from_host, const Pose& cur_from_kf,
                                          const Pose& target_from_body,
                                          const CameraModel& target_cam, const Image& target_img,
                                          bool with_jacobian = true,
                                          const Vec2* host_gradient = nullptr);

struct BundleTerm {
  double residual = 0.0;
  Row6 jacobian_host = Row6::Zero();    // left increment of world_from_host_body
  Row6 jacobian_target = Row6::Zero();  // left increment of world_from_target_body
  Pixel target;
};

// Same-view residual between two keyframes:
// u' = pi(cam_from_body * target_from_world * world_from_host * body_from_cam * point).
std::optional<BundleTerm> bundle_term(const Vec3& point_host, double host_intensity,
                                      const Pose& cam_from_body, const Pose& world_from_host,
                                      const Pose& world_from_target, const CameraModel& cam,
                                      const Image& target_img, bool with_jacobian = true,
                                      const Vec2* host_gradient = nullptr);

}  // namespace pdlvo
