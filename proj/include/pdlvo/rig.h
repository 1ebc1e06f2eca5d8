#pragma once

#include <array>
#include <filesystem>

#include "pdlvo/geometry.h"

namespace pdlvo {

inline constexpr int kNumViews = 5;

// Calibration of the five-camera surround rig.
//
// Views are 1-based (1..5). The body frame coincides with camera 1, so
// cam_from_body(1) is the identity. The LiDAR extrinsic travels with the
// rig because both come from the same calibration file.
class RigCalibration {
 public:
  RigCalibration(std::array<CameraModel, kNumViews> cameras,
                 std::array<Pose, kNumViews> cam_from_body,
                 Pose body_from_lidar = Pose::identity());

  const CameraModel& camera(int view) const;
  const Pose& cam_from_body(int view) const;
  const Pose& body_from_cam(int view) const;
  const Pose& body_from_lidar() const { return body_from_lidar_; }

 private:
  std::array<CameraModel, kNumViews> cameras_;
  std::array<Pose, kNumViews> cam_from_body_;
  std::array<Pose, kNumViews> body_from_cam_;
  Pose body_from_lidar_;
};

// Throws IndexOutOfRange unless 1 <= view <= 5.
void check_view(int view);

RigCalibration load_rig(const std::filesystem::path& path);
RigCalibration parse_rig(const std::string& text, const std::string& origin = "<string>");
void save_rig(const RigCalibration& rig, const std::filesystem::path& path);

// Relative pose between host view j of the keyframe and target view l of
// the current frame, given the body-level motion:
//   curcam_l_from_kfcam_j = cam_from_body(l) * cur_from_kf * body_from_cam(j)
Pose chain_tracking(const RigCalibration& rig, const Pose& cur_from_kf, int host_view,
                    int target_view);

// world_from_cam_l = world_from_body * body_from_cam(l).
Pose chain_world(const RigCalibration& rig, const Pose& world_from_body, int view);

// Five identical cameras on a ring, yawed about the body y axis in steps of
// 72 degrees. Camera 1 sits at the body origin; the others are offset by
// `ring_radius` along their optical axes relative to camera 1.
RigCalibration make_panoramic_rig(const CameraModel& camera, double ring_radius = 0.05);

}  // namespace pdlvo
