#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdlvo/association.h"
#include "pdlvo/geometry.h"
#include "pdlvo/image.h"
#include "pdlvo/rig.h"

namespace pdlvo {

// Band-limited procedural texture: base + sum_k amp_k sin(2 pi (f_k . st) + phase_k),
// with st the in-plane patch coordinates in meters.
struct Texture {
  struct Wave {
    Vec2 frequency = Vec2::Zero();  // cycles per meter
    double amplitude = 0.0;
    double phase = 0.0;
  };
  double base = 128.0;
  std::vector<Wave> waves;

  double value(double s, double t) const;
};

// Rectangular textured plane. `axes` columns are (s direction, t direction,
// normal) in world coordinates.
struct Patch {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  double half_width = 1.0;   // along s, meters
  double half_height = 1.0;  // along t, meters
  Texture texture;

  // Ray parameter of the hit for origin + t * dir, if the ray hits the
  // rectangle in front of the origin.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const;
  double texture_at(const Vec3& world_point) const;
};

struct Scene {
  std::uint64_t seed = 0;
  std::vector<Patch> patches;
  Vec3 bounds_min = Vec3::Zero();
  Vec3 bounds_max = Vec3::Zero();
};

struct SimConfig {
  int landmarks = 50;
  double texture_contrast = 50.0;  // peak texture amplitude, intensity units
  double background = 64.0;

  // Patches are scattered outside the clear region (x/z extent) up to
  // `layout_depth` meters beyond it.
  Vec2 clear_min{-2.0, -2.0};  // (x, z)
  Vec2 clear_max{2.0, 2.0};
  double layout_depth = 10.0;

  CameraModel camera{160.0, 160.0, 160.0, 120.0, 320, 240};
  double rig_radius = 0.05;
  // Subsamples per pixel side; 1 samples the ray through the pixel centre,
  // larger values box-filter the footprint (anti-aliased patch borders).
  int supersample = 2;

  // LiDAR: channels x columns rays over the given fields of view.
  int lidar_channels = 64;
  int lidar_columns = 1024;
  double lidar_vfov_deg = 40.0;
  double lidar_hfov_deg = 360.0;
  double max_range = 100.0;
  double range_noise = 0.01;
  Pose body_from_lidar;

  double image_noise = 1.0;
  double frame_interval = 0.2;  // seconds (5 fps)

  int rays_per_scan() const { return lidar_channels * lidar_columns; }
  void validate() const;
};

Scene make_scene(std::uint64_t seed, const SimConfig& cfg);

// Five images for the given body pose: nearest patch along each pixel ray,
// background elsewhere, optional Gaussian noise seeded by `noise_seed`.
std::array<Image, kNumViews> render_frame(const Scene& scene, const RigCalibration& rig,
                                          const Pose& world_from_body, const SimConfig& cfg,
                                          std::uint64_t noise_seed = 0);

// Nearest-hit points in the LiDAR frame; misses and returns beyond
// cfg.max_range are dropped. Range noise is applied along the ray.
LidarScan simulate_lidar(const Scene& scene, const Pose& world_from_body, const SimConfig& cfg,
                         std::uint64_t noise_seed = 0);

// Exact depth (camera z) of the first surface seen through a pixel.
std::optional<double> ray_depth(const Scene& scene, const RigCalibration& rig,
                                const Pose& world_from_body, int view, const Pixel& px);

enum class TrajectoryKind { Line, Arc, IndoorLoop, LineArc };

std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& name);
std::string to_string(TrajectoryKind kind);

struct TrajectoryConfig {
  double step = 0.1;          // meters per frame
  double turn_deg = 90.0;     // total heading change of an arc
  // Arcs only: the yaw rate ramps up linearly over this many steps instead
  // of starting at full speed. The total heading change is unchanged.
  int ramp_steps = 0;
};

// world_from_body poses starting at the identity. Every step has length
// cfg.step; headings rotate about the body y axis. Throws BadFrameCount for
// n < 2.
std::vector<Pose> make_trajectory(TrajectoryKind kind, int n, const TrajectoryConfig& cfg);

// Image degradations used by the ablation scenarios.
void saturate(Image& img, double value = 255.0);
void add_salt_and_pepper(Image& img, double fraction, std::uint64_t seed);

}  // namespace pdlvo
