#include "pdlvo/simworld.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pdlvo/error.h"

namespace pdlvo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDeg = std::numbers::pi / 180.0;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Distinct, reproducible stream per (seed, purpose, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Texture random_texture(std::mt19937_64& rng, double contrast) {
  Texture tex;
  tex.base = uniform(rng, 110.0, 146.0);
  const int n = 3;
  std::array<double, n> weights{};
  double total = 0.0;
  for (auto& w : weights) total += (w = uniform(rng, 0.5, 1.0));
  for (int k = 0; k < n; ++k) {
    const double wavelength = uniform(rng, 0.4, 1.6);
    const double dir = uniform(rng, 0.0, kTwoPi);
    Texture::Wave w;
    w.frequency = Vec2(std::cos(dir), std::sin(dir)) / wavelength;
    w.amplitude = contrast * weights[static_cast<size_t>(k)] / total;
    w.phase = uniform(rng, 0.0, kTwoPi);
    tex.waves.push_back(w);
  }
  return tex;
}

bool inside_xz(const Vec3& p, const Vec2& lo, const Vec2& hi) {
  return p.x() >= lo.x() && p.x() <= hi.x() && p.z() >= lo.y() && p.z() <= hi.y();
}

}  // namespace

double Texture::value(double s, double t) const {
  double v = base;
  for (const auto& w : waves) {
    v += w.amplitude * std::sin(kTwoPi * (w.frequency.x() * s + w.frequency.y() * t) + w.phase);
  }
  return v;
}

std::optional<double> Patch::intersect(const Vec3& origin, const Vec3& dir) const {
  const Vec3 n = axes.col(2);
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = n.dot(center - origin) / denom;
  if (!(t > 0)) return std::nullopt;
  const Vec3 local = origin + t * dir - center;
  if (std::abs(axes.col(0).dot(local)) > half_width || std::abs(axes.col(1).dot(local)) > half_height) {
    return std::nullopt;
  }
  return t;
}

double Patch::texture_at(const Vec3& world_point) const {
  const Vec3 local = world_point - center;
  return texture.value(axes.col(0).dot(local), axes.col(1).dot(local));
}

void SimConfig::validate() const {
  if (landmarks < 0 || lidar_channels <= 0 || lidar_columns <= 0 || !(max_range > 0) ||
      range_noise < 0 || image_noise < 0 || !(frame_interval > 0)) {
    throw Error(ErrorCode::ParseError, "invalid simulation config");
  }
  camera.validate();
}

Scene make_scene(std::uint64_t seed, const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(seed, 1));
  Scene scene;
  scene.seed = seed;
  const Vec2 lo = cfg.clear_min - Vec2::Constant(cfg.layout_depth);
  const Vec2 hi = cfg.clear_max + Vec2::Constant(cfg.layout_depth);
  const Vec2 keep_lo = cfg.clear_min - Vec2::Constant(0.5);
  const Vec2 keep_hi = cfg.clear_max + Vec2::Constant(0.5);
  scene.bounds_min = Vec3(lo.x(), -3.0, lo.y());
  scene.bounds_max = Vec3(hi.x(), 3.0, hi.y());

  while (static_cast<int>(scene.patches.size()) < cfg.landmarks) {
    Patch p;
    p.center = Vec3(uniform(rng, lo.x(), hi.x()), uniform(rng, -1.5, 1.0), uniform(rng, lo.y(), hi.y()));
    p.half_width = uniform(rng, 1.0, 2.5);
    p.half_height = uniform(rng, 0.75, 2.0);
    if (inside_xz(p.center, keep_lo - Vec2::Constant(p.half_width),
                  keep_hi + Vec2::Constant(p.half_width))) {
      continue;
    }
    // Face the clear region, with some yaw and tilt jitter.
    const Vec3 nearest(std::clamp(p.center.x(), cfg.clear_min.x(), cfg.clear_max.x()), 0.0,
                       std::clamp(p.center.z(), cfg.clear_min.y(), cfg.clear_max.y()));
    Vec3 to_path = nearest - p.center;
    to_path.y() = 0.0;
    double heading = std::atan2(to_path.x(), to_path.z()) + uniform(rng, -35.0, 35.0) * kDeg;
    const double tilt = uniform(rng, -15.0, 15.0) * kDeg;
    const Mat3 r = so3_exp(Vec3(0, heading, 0)) * so3_exp(Vec3(tilt, 0, 0));
    // Local frame: s = right, t = down, normal = toward the path (+z).
    p.axes = r;
    p.texture = random_texture(rng, cfg.texture_contrast);
    scene.patches.push_back(p);
  }
  return scene;
}

namespace {

// Nearest-surface point sampling at pixel centres.
Image render_view(const Scene& scene, const CameraModel& cam, const Pose& cam_from_world,
                  double background) {
  Image img(cam.width, cam.height, background);
  std::vector<double> zbuf(static_cast<size_t>(cam.width) * cam.height,
                           std::numeric_limits<double>::infinity());
  for (const Patch& patch : scene.patches) {
    // Patch in camera coordinates.
    const Vec3 c = cam_from_world * patch.center;
    const Mat3 axes = cam_from_world.rotation() * patch.axes;
    const Vec3 n = axes.col(2);
    const double nc = n.dot(c);
    if (std::abs(nc) < 1e-12) continue;  // plane through the camera centre

    // Pixel bounding box from the corners; fall back to the whole image
    // when the patch straddles the image plane.
    int x0 = 0, y0 = 0, x1 = cam.width - 1, y1 = cam.height - 1;
    bool all_front = true;
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const Vec3 corner = c + sx * patch.half_width * axes.col(0) + sy * patch.half_height * axes.col(1);
        if (corner.z() <= 1e-6) {
          all_front = false;
          continue;
        }
        const Pixel px = project(cam, corner);
        umin = std::min(umin, px.u), umax = std::max(umax, px.u);
        vmin = std::min(vmin, px.v), vmax = std::max(vmax, px.v);
      }
    }
    if (all_front) {
      // Clamp in floating point first: corners near the image plane project
      // far outside the int range.
      x0 = static_cast<int>(std::floor(std::clamp(umin, 0.0, double(x1 + 1))));
      x1 = static_cast<int>(std::ceil(std::clamp(umax, -1.0, double(x1))));
      y0 = static_cast<int>(std::floor(std::clamp(vmin, 0.0, double(y1 + 1))));
      y1 = static_cast<int>(std::ceil(std::clamp(vmax, -1.0, double(y1))));
    } else {
      bool any_front = false;
      for (int sx : {-1, 1})
        for (int sy : {-1, 1})
          any_front |= (c + sx * patch.half_width * axes.col(0) + sy * patch.half_height * axes.col(1)).z() > 0;
      if (!any_front) continue;
    }
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec3 d((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
        const double denom = n.dot(d);
        if (std::abs(denom) < 1e-12) continue;
        const double z = nc / denom;  // depth along the optical axis
        if (!(z > 0)) continue;
        const size_t idx = static_cast<size_t>(y) * cam.width + x;
        if (z >= zbuf[idx]) continue;
        const Vec3 local = z * d - c;
        const double s = axes.col(0).dot(local);
        const double t = axes.col(1).dot(local);
        if (std::abs(s) > patch.half_width || std::abs(t) > patch.half_height) continue;
        zbuf[idx] = z;
        img(x, y) = patch.texture.value(s, t);
      }
    }
  }
  return img;
}

}  // namespace

std::array<Image, kNumViews> render_frame(const Scene& scene, const RigCalibration& rig,
                                          const Pose& world_from_body, const SimConfig& cfg,
                                          std::uint64_t noise_seed) {
  std::array<Image, kNumViews> out;
  std::mt19937_64 rng(mix_seed(noise_seed, 2));
  std::normal_distribution<double> noise(0.0, 1.0);
  const int ss = std::max(cfg.supersample, 1);
  for (int view = 1; view <= kNumViews; ++view) {
    const CameraModel& cam = rig.camera(view);
    const Pose cam_from_world = rig.cam_from_body(view) * world_from_body.inverse();
    Image img;
    if (ss == 1) {
      img = render_view(scene, cam, cam_from_world, cfg.background);
    } else {
      // Box-filtered ss x ss subsamples per pixel.
      CameraModel fine = cam;
      fine.fx *= ss;
      fine.fy *= ss;
      fine.cx = (cam.cx + 0.5) * ss - 0.5;
      fine.cy = (cam.cy + 0.5) * ss - 0.5;
      fine.width = cam.width * ss;
      fine.height = cam.height * ss;
      const Image hi = render_view(scene, fine, cam_from_world, cfg.background);
      img = Image(cam.width, cam.height);
      const double norm = 1.0 / (ss * ss);
      for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
          double sum = 0.0;
          for (int dy = 0; dy < ss; ++dy)
            for (int dx = 0; dx < ss; ++dx) sum += hi(x * ss + dx, y * ss + dy);
          img(x, y) = sum * norm;
        }
      }
    }
    if (cfg.image_noise > 0) {
      for (double& v : img.data()) v += cfg.image_noise * noise(rng);
    }
    for (double& v : img.data()) v = std::clamp(v, 0.0, 255.0);
    out[static_cast<size_t>(view - 1)] = std::move(img);
  }
  return out;
}

LidarScan simulate_lidar(const Scene& scene, const Pose& world_from_body, const SimConfig& cfg,
                         std::uint64_t noise_seed) {
  LidarScan scan;
  std::mt19937_64 rng(mix_seed(noise_seed, 3));
  std::normal_distribution<double> noise(0.0, 1.0);
  const Pose world_from_lidar = world_from_body * cfg.body_from_lidar;
  const Vec3 origin = world_from_lidar.translation();
  const double vfov = cfg.lidar_vfov_deg * kDeg;
  const double hfov = cfg.lidar_hfov_deg * kDeg;
  for (int ch = 0; ch < cfg.lidar_channels; ++ch) {
    const double elev = cfg.lidar_channels == 1
                            ? 0.0
                            : -0.5 * vfov + vfov * ch / (cfg.lidar_channels - 1);
    for (int col = 0; col < cfg.lidar_columns; ++col) {
      const double az = -0.5 * hfov + hfov * col / cfg.lidar_columns;
      // LiDAR frame shares the camera convention: y down, z forward.
      const Vec3 dir_l(std::sin(az) * std::cos(elev), -std::sin(elev), std::cos(az) * std::cos(elev));
      const Vec3 dir_w = world_from_lidar.rotation() * dir_l;
      double best = std::numeric_limits<double>::infinity();
      for (const Patch& p : scene.patches) {
        if (auto t = p.intersect(origin, dir_w); t && *t < best) best = *t;
      }
      if (!std::isfinite(best) || best > cfg.max_range) continue;
      const double range = best + (cfg.range_noise > 0 ? cfg.range_noise * noise(rng) : 0.0);
      if (!(range > 0)) continue;
      scan.points.push_back(range * dir_l);
    }
  }
  return scan;
}

std::optional<double> ray_depth(const Scene& scene, const RigCalibration& rig,
                                const Pose& world_from_body, int view, const Pixel& px) {
  const CameraModel& cam = rig.camera(view);
  const Pose world_from_cam = chain_world(rig, world_from_body, view);
  const Vec3 d_cam((px.u - cam.cx) / cam.fx, (px.v - cam.cy) / cam.fy, 1.0);
  const Vec3 dir = world_from_cam.rotation() * d_cam;
  double best = std::numeric_limits<double>::infinity();
  for (const Patch& p : scene.patches) {
    if (auto t = p.intersect(world_from_cam.translation(), dir); t && *t < best) best = *t;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;  // d_cam has unit z, so the ray parameter is the depth
}

std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& name) {
  if (name == "line") return TrajectoryKind::Line;
  if (name == "arc") return TrajectoryKind::Arc;
  if (name == "indoor-loop") return TrajectoryKind::IndoorLoop;
  if (name == "line-arc") return TrajectoryKind::LineArc;
  return std::nullopt;
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Line: return "line";
    case TrajectoryKind::Arc: return "arc";
    case TrajectoryKind::IndoorLoop: return "indoor-loop";
    case TrajectoryKind::LineArc: return "line-arc";
  }
  return "unknown";
}

std::vector<Pose> make_trajectory(TrajectoryKind kind, int n, const TrajectoryConfig& cfg) {
  if (n < 2) throw Error(ErrorCode::BadFrameCount, "trajectory needs at least 2 frames, got " + std::to_string(n));
  const int steps = n - 1;
  // Heading increment (radians) applied over each step.
  std::vector<double> turn(static_cast<size_t>(steps), 0.0);
  switch (kind) {
    case TrajectoryKind::Line:
      break;
    case TrajectoryKind::Arc: {
      double total = 0.0;
      for (int i = 0; i < steps; ++i) {
        turn[static_cast<size_t>(i)] = cfg.ramp_steps > 0 ? std::min(1.0, (i + 1.0) / cfg.ramp_steps) : 1.0;
        total += turn[static_cast<size_t>(i)];
      }
      for (double& t : turn) t *= cfg.turn_deg * kDeg / total;
      break;
    }
    case TrajectoryKind::LineArc: {
      const int straight = steps / 2;
      const int curved = steps - straight;
      for (int i = straight; i < steps; ++i) turn[static_cast<size_t>(i)] = cfg.turn_deg * kDeg / curved;
      break;
    }
    case TrajectoryKind::IndoorLoop: {
      // Rounded rectangle: long/short/long/short sides joined by four
      // 90-degree corners.
      const int corner = std::max(1, steps / 10);
      const int straight_total = std::max(0, steps - 4 * corner);
      const int long_side = straight_total / 3;
      const int short_side = (straight_total - 2 * long_side) / 2;
      std::vector<int> sides{long_side, short_side, long_side,
                             straight_total - 2 * long_side - short_side};
      size_t i = 0;
      for (int side = 0; side < 4 && i < turn.size(); ++side) {
        i += static_cast<size_t>(sides[static_cast<size_t>(side)]);
        for (int c = 0; c < corner && i < turn.size(); ++c, ++i) turn[i] = 0.5 * std::numbers::pi / corner;
      }
      break;
    }
  }
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(n));
  double yaw = 0.0;
  Vec3 position = Vec3::Zero();
  poses.emplace_back(Mat3::Identity(), position);
  for (int i = 0; i < steps; ++i) {
    const double dyaw = turn[static_cast<size_t>(i)];
    // Chord of the arc: heading at the step midpoint.
    const Vec3 heading = so3_exp(Vec3(0, yaw + 0.5 * dyaw, 0)) * Vec3::UnitX();
    position += cfg.step * heading;
    yaw += dyaw;
    poses.emplace_back(so3_exp(Vec3(0, yaw, 0)), position);
  }
  return poses;
}

void saturate(Image& img, double value) {
  for (double& v : img.data()) v = value;
}

void add_salt_and_pepper(Image& img, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 4));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : img.data()) {
    const double x = u(rng);
    if (x < fraction) v = x < 0.5 * fraction ? 0.0 : 255.0;
  }
}

}  // namespace pdlvo
