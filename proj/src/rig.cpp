#include "pdlvo/rig.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "pdlvo/error.h"
#include "pdlvo/kv_file.h"

namespace pdlvo {

namespace {

constexpr double kBodyFrameTolerance = 1e-6;

Mat4 matrix_from_values(const std::vector<double>& v, const std::string& what) {
  if (v.size() != 16) {
    throw Error(ErrorCode::ParseError, what + ": expected 16 values, got " + std::to_string(v.size()));
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<size_t>(r * 4 + c)];
  return m;
}

void write_matrix(std::ostream& out, const Mat4& m) {
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out << (r || c ? " " : "") << m(r, c);
}

}  // namespace

void check_view(int view) {
  if (view < 1 || view > kNumViews) {
    throw Error(ErrorCode::IndexOutOfRange, "view index " + std::to_string(view) + " not in 1..5");
  }
}

RigCalibration::RigCalibration(std::array<CameraModel, kNumViews> cameras,
                               std::array<Pose, kNumViews> cam_from_body, Pose body_from_lidar)
    : cameras_(cameras), cam_from_body_(cam_from_body), body_from_lidar_(body_from_lidar) {
  for (const auto& c : cameras_) c.validate();
  const double dev = (cam_from_body_[0].matrix() - Mat4::Identity()).cwiseAbs().maxCoeff();
  if (dev > kBodyFrameTolerance) {
    throw Error(ErrorCode::NonIdentityBodyFrame,
                "camera 1 extrinsic deviates from identity by " + std::to_string(dev));
  }
  for (size_t i = 0; i < cam_from_body_.size(); ++i) body_from_cam_[i] = cam_from_body_[i].inverse();
}

const CameraModel& RigCalibration::camera(int view) const {
  check_view(view);
  return cameras_[static_cast<size_t>(view - 1)];
}

const Pose& RigCalibration::cam_from_body(int view) const {
  check_view(view);
  return cam_from_body_[static_cast<size_t>(view - 1)];
}

const Pose& RigCalibration::body_from_cam(int view) const {
  check_view(view);
  return body_from_cam_[static_cast<size_t>(view - 1)];
}

RigCalibration parse_rig(const std::string& text, const std::string& origin) {
  const KvFile kv = parse_kv(text, origin);
  std::array<CameraModel, kNumViews> cams{};
  std::array<Pose, kNumViews> extr{};
  std::array<bool, kNumViews> seen{};
  int count = 0;
  Pose body_from_lidar;
  for (const auto& sec : kv.sections) {
    if (sec.name == "lidar") {
      body_from_lidar = Pose::from_matrix(
          matrix_from_values(sec.get_doubles("body_from_lidar"), "[lidar] body_from_lidar"));
      continue;
    }
    if (sec.name.rfind("camera", 0) != 0) {
      throw Error(ErrorCode::ParseError, origin + ": unknown section [" + sec.name + "]");
    }
    ++count;
    int index = 0;
    try {
      index = std::stoi(sec.name.substr(6));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, origin + ": bad camera section [" + sec.name + "]");
    }
    if (index < 1 || index > kNumViews) {
      throw Error(ErrorCode::WrongCameraCount, origin + ": camera index " + std::to_string(index));
    }
    if (seen[static_cast<size_t>(index - 1)]) {
      throw Error(ErrorCode::ParseError, origin + ": duplicate camera " + std::to_string(index));
    }
    seen[static_cast<size_t>(index - 1)] = true;
    CameraModel c;
    c.fx = sec.get_double("fx");
    c.fy = sec.get_double("fy");
    c.cx = sec.get_double("cx");
    c.cy = sec.get_double("cy");
    c.width = sec.get_int("width");
    c.height = sec.get_int("height");
    c.validate();
    cams[static_cast<size_t>(index - 1)] = c;
    extr[static_cast<size_t>(index - 1)] = Pose::from_matrix(
        matrix_from_values(sec.get_doubles("cam_from_body"), "[" + sec.name + "] cam_from_body"));
  }
  if (count != kNumViews) {
    throw Error(ErrorCode::WrongCameraCount,
                origin + ": expected 5 cameras, found " + std::to_string(count));
  }
  return RigCalibration(cams, extr, body_from_lidar);
}

RigCalibration load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rig(ss.str(), path.string());
}

void save_rig(const RigCalibration& rig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << std::setprecision(17);
  out << "# panoramic rig calibration; matrices are row-major 4x4\n";
  out << "[lidar]\nbody_from_lidar = ";
  write_matrix(out, rig.body_from_lidar().matrix());
  out << "\n";
  for (int v = 1; v <= kNumViews; ++v) {
    const auto& c = rig.camera(v);
    out << "\n[camera " << v << "]\n"
        << "fx = " << c.fx << "\nfy = " << c.fy << "\ncx = " << c.cx << "\ncy = " << c.cy
        << "\nwidth = " << c.width << "\nheight = " << c.height << "\ncam_from_body = ";
    write_matrix(out, rig.cam_from_body(v).matrix());
    out << "\n";
  }
}

Pose chain_tracking(const RigCalibration& rig, const Pose& cur_from_kf, int host_view,
                    int target_view) {
  return rig.cam_from_body(target_view) * cur_from_kf * rig.body_from_cam(host_view);
}

Pose chain_world(const RigCalibration& rig, const Pose& world_from_body, int view) {
  return world_from_body * rig.body_from_cam(view);
}

RigCalibration make_panoramic_rig(const CameraModel& camera, double ring_radius) {
  std::array<CameraModel, kNumViews> cams;
  std::array<Pose, kNumViews> extr;
  const Vec3 axis1(0, 0, 1);
  for (int i = 0; i < kNumViews; ++i) {
    const double yaw = 2.0 * std::numbers::pi * i / kNumViews;
    const Mat3 r = so3_exp(Vec3(0, yaw, 0));
    const Vec3 centre = ring_radius * (r * axis1 - axis1);
    cams[static_cast<size_t>(i)] = camera;
    extr[static_cast<size_t>(i)] = i == 0 ? Pose::identity() : Pose(r, centre).inverse();
  }
  return RigCalibration(cams, extr);
}

}  // namespace pdlvo
