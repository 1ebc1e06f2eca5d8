#include "pdlvo/association.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pdlvo/error.h"

namespace pdlvo {

LidarScan load_scan(const std::filesystem::path& path, double timestamp) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open scan " + path.string());
  LidarScan scan;
  scan.timestamp = timestamp;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec3 p;
    std::string extra;
    if (!(ls >> p.x() >> p.y() >> p.z()) || (ls >> extra) || !p.allFinite()) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": expected 'x y z'");
    }
    scan.points.push_back(p);
  }
  return scan;
}

void save_scan(const LidarScan& scan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write scan " + path.string());
  out << std::fixed << std::setprecision(6);
  for (const auto& p : scan.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
}

SparseDepthMap::SparseDepthMap(int view, int image_width, int image_height, int cell_size)
    : view_(view), width_(image_width), height_(image_height), cell_size_(cell_size) {
  if (cell_size <= 0) throw Error(ErrorCode::IndexOutOfRange, "cell size must be positive");
  grid_w_ = (image_width + cell_size - 1) / cell_size;
  grid_h_ = (image_height + cell_size - 1) / cell_size;
  cells_.resize(static_cast<size_t>(grid_w_) * grid_h_);
}

bool SparseDepthMap::insert(const DepthSample& s) {
  if (!(s.depth > 0) || !(s.pixel.u >= 0) || !(s.pixel.v >= 0) || s.pixel.u > width_ - 1 ||
      s.pixel.v > height_ - 1) {
    return false;
  }
  const int gx = static_cast<int>(s.pixel.u) / cell_size_;
  const int gy = static_cast<int>(s.pixel.v) / cell_size_;
  auto& slot = cells_[static_cast<size_t>(gy) * grid_w_ + gx];
  if (!slot) {
    slot = s;
    ++count_;
  } else if (s.depth < slot->depth) {
    slot = s;
  }
  return true;
}

std::vector<DepthSample> SparseDepthMap::samples() const {
  std::vector<DepthSample> out;
  out.reserve(count_);
  for (const auto& c : cells_)
    if (c) out.push_back(*c);
  return out;
}

SparseDepthMap build_sparse_depth(const LidarScan& scan, const RigCalibration& rig, int view,
                                  const Pose& body_from_lidar, int cell_size) {
  if (scan.points.empty()) throw Error(ErrorCode::EmptyScan, "scan has no points");
  const CameraModel& cam = rig.camera(view);
  const Pose cam_from_lidar = rig.cam_from_body(view) * body_from_lidar;
  SparseDepthMap map(view, cam.width, cam.height, cell_size);
  for (const auto& p : scan.points) {
    const Vec3 pc = cam_from_lidar * p;
    if (auto px = try_project(cam, pc)) map.insert({*px, pc.z()});
  }
  return map;
}

std::vector<DepthSample> depth_neighbors(const SparseDepthMap& map, const Pixel& px, double radius) {
  std::vector<DepthSample> out;
  if (map.empty() || radius < 0) return out;
  const int cs = map.cell_size();
  const int gx0 = std::max(0, static_cast<int>(std::floor((px.u - radius) / cs)));
  const int gy0 = std::max(0, static_cast<int>(std::floor((px.v - radius) / cs)));
  const int gx1 = std::min(map.grid_width() - 1, static_cast<int>(std::floor((px.u + radius) / cs)));
  const int gy1 = std::min(map.grid_height() - 1, static_cast<int>(std::floor((px.v + radius) / cs)));
  const double r2 = radius * radius;
  for (int gy = gy0; gy <= gy1; ++gy) {
    for (int gx = gx0; gx <= gx1; ++gx) {
      const auto& c = map.cell(gx, gy);
      if (!c) continue;
      const double du = c->pixel.u - px.u;
      const double dv = c->pixel.v - px.v;
      if (du * du + dv * dv <= r2) out.push_back(*c);
    }
  }
  return out;
}

std::optional<double> depth_lookup(const SparseDepthMap& map, const Pixel& px, double radius) {
  std::optional<double> best;
  double best_d2 = 0.0;
  for (const auto& s : depth_neighbors(map, px, radius)) {
    const double d2 = (s.pixel.vec() - px.vec()).squaredNorm();
    if (!best || d2 < best_d2 || (d2 == best_d2 && s.depth < *best)) {
      best = s.depth;
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace pdlvo
