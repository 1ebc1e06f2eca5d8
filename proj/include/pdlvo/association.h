#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "pdlvo/geometry.h"
#include "pdlvo/rig.h"

namespace pdlvo {

struct LidarScan {
  std::vector<Vec3> points;  // LiDAR frame, meters
  double timestamp = 0.0;
};

// ASCII, one "x y z" per line; blank lines and '#' comments are skipped.
LidarScan load_scan(const std::filesystem::path& path, double timestamp = 0.0);
void save_scan(const LidarScan& scan, const std::filesystem::path& path);

struct DepthSample {
  Pixel pixel;
  double depth = 0.0;
};

// Per-view LiDAR depth, bucketed on a grid of `cell_size` pixel cells with
// at most one (the nearest) sample per cell.
class SparseDepthMap {
 public:
  SparseDepthMap() = default;
  SparseDepthMap(int view, int image_width, int image_height, int cell_size);

  int view() const { return view_; }
  int cell_size() const { return cell_size_; }
  int grid_width() const { return grid_w_; }
  int grid_height() const { return grid_h_; }
  size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  const std::optional<DepthSample>& cell(int gx, int gy) const {
    return cells_[static_cast<size_t>(gy) * grid_w_ + gx];
  }

  // Keeps the sample if its cell is empty or holds a larger depth.
  // Returns false when the pixel falls outside the image.
  bool insert(const DepthSample& s);

  std::vector<DepthSample> samples() const;

 private:
  int view_ = 0;
  int width_ = 0;
  int height_ = 0;
  int cell_size_ = 1;
  int grid_w_ = 0;
  int grid_h_ = 0;
  size_t count_ = 0;
  std::vector<std::optional<DepthSample>> cells_;
};

inline constexpr int kDefaultDepthCellSize = 2;

// Projects every scan point into `view`; for each grid cell only the
// smallest-depth candidate survives. Throws EmptyScan.
SparseDepthMap build_sparse_depth(const LidarScan& scan, const RigCalibration& rig, int view,
                                  const Pose& body_from_lidar,
                                  int cell_size = kDefaultDepthCellSize);

// All stored samples with pixel distance <= radius, in grid order.
std::vector<DepthSample> depth_neighbors(const SparseDepthMap& map, const Pixel& px, double radius);

// Depth of the nearest stored sample with pixel distance <= radius.
std::optional<double> depth_lookup(const SparseDepthMap& map, const Pixel& px, double radius);

}  // namespace pdlvo
