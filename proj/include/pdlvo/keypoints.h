#pragma once

#include <array>
#include <vector>

#include "pdlvo/association.h"
#include "pdlvo/image.h"

namespace pdlvo {

// Residual pattern shared by tracking and bundle adjustment: the eight
// DSO-style offsets around (and including) the keypoint.
inline constexpr int kPatternSize = 8;
inline constexpr std::array<std::array<int, 2>, kPatternSize> kPattern = {
    {{0, -2}, {-1, -1}, {1, -1}, {-2, 0}, {0, 0}, {2, 0}, {-1, 1}, {0, 2}}};
inline constexpr int kPatternRadius = 2;
// Pattern radius, the one-pixel sampling margin, and one pixel of slack so
// round-off in a reprojection cannot push a pattern pixel out.
inline constexpr int kKeypointMargin = kPatternRadius + 2;

struct Keypoint {
  int view = 1;
  Pixel pixel;       // level-0 pixel, integer valued for selected points
  double depth = 0;  // meters, fixed for the lifetime of the keypoint
  std::array<double, kPatternSize> pattern{};  // level-0 host intensities
};

struct KeypointConfig {
  int block_size = 32;
  double gradient_offset = 7.0;  // added to the block median gradient
  double depth_radius = 2.0;     // pixels
  int max_points = 400;
  // Gradients for selection are taken on a 3x3 median-filtered copy when
  // set, so isolated impulse pixels cannot win a block.
  bool median_prefilter = true;
  // Depth-edge rejection: every LiDAR sample within `support_radius` must
  // agree with the assigned depth to this relative tolerance, and the
  // samples must straddle the pixel horizontally and vertically. A
  // non-positive tolerance disables the check.
  double depth_consistency = 0.05;
  double support_radius = 3.0;
};

// True when the depth samples around px pass the depth-edge check above.
bool depth_supported(const SparseDepthMap& depth, const Pixel& px, double assigned,
                     const KeypointConfig& cfg);

// 3x3 median filter; border pixels use the clamped neighbourhood.
Image median3(const Image& img);

// Central-difference gradient magnitude at an integer pixel.
double gradient_magnitude(const Image& img, int x, int y);

// Median gradient of the block plus the configured offset.
double block_threshold(const Image& img, int block_x, int block_y, const KeypointConfig& cfg);

std::vector<Keypoint> select_keypoints(const Image& img, const SparseDepthMap& depth,
                                       const KeypointConfig& cfg);

}  // namespace pdlvo
