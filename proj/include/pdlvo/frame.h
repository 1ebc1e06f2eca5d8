#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pdlvo/image.h"
#include "pdlvo/keypoints.h"
#include "pdlvo/rig.h"

namespace pdlvo {

// One synchronized capture of all five views.
struct Frame {
  std::int64_t id = 0;
  double timestamp = 0.0;
  std::array<ImagePyramid, kNumViews> images;

  const Image& image(int view, int level = 0) const {
    return images[static_cast<size_t>(view - 1)].level(level);
  }
};

Frame make_frame(std::int64_t id, double timestamp, std::array<Image, kNumViews> views,
                 int pyramid_levels);

struct Keyframe {
  Frame frame;
  Pose world_from_body;
  // Keypoints hosted in each view; depths are fixed at selection time.
  std::array<std::vector<Keypoint>, kNumViews> keypoints;
  // Median-filtered copies of the images; source of the reference
  // gradients used in Jacobians. Empty pyramids fall back to `frame`.
  std::array<ImagePyramid, kNumViews> reference;

  std::int64_t id() const { return frame.id; }
  size_t keypoint_count() const;
};

// Fills kf.reference from kf.frame (3x3 median, same pyramid depth).
void build_reference(Keyframe& kf);

}  // namespace pdlvo
