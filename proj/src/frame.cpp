#include "pdlvo/frame.h"

namespace pdlvo {

Frame make_frame(std::int64_t id, double timestamp, std::array<Image, kNumViews> views,
                 int pyramid_levels) {
  Frame f;
  f.id = id;
  f.timestamp = timestamp;
  for (size_t i = 0; i < views.size(); ++i) {
    f.images[i] = ImagePyramid(std::move(views[i]), pyramid_levels);
  }
  return f;
}

size_t Keyframe::keypoint_count() const {
  size_t n = 0;
  for (const auto& v : keypoints) n += v.size();
  return n;
}

void build_reference(Keyframe& kf) {
  for (size_t v = 0; v < kNumViews; ++v) {
    const ImagePyramid& src = kf.frame.images[v];
    kf.reference[v] = ImagePyramid(median3(src.level(0)), src.levels());
  }
}

}  // namespace pdlvo
