#include "pdlvo/sequence.h"

#include <cmath>

namespace pdlvo {

namespace {

SimConfig with_clear_region(SimConfig cfg, const std::vector<Pose>& poses, double margin) {
  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  for (const auto& p : poses) {
    const Vec2 xz(p.translation().x(), p.translation().z());
    lo = lo.cwiseMin(xz);
    hi = hi.cwiseMax(xz);
  }
  cfg.clear_min = lo - Vec2::Constant(margin);
  cfg.clear_max = hi + Vec2::Constant(margin);
  return cfg;
}

}  // namespace

SyntheticSequence::SyntheticSequence(const SequenceSpec& spec)
    : spec_(spec),
      poses_(make_trajectory(spec.kind, spec.frames, spec.trajectory)),
      rig_(make_panoramic_rig(spec.sim.camera, spec.sim.rig_radius)) {
  spec_.sim = with_clear_region(spec.sim, poses_, spec.clear_margin);
  rig_ = RigCalibration({spec_.sim.camera, spec_.sim.camera, spec_.sim.camera, spec_.sim.camera,
                         spec_.sim.camera},
                        {rig_.cam_from_body(1), rig_.cam_from_body(2), rig_.cam_from_body(3),
                         rig_.cam_from_body(4), rig_.cam_from_body(5)},
                        spec_.sim.body_from_lidar);
  scene_ = make_scene(spec.seed, spec_.sim);
}

Trajectory SyntheticSequence::ground_truth() const {
  Trajectory gt;
  for (size_t i = 0; i < poses_.size(); ++i) gt.push_back(timestamp(i), poses_[i]);
  return gt;
}

FrameInput SyntheticSequence::frame(size_t i) const {
  FrameInput in;
  in.id = static_cast<std::int64_t>(i);
  in.timestamp = timestamp(i);
  const std::uint64_t noise_seed = spec_.seed * 1000003ULL + i;
  in.images = render_frame(scene_, rig_, poses_[i], spec_.sim, noise_seed);
  for (int v = 1; v <= kNumViews; ++v) {
    Image& img = in.images[static_cast<size_t>(v - 1)];
    const int k = static_cast<int>(i);
    if (v == spec_.blank_view && k >= spec_.blank_begin && k < spec_.blank_begin + spec_.blank_count) {
      saturate(img);
    }
    if (spec_.salt_pepper > 0 && i > 0) {
      add_salt_and_pepper(img, spec_.salt_pepper, noise_seed * 7 + static_cast<std::uint64_t>(v));
    }
    for (double& x : img.data()) x = std::round(x);
  }
  in.scan = simulate_lidar(scene_, poses_[i], spec_.sim, noise_seed);
  in.scan.timestamp = in.timestamp;
  return in;
}

void write_dataset(const SyntheticSequence& seq, const std::filesystem::path& dir) {
  DatasetWriter writer(dir, seq.rig());
  for (size_t i = 0; i < seq.size(); ++i) {
    FrameInput in = seq.frame(i);
    writer.add_frame(in.id, in.timestamp, in.images);
    writer.add_scan(in.id, in.timestamp, in.scan);
  }
  save_trajectory(seq.ground_truth(), dir / "groundtruth.txt");
}

}  // namespace pdlvo
